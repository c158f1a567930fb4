use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::json;

use autocombat_core::canned::{build_store, load_responses};
use autocombat_core::curation::{curate as curate_thread, stratified_sample, BenchmarkInstance, CurationPolicy, SampleOptions};
use autocombat_core::harness::annotations::{agreement, annotators, read_annotations, IntentLabel};
use autocombat_core::harness::{
    aggregate, compare_baseline, overall_used_question_rate, read_results, write_reports, AggregateOptions, CorpusMode,
    InstanceResult, ReportBundle,
};
use autocombat_core::pipeline::{run_pipeline, PipelineOptions, PipelineOutput};
use autocombat_core::post_model::AnswerThread;
use autocombat_core::provider::{Decoding, ModelProvider, ProvidersFile, RetryPolicy};
use autocombat_metrics::{score_pair, tokenize_words, CorpusAccumulator, IdfTable, Metric};

use crate::io::{read_jsonl, read_texts, write_jsonl, write_text};
use crate::{CorpusModeArg, ProviderArgs, SampleArgs};

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start async runtime")
}

fn load_provider(args: &ProviderArgs) -> Result<Arc<dyn ModelProvider>> {
    let file = ProvidersFile::load(&args.config)?;
    let cfg = file.select(args.provider.as_deref())?;
    Ok(cfg.build()?)
}

fn retry_policy(args: &ProviderArgs) -> RetryPolicy {
    RetryPolicy {
        max_attempts: args.max_attempts.max(1),
        ..RetryPolicy::default()
    }
}

fn corpus_mode(arg: CorpusModeArg) -> CorpusMode {
    match arg {
        CorpusModeArg::Macro => CorpusMode::Macro,
        CorpusModeArg::Pooled => CorpusMode::Pooled,
    }
}

/// Curate every thread, skipping (and reporting) threads that cannot become
/// instances, then sample if asked.
fn curate_threads(threads: &[AnswerThread], sample: &SampleArgs) -> Result<Vec<BenchmarkInstance>> {
    let policy = CurationPolicy {
        keep_unaddressed: !sample.drop_unaddressed,
    };
    let mut instances = Vec::new();
    let mut skipped = 0;
    for t in threads {
        match curate_thread(t, &policy) {
            Ok(i) => instances.push(i),
            Err(e) => {
                skipped += 1;
                tracing::warn!("skipped: {e}");
            }
        }
    }
    eprintln!("curated {} instance(s), skipped {skipped}", instances.len());
    match sample.per_quartile {
        Some(k) => {
            let options = SampleOptions {
                include_other_languages: sample.include_other_languages,
            };
            Ok(stratified_sample(&instances, k, sample.seed, options)?)
        }
        None => Ok(instances),
    }
}

pub fn curate(input: &Path, out: &Path, sample: &SampleArgs) -> Result<()> {
    let threads: Vec<AnswerThread> = read_jsonl(input)?;
    let instances = curate_threads(&threads, sample)?;
    write_jsonl(out, &instances)
}

fn pipeline_options(args: &ProviderArgs, classify: bool, refine: bool, mode: CorpusMode) -> PipelineOptions {
    PipelineOptions {
        retry: retry_policy(args),
        concurrency: args.concurrency,
        classify,
        refine,
        aggregate: AggregateOptions {
            corpus_mode: mode,
            primary_annotator: None,
        },
    }
}

fn report_failures(output: &PipelineOutput) {
    for f in &output.failures {
        eprintln!("{} failed at {:?}: {}", f.instance_id, f.stage, f.diagnostics.join(" | "));
    }
}

pub fn classify(bench: &Path, out: &Path, results: Option<&Path>, args: &ProviderArgs) -> Result<()> {
    let instances: Vec<BenchmarkInstance> = read_jsonl(bench)?;
    let provider = load_provider(args)?;
    let options = pipeline_options(args, true, false, CorpusMode::Macro);
    let output = runtime()?.block_on(run_pipeline(&instances, provider, &options));
    report_failures(&output);
    let mut csv = String::from("quartile,instances,tp,fp,tn,fn,accuracy,precision,recall,f1,specificity,mcc\n");
    for r in &output.aggregate.reports {
        let (Some(c), Some(s)) = (&r.confusion, &r.classification) else {
            continue;
        };
        let values: Vec<String> = s.values().iter().map(|v| format!("{v:.4}")).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.quartile,
            r.instances,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            values.join(",")
        ));
    }
    write_text(out, &csv)?;
    if let Some(path) = results {
        write_jsonl(path, &output.results)?;
    }
    Ok(())
}

pub fn score(hyp: &Path, reference: &Path, report: &Path) -> Result<()> {
    let hyps = read_texts(hyp)?;
    let refs = read_texts(reference)?;
    if hyps.len() != refs.len() {
        bail!("{} hypotheses but {} references", hyps.len(), refs.len());
    }
    if hyps.is_empty() {
        bail!("no pairs to score");
    }
    let docs: Vec<Vec<String>> = refs.iter().map(|r| tokenize_words(r)).collect();
    let idf = IdfTable::fit(&docs);
    let mut acc = CorpusAccumulator::new();
    let mut pairs = Vec::new();
    for (i, (h, r)) in hyps.iter().zip(&refs).enumerate() {
        let s = score_pair(h, r, &idf).with_context(|| format!("pair {}", i + 1))?;
        acc.add(h, r, &s);
        pairs.push(s);
    }
    let mean = acc.means().expect("at least one pair");
    let pooled_bleu = acc.pooled_corpus_bleu().unwrap_or(0.0);
    let pooled_chrf = acc.pooled_chrf().unwrap_or(0.0);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["pair".to_string()];
    header.extend(Metric::ALL.iter().map(|m| m.label().to_string()));
    header.push("flags".into());
    w.write_record(&header)?;
    for (i, s) in pairs.iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(Metric::ALL.iter().map(|m| format!("{:.4}", s.get(*m))));
        row.push(s.flags.iter().map(|f| format!("{f:?}")).collect::<Vec<_>>().join(";"));
        w.write_record(&row)?;
    }
    let mut row = vec!["mean".to_string()];
    row.extend(Metric::ALL.iter().map(|m| format!("{:.4}", mean.get(*m))));
    row.push(String::new());
    w.write_record(&row)?;
    let mut row = vec!["corpus".to_string()];
    row.extend(Metric::ALL.iter().map(|m| match m {
        Metric::CorpusBleu => format!("{pooled_bleu:.4}"),
        Metric::Chrf => format!("{pooled_chrf:.4}"),
        _ => String::new(),
    }));
    row.push(String::new());
    w.write_record(&row)?;
    write_text(report, &String::from_utf8(w.into_inner()?)?)?;

    let doc = json!({
        "pairs": pairs,
        "mean": mean,
        "corpus": {"corpus_bleu": pooled_bleu, "chrf": pooled_chrf},
    });
    write_text(&report.with_extension("json"), &(serde_json::to_string_pretty(&doc)? + "\n"))
}

fn load_annotations(path: Option<&Path>) -> Result<Vec<IntentLabel>> {
    match path {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            Ok(read_annotations(f)?)
        }
        None => Ok(Vec::new()),
    }
}

fn load_results(path: &Path) -> Result<Vec<InstanceResult>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_results(std::io::BufReader::new(f)).with_context(|| path.display().to_string())
}

fn build_bundle(results: &[InstanceResult], labels: &[IntentLabel], options: &AggregateOptions) -> Result<ReportBundle> {
    let agg = aggregate(results, labels, options);
    for w in &agg.warnings {
        eprintln!("warning: {w}");
    }
    let names = annotators(labels);
    let mut agreements = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            match agreement(labels, a, b) {
                Ok(ag) => agreements.push(ag),
                Err(e) => eprintln!("warning: no agreement for {a}/{b}: {e}"),
            }
        }
    }
    let bundle = ReportBundle {
        aggregate: agg,
        overall_used_question_rate: overall_used_question_rate(results),
        agreement: agreements,
        baseline: None,
    };
    Ok(bundle)
}

pub struct EvaluateArgs<'a> {
    pub results: &'a Path,
    pub annotations: Option<&'a Path>,
    pub baseline: Option<&'a Path>,
    pub out: &'a Path,
    pub corpus_mode: CorpusModeArg,
    pub primary_annotator: Option<String>,
    pub single_snippet_only: bool,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let results = load_results(args.results)?;
    let labels = load_annotations(args.annotations)?;
    let options = AggregateOptions {
        corpus_mode: corpus_mode(args.corpus_mode),
        primary_annotator: args.primary_annotator,
    };
    let mut bundle = build_bundle(&results, &labels, &options)?;
    if let Some(path) = args.baseline {
        let baseline = load_results(path)?;
        bundle.baseline = Some(compare_baseline(&results, &baseline, args.single_snippet_only)?);
    }
    for p in write_reports(args.out, &bundle)? {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn serve(config: &Path) -> Result<()> {
    let cfg = autocombat_service::ServiceConfig::load(config)?;
    let provider = cfg.provider.build()?;
    runtime()?
        .block_on(autocombat_service::serve(&cfg, provider))
        .map_err(|e| anyhow::anyhow!(e))
}

pub struct RunArgs<'a> {
    pub threads: Option<&'a Path>,
    pub bench: Option<&'a Path>,
    pub out: &'a Path,
    pub annotations: Option<&'a Path>,
    pub corpus_mode: CorpusModeArg,
    pub sample: &'a SampleArgs,
    pub provider: &'a ProviderArgs,
}

pub fn run(args: RunArgs) -> Result<()> {
    let instances = match (args.threads, args.bench) {
        (Some(t), _) => curate_threads(&read_jsonl::<AnswerThread>(t)?, args.sample)?,
        (None, Some(b)) => read_jsonl(b)?,
        (None, None) => bail!("--threads or --bench is required"),
    };
    let labels = load_annotations(args.annotations)?;
    let provider = load_provider(args.provider)?;
    let mode = corpus_mode(args.corpus_mode);
    let options = pipeline_options(args.provider, true, true, mode);
    let output = runtime()?.block_on(run_pipeline(&instances, provider, &options));
    report_failures(&output);

    write_jsonl(&args.out.join("benchmark.jsonl"), &instances)?;
    write_jsonl(&args.out.join("classifications.jsonl"), &output.classifications)?;
    write_jsonl(&args.out.join("refinements.jsonl"), &output.refinements)?;
    write_jsonl(&args.out.join("results.jsonl"), &output.results)?;
    write_jsonl(&args.out.join("failures.jsonl"), &output.failures)?;
    let bundle = build_bundle(&output.results, &labels, &options.aggregate)?;
    write_reports(&args.out.join("report"), &bundle)?;
    eprintln!(
        "{} instance(s), {} refined, {} failure(s)",
        instances.len(),
        output.refinements.len(),
        output.failures.len()
    );
    Ok(())
}

pub fn replay_build(bench: &Path, responses: &Path, model: &str, max_output_tokens: u32, out: &Path) -> Result<()> {
    let instances: Vec<BenchmarkInstance> = read_jsonl(bench)?;
    let canned = load_responses(responses)?;
    let store = build_store(&instances, &canned, &Decoding::new(model, max_output_tokens))?;
    write_text(out, &store.to_jsonl())?;
    eprintln!("{} transcript(s)", store.len());
    Ok(())
}
