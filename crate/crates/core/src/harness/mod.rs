//! Per-quartile aggregation of experiment results, intent-label statistics,
//! and baseline significance tests.

pub mod annotations;
mod report;
pub mod stats;

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use autocombat_metrics::{CorpusAccumulator, Metric, PairScores};
use serde::{Deserialize, Serialize};

use crate::concern::{score, ClassificationScores, ConfusionCounts};
use crate::post_model::{segment_answer, QuartileTag, SegmentKind};
use annotations::{annotators, labels_of, Intent, IntentLabel};
use stats::{mann_whitney_u, StatsError};

pub use report::{write_baseline_csv, write_reports, ReportBundle};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// One JSON line of experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub quartile: QuartileTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<PairScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub used_question: Option<bool>,
    /// Fenced code blocks in the original answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_blocks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("results line {line}: {reason}")]
pub struct ResultsError {
    pub line: usize,
    pub reason: String,
}

pub fn read_results<R: BufRead>(reader: R) -> Result<Vec<InstanceResult>, ResultsError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ResultsError {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ResultsError {
            line: line_no,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Whether the answer holds exactly one fenced code block.
pub fn is_single_snippet(body_markdown: &str) -> bool {
    segment_answer(body_markdown)
        .segments
        .iter()
        .filter(|s| s.kind == SegmentKind::Code)
        .count()
        == 1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    /// Every metric, corpus ones included, is the mean of per-pair values.
    #[default]
    Macro,
    /// SacreBLEU and chrF recomputed from statistics pooled over the quartile.
    Pooled,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregateOptions {
    pub corpus_mode: CorpusMode,
    /// Annotator whose labels feed the intent distribution; defaults to the
    /// first one appearing in the annotation file.
    pub primary_annotator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentDistribution {
    pub labeled: usize,
    pub yes: f64,
    pub partially_yes: f64,
    pub no: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileReport {
    pub quartile: QuartileTag,
    pub instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationScores>,
    pub scored_pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntactic: Option<PairScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_distribution: Option<IntentDistribution>,
    /// Percentage of instances whose model reported using the question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub used_question_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub corpus_mode: CorpusMode,
    pub reports: Vec<QuartileReport>,
    pub warnings: Vec<String>,
}

fn percent(part: usize, whole: usize) -> f64 {
    100.0 * part as f64 / whole as f64
}

/// Group results by quartile and summarize each group. Results are sorted by
/// instance id first, so the output does not depend on input order.
pub fn aggregate(results: &[InstanceResult], intents: &[IntentLabel], options: &AggregateOptions) -> Aggregate {
    let mut warnings = Vec::new();
    let mut by_q: BTreeMap<QuartileTag, Vec<&InstanceResult>> = BTreeMap::new();
    for r in results {
        by_q.entry(r.quartile).or_default().push(r);
    }
    let primary = options
        .primary_annotator
        .clone()
        .or_else(|| annotators(intents).into_iter().next());
    let primary_labels: BTreeMap<&str, Intent> = primary.as_deref().map(|a| labels_of(intents, a)).unwrap_or_default();

    let mut reports = Vec::new();
    for q in QuartileTag::ALL {
        let Some(group) = by_q.get_mut(&q) else {
            warnings.push(format!("{q}: no instances, omitted"));
            continue;
        };
        group.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));

        let confusion = group
            .iter()
            .filter_map(|r| r.confusion)
            .reduce(|a, b| a.merge(&b));
        let classification = match confusion.map(|c| score(&c)) {
            Some(Ok(s)) => Some(s),
            Some(Err(e)) => {
                warnings.push(format!("{q}: {e}"));
                None
            }
            None => None,
        };

        let mut acc = CorpusAccumulator::new();
        let mut texts_complete = true;
        for r in group.iter() {
            if let Some(s) = &r.scores {
                match (&r.hypothesis, &r.reference) {
                    (Some(h), Some(rf)) if options.corpus_mode == CorpusMode::Pooled => acc.add(h, rf, s),
                    _ => {
                        texts_complete = false;
                        acc.add_scores(s)
                    }
                }
            }
        }
        let mut syntactic = acc.means();
        if let (Some(s), CorpusMode::Pooled) = (&mut syntactic, options.corpus_mode) {
            if texts_complete {
                s.corpus_bleu = acc.pooled_corpus_bleu().unwrap_or(0.0);
                s.chrf = acc.pooled_chrf().unwrap_or(0.0);
            } else {
                warnings.push(format!(
                    "{q}: pooled corpus metrics need hypothesis and reference text on every scored result; using means"
                ));
            }
        }

        let labeled: Vec<Intent> = group
            .iter()
            .filter_map(|r| primary_labels.get(r.instance_id.as_str()).copied())
            .collect();
        let intent_distribution = (!labeled.is_empty()).then(|| {
            let count = |want: Intent| labeled.iter().filter(|l| **l == want).count();
            IntentDistribution {
                labeled: labeled.len(),
                yes: percent(count(Intent::Yes), labeled.len()),
                partially_yes: percent(count(Intent::PartiallyYes), labeled.len()),
                no: percent(count(Intent::No), labeled.len()),
            }
        });

        let flags: Vec<bool> = group.iter().filter_map(|r| r.used_question).collect();
        let used_question_rate = (!flags.is_empty()).then(|| percent(flags.iter().filter(|f| **f).count(), flags.len()));

        reports.push(QuartileReport {
            quartile: q,
            instances: group.len(),
            confusion,
            classification,
            scored_pairs: acc.count(),
            syntactic,
            intent_distribution,
            used_question_rate,
        });
    }
    Aggregate {
        corpus_mode: options.corpus_mode,
        reports,
        warnings,
    }
}

/// Share of all instances (across quartiles) whose model used the question.
pub fn overall_used_question_rate(results: &[InstanceResult]) -> Option<f64> {
    let flags: Vec<bool> = results.iter().filter_map(|r| r.used_question).collect();
    (!flags.is_empty()).then(|| percent(flags.iter().filter(|f| **f).count(), flags.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub metric: Metric,
    pub ours_mean: f64,
    pub baseline_mean: f64,
    pub u: f64,
    pub p_value: f64,
    pub significant: bool,
    /// The baseline mean is better, taking TER's direction into account.
    pub favors_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub pairs: usize,
    pub rows: Vec<BaselineRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("result lists differ in length ({ours} vs {baseline})")]
    LengthMismatch { ours: usize, baseline: usize },
    #[error("instance {0} has no counterpart in the other list")]
    Unpaired(String),
    #[error("instance {0} has no scores")]
    MissingScores(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Pair results by instance id and test every metric. With
/// `single_snippet_only`, instances whose `code_blocks` is known and not 1
/// are left out.
pub fn compare_baseline(
    ours: &[InstanceResult],
    baseline: &[InstanceResult],
    single_snippet_only: bool,
) -> Result<BaselineComparison, BaselineError> {
    if ours.len() != baseline.len() {
        return Err(BaselineError::LengthMismatch {
            ours: ours.len(),
            baseline: baseline.len(),
        });
    }
    let theirs: HashMap<&str, &InstanceResult> = baseline.iter().map(|r| (r.instance_id.as_str(), r)).collect();
    let mut ids: Vec<&InstanceResult> = ours.iter().collect();
    ids.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let mut pairs: Vec<(&PairScores, &PairScores)> = Vec::new();
    for o in ids {
        let b = theirs
            .get(o.instance_id.as_str())
            .ok_or_else(|| BaselineError::Unpaired(o.instance_id.clone()))?;
        if single_snippet_only && o.code_blocks.is_some_and(|n| n != 1) {
            continue;
        }
        let so = o.scores.as_ref().ok_or_else(|| BaselineError::MissingScores(o.instance_id.clone()))?;
        let sb = b.scores.as_ref().ok_or_else(|| BaselineError::MissingScores(b.instance_id.clone()))?;
        pairs.push((so, sb));
    }
    let mut rows = Vec::new();
    for m in Metric::ALL {
        let a: Vec<f64> = pairs.iter().map(|(o, _)| o.get(m)).collect();
        let b: Vec<f64> = pairs.iter().map(|(_, t)| t.get(m)).collect();
        let test = mann_whitney_u(&a, &b)?;
        let ours_mean = a.iter().sum::<f64>() / a.len() as f64;
        let baseline_mean = b.iter().sum::<f64>() / b.len() as f64;
        let favors_baseline = if m.higher_is_better() {
            baseline_mean > ours_mean
        } else {
            baseline_mean < ours_mean
        };
        rows.push(BaselineRow {
            metric: m,
            ours_mean,
            baseline_mean,
            u: test.u,
            p_value: test.p_two_sided,
            significant: test.p_two_sided < SIGNIFICANCE_LEVEL,
            favors_baseline,
        });
    }
    Ok(BaselineComparison {
        pairs: pairs.len(),
        rows,
    })
}
