//! End-to-end experiment run over curated instances: classify comments,
//! refine the answer, score it against the human revision, and aggregate.

use std::sync::Arc;

use autocombat_metrics::{score_pair, tokenize_words, IdfTable};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::concern::{confusion, identify_concerns, instance_request, ConfusionCounts, Identification, IdentifyError};
use crate::curation::BenchmarkInstance;
use crate::harness::{aggregate, Aggregate, AggregateOptions, InstanceResult};
use crate::post_model::QuartileTag;
use crate::provider::{ModelProvider, RetryPolicy};
use crate::refiner::{refine, PolicyFlag, RefinementResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Classify,
    Refine,
    Score,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub instance_id: String,
    pub stage: Stage,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedInstance {
    pub instance_id: String,
    pub quartile: QuartileTag,
    pub identification: Identification,
    pub confusion: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedInstance {
    pub instance_id: String,
    pub quartile: QuartileTag,
    pub request_hash: String,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<PolicyFlag>,
    pub result: RefinementResult,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub retry: RetryPolicy,
    /// Instances processed at once.
    pub concurrency: usize,
    pub classify: bool,
    pub refine: bool,
    pub aggregate: AggregateOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            retry: RetryPolicy::default(),
            concurrency: 4,
            classify: true,
            refine: true,
            aggregate: AggregateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub results: Vec<InstanceResult>,
    pub classifications: Vec<ClassifiedInstance>,
    pub refinements: Vec<RefinedInstance>,
    pub failures: Vec<StageFailure>,
    pub aggregate: Aggregate,
}

impl PipelineOutput {
    /// Per-instance results as JSON lines.
    pub fn results_jsonl(&self) -> String {
        to_jsonl(&self.results)
    }
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// Classify one instance's comments and tally them against the gold labels.
/// `Ok(None)` when the instance has no comments.
pub async fn classify_instance(
    instance: &BenchmarkInstance,
    provider: &dyn ModelProvider,
    retry: &RetryPolicy,
) -> Result<Option<ClassifiedInstance>, StageFailure> {
    let fail = |diagnostics: Vec<String>| StageFailure {
        instance_id: instance.instance_id().to_string(),
        stage: Stage::Classify,
        diagnostics,
    };
    let identification = match identify_concerns(instance, provider, retry).await {
        Ok(id) => id,
        Err(IdentifyError::NoComments(_)) => return Ok(None),
        Err(IdentifyError::Failed { attempts }) => {
            return Err(fail(attempts.errors.iter().map(|e| e.to_string()).collect()));
        }
    };
    let counts = confusion(&identification.predictions, &instance.relevant_comments).map_err(|e| fail(vec![e.to_string()]))?;
    Ok(Some(ClassifiedInstance {
        instance_id: instance.instance_id().to_string(),
        quartile: instance.quartile,
        identification,
        confusion: counts,
    }))
}

pub async fn refine_instance(
    instance: &BenchmarkInstance,
    provider: &dyn ModelProvider,
    retry: &RetryPolicy,
) -> Result<RefinedInstance, StageFailure> {
    let refinement = refine(&instance_request(instance), provider, retry)
        .await
        .map_err(|e| StageFailure {
            instance_id: instance.instance_id().to_string(),
            stage: Stage::Refine,
            diagnostics: e.diagnostics(),
        })?;
    Ok(RefinedInstance {
        instance_id: instance.instance_id().to_string(),
        quartile: instance.quartile,
        request_hash: refinement.request_hash,
        attempts: refinement.attempts,
        flags: refinement.flags,
        result: refinement.result,
    })
}

/// IDF statistics over the reference (human-revised) answers.
pub fn reference_idf(instances: &[BenchmarkInstance]) -> IdfTable {
    let docs: Vec<Vec<String>> = instances.iter().map(|i| tokenize_words(&i.v_final.body_markdown)).collect();
    IdfTable::fit(&docs)
}

struct Partial {
    classified: Option<Result<Option<ClassifiedInstance>, StageFailure>>,
    refined: Option<Result<RefinedInstance, StageFailure>>,
}

/// Run the enabled stages over every instance. Output order follows input
/// order regardless of completion order.
pub async fn run_pipeline(
    instances: &[BenchmarkInstance],
    provider: Arc<dyn ModelProvider>,
    options: &PipelineOptions,
) -> PipelineOutput {
    let gate = Arc::new(Semaphore::new(options.concurrency.max(1)));
    let mut tasks = JoinSet::new();
    for (idx, inst) in instances.iter().enumerate() {
        let inst = inst.clone();
        let provider = Arc::clone(&provider);
        let gate = Arc::clone(&gate);
        let retry = options.retry;
        let (do_classify, do_refine) = (options.classify, options.refine);
        tasks.spawn(async move {
            let _permit = gate.acquire_owned().await.expect("semaphore is never closed");
            let classified = if do_classify {
                Some(classify_instance(&inst, provider.as_ref(), &retry).await)
            } else {
                None
            };
            let refined = if do_refine {
                Some(refine_instance(&inst, provider.as_ref(), &retry).await)
            } else {
                None
            };
            (idx, Partial { classified, refined })
        });
    }
    let mut partials: Vec<Option<Partial>> = (0..instances.len()).map(|_| None).collect();
    while let Some(joined) = tasks.join_next().await {
        let (idx, p) = joined.expect("pipeline task panicked");
        partials[idx] = Some(p);
    }

    let idf = reference_idf(instances);
    let mut results = Vec::new();
    let mut classifications = Vec::new();
    let mut refinements = Vec::new();
    let mut failures = Vec::new();
    for (inst, partial) in instances.iter().zip(partials) {
        let partial = partial.expect("every task reports back");
        let mut result = InstanceResult {
            instance_id: inst.instance_id().to_string(),
            quartile: inst.quartile,
            confusion: None,
            scores: None,
            hypothesis: None,
            reference: None,
            used_question: None,
            code_blocks: Some(inst.v_init.code_block_count()),
        };
        match partial.classified {
            Some(Ok(Some(c))) => {
                result.confusion = Some(c.confusion);
                classifications.push(c);
            }
            Some(Err(f)) => failures.push(f),
            Some(Ok(None)) | None => {}
        }
        match partial.refined {
            Some(Ok(r)) => {
                let reference = &inst.v_final.body_markdown;
                match score_pair(&r.result.improved_answer, reference, &idf) {
                    Ok(s) => {
                        result.scores = Some(s);
                        result.hypothesis = Some(r.result.improved_answer.clone());
                        result.reference = Some(reference.clone());
                    }
                    Err(e) => failures.push(StageFailure {
                        instance_id: r.instance_id.clone(),
                        stage: Stage::Score,
                        diagnostics: vec![e.to_string()],
                    }),
                }
                result.used_question = Some(r.result.used_question);
                refinements.push(r);
            }
            Some(Err(f)) => failures.push(f),
            None => {}
        }
        results.push(result);
    }
    let aggregate = aggregate(&results, &[], &options.aggregate);
    PipelineOutput {
        results,
        classifications,
        refinements,
        failures,
        aggregate,
    }
}
