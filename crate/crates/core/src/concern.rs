//! Comment classification (IA vs GC) through the model, and scoring of the
//! predictions against gold labels.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curation::BenchmarkInstance;
use crate::post_model::{Comment, GoldLabel};
use crate::provider::{request_hash, Attempts, ModelProvider, RetryPolicy};
use crate::refiner::{
    strip_code_fence, user_prompt, AttemptError, FeedbackComment, Prompt, RefinementRequest, SchemaError, SchemaProblem,
    SYSTEM_PROMPT,
};

/// Appended to the refinement policy so that each concern names its source.
pub const SOURCE_INSTRUCTION: &str = "For each concern, also give the number of the comment it comes from: write each entry of \"concerns\" as {\"concern\": \"...\", \"comment\": <comment number>}.";

/// Minimum share of a concern's characters that must appear contiguously in
/// a comment for the text fallback to assign it there.
pub const FUZZY_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictedLabel {
    IA,
    GC,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcernPrediction {
    pub comment_id: String,
    pub predicted_label: PredictedLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concern_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedConcern {
    pub text: String,
    /// 1-based comment number reported by the model.
    pub comment: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatchDiagnostic {
    /// The reported comment number does not exist; the text fallback ran.
    IndexOutOfRange { concern: String, index: usize },
    /// Neither the number nor the text fallback located a source comment.
    Unmatched { concern: String, best_ratio: f64 },
}

pub fn concern_prompt(request: &RefinementRequest) -> Prompt {
    let mut p = crate::refiner::build_prompt(request);
    p.system = format!("{SYSTEM_PROMPT}\n\n{SOURCE_INSTRUCTION}");
    p.user = user_prompt(request);
    p
}

/// Read the `concerns` array; entries may be plain strings or
/// `{concern, comment}` objects. Other fields are ignored.
pub fn parse_concerns(raw: &str) -> Result<Vec<ExtractedConcern>, SchemaError> {
    let fail = |p: SchemaProblem| SchemaError {
        problems: vec![p],
        raw: raw.to_string(),
    };
    let v: Value = serde_json::from_str(strip_code_fence(raw)).map_err(|e| fail(SchemaProblem::NotJson(e.to_string())))?;
    let obj = v.as_object().ok_or_else(|| fail(SchemaProblem::NotAnObject))?;
    let items = obj
        .get("concerns")
        .ok_or_else(|| fail(SchemaProblem::Missing("concerns".into())))?
        .as_array()
        .ok_or_else(|| {
            fail(SchemaProblem::WrongType {
                field: "concerns".into(),
                expected: "array".into(),
            })
        })?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let parsed = match item {
            Value::String(s) => Some(ExtractedConcern {
                text: s.clone(),
                comment: None,
            }),
            Value::Object(o) => o.get("concern").and_then(Value::as_str).map(|text| ExtractedConcern {
                text: text.to_string(),
                comment: o.get("comment").and_then(|c| match c {
                    Value::Number(n) => n.as_u64().map(|n| n as usize),
                    Value::String(s) => s.trim().parse().ok(),
                    _ => None,
                }),
            }),
            _ => None,
        };
        match parsed {
            Some(c) if !c.text.trim().is_empty() => out.push(c),
            Some(_) => {}
            None => {
                return Err(fail(SchemaProblem::WrongType {
                    field: format!("concerns[{i}]"),
                    expected: "string or {concern, comment}".into(),
                }))
            }
        }
    }
    Ok(out)
}

/// Length in chars of the longest common substring.
fn longest_common_substring(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for &ca in a {
        for j in 0..b.len() {
            cur[j + 1] = if ca == b[j] { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Case-insensitive longest common substring length over the concern length.
pub fn match_ratio(concern: &str, comment: &str) -> f64 {
    let a: Vec<char> = concern.trim().to_lowercase().chars().collect();
    if a.is_empty() {
        return 0.0;
    }
    let b: Vec<char> = comment.to_lowercase().chars().collect();
    longest_common_substring(&a, &b) as f64 / a.len() as f64
}

/// Assign concerns to comments and derive one prediction per comment, in
/// comment order. A comment is IA when at least one concern maps to it.
pub fn assign_concerns(
    concerns: &[ExtractedConcern],
    comments: &[Comment],
) -> (Vec<ConcernPrediction>, Vec<MatchDiagnostic>) {
    let mut texts: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for c in concerns {
        let by_index = match c.comment {
            Some(n) if (1..=comments.len()).contains(&n) => Some(n - 1),
            Some(n) => {
                diagnostics.push(MatchDiagnostic::IndexOutOfRange {
                    concern: c.text.clone(),
                    index: n,
                });
                None
            }
            None => None,
        };
        let target = by_index.or_else(|| {
            let mut best: Option<(usize, f64)> = None;
            for (i, comment) in comments.iter().enumerate() {
                let r = match_ratio(&c.text, &comment.body);
                if best.is_none_or(|(_, b)| r > b) {
                    best = Some((i, r));
                }
            }
            match best {
                Some((i, r)) if r >= FUZZY_THRESHOLD => Some(i),
                other => {
                    diagnostics.push(MatchDiagnostic::Unmatched {
                        concern: c.text.clone(),
                        best_ratio: other.map_or(0.0, |(_, r)| r),
                    });
                    None
                }
            }
        });
        if let Some(i) = target {
            texts.entry(i).or_default().push(c.text.trim());
        }
    }
    let predictions = comments
        .iter()
        .enumerate()
        .map(|(i, c)| match texts.get(&i) {
            Some(t) => ConcernPrediction {
                comment_id: c.id.clone(),
                predicted_label: PredictedLabel::IA,
                concern_text: Some(t.join("; ")),
            },
            None => ConcernPrediction {
                comment_id: c.id.clone(),
                predicted_label: PredictedLabel::GC,
                concern_text: None,
            },
        })
        .collect();
    (predictions, diagnostics)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IdentifyError {
    #[error("instance {0} has no comments to classify")]
    NoComments(String),
    #[error("concern identification failed after {} attempt(s): {}", .attempts.errors.len(), .attempts.last())]
    Failed { attempts: Attempts<AttemptError> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub predictions: Vec<ConcernPrediction>,
    pub diagnostics: Vec<MatchDiagnostic>,
    pub request_hash: String,
}

pub fn instance_request(instance: &BenchmarkInstance) -> RefinementRequest {
    RefinementRequest {
        original_answer: instance.v_init.body_markdown.clone(),
        comments: instance.relevant_comments.iter().map(FeedbackComment::from).collect(),
        question: instance.question_text(),
    }
}

pub async fn identify_concerns(
    instance: &BenchmarkInstance,
    provider: &dyn ModelProvider,
    retry: &RetryPolicy,
) -> Result<Identification, IdentifyError> {
    if instance.relevant_comments.is_empty() {
        return Err(IdentifyError::NoComments(instance.instance_id().to_string()));
    }
    let prompt = concern_prompt(&instance_request(instance));
    let concerns = retry
        .run(|_| {
            let prompt = &prompt;
            async move {
                let completion = provider.complete(&prompt.system, &prompt.user).await?;
                Ok::<_, AttemptError>(parse_concerns(&completion.text)?)
            }
        })
        .await
        .map_err(|attempts| IdentifyError::Failed { attempts })?;
    let (predictions, diagnostics) = assign_concerns(&concerns, &instance.relevant_comments);
    Ok(Identification {
        predictions,
        diagnostics,
        request_hash: request_hash(&prompt.system, &prompt.user, provider.decoding()),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&self, other: &ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts::new(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn_ + other.fn_)
    }

    /// Counts obtained when every predicted label is flipped.
    pub fn flipped_predictions(&self) -> ConfusionCounts {
        ConfusionCounts::new(self.fn_, self.tn, self.fp, self.tp)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfusionError {
    #[error("prediction for unknown comment {0}")]
    UnknownComment(String),
    #[error("comment {0} has no IA/GC gold label")]
    NotBinary(String),
    #[error("comment {0} predicted more than once")]
    Duplicate(String),
}

/// Tally predictions against gold IA/GC labels.
pub fn confusion(predictions: &[ConcernPrediction], gold: &[Comment]) -> Result<ConfusionCounts, ConfusionError> {
    let labels: HashMap<&str, Option<GoldLabel>> = gold.iter().map(|c| (c.id.as_str(), c.gold_label)).collect();
    let mut seen = std::collections::HashSet::new();
    let mut counts = ConfusionCounts::default();
    for p in predictions {
        let label = labels
            .get(p.comment_id.as_str())
            .ok_or_else(|| ConfusionError::UnknownComment(p.comment_id.clone()))?;
        if !seen.insert(p.comment_id.as_str()) {
            return Err(ConfusionError::Duplicate(p.comment_id.clone()));
        }
        match (p.predicted_label, label) {
            (PredictedLabel::IA, Some(GoldLabel::IA)) => counts.tp += 1,
            (PredictedLabel::IA, Some(GoldLabel::GC)) => counts.fp += 1,
            (PredictedLabel::GC, Some(GoldLabel::GC)) => counts.tn += 1,
            (PredictedLabel::GC, Some(GoldLabel::IA)) => counts.fn_ += 1,
            _ => return Err(ConfusionError::NotBinary(p.comment_id.clone())),
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub mcc: f64,
    /// Scores whose denominator was zero and were set to 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

impl ClassificationScores {
    pub const COLUMNS: [&'static str; 6] = ["accuracy", "precision", "recall", "f1", "specificity", "mcc"];

    pub fn values(&self) -> [f64; 6] {
        [self.accuracy, self.precision, self.recall, self.f1, self.specificity, self.mcc]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot score an empty confusion matrix")]
pub struct EmptyCounts;

pub fn score(c: &ConfusionCounts) -> Result<ClassificationScores, EmptyCounts> {
    if c.total() == 0 {
        return Err(EmptyCounts);
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let mut undefined = Vec::new();
    let mut ratio = |name: &str, num: f64, den: f64| {
        if den == 0.0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num / den
        }
    };
    let accuracy = (tp + tn) / (tp + fp + tn + fn_);
    let precision = ratio("precision", tp, tp + fp);
    let recall = ratio("recall", tp, tp + fn_);
    let f1 = ratio("f1", 2.0 * precision * recall, precision + recall);
    let specificity = ratio("specificity", tn, tn + fp);
    let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio("mcc", tp * tn - fp * fn_, mcc_den).clamp(-1.0, 1.0);
    Ok(ClassificationScores {
        accuracy,
        precision,
        recall,
        f1,
        specificity,
        mcc,
        undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn comment(id: &str, body: &str, label: GoldLabel) -> Comment {
        Comment::new(id, "u", body, Utc.timestamp_opt(0, 0).unwrap(), Some(label)).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn perfect_and_symmetric_scores() {
        let s = score(&ConfusionCounts::new(5, 0, 5, 0)).unwrap();
        assert_eq!(s.values(), [1.0; 6]);
        let s = score(&ConfusionCounts::new(25, 25, 25, 25)).unwrap();
        assert_eq!(s.mcc, 0.0);
    }

    #[test]
    fn worked_example() {
        // tp=45 fp=5 tn=30 fn=20: mcc = (1350-100)/sqrt(50*65*35*50)
        let s = score(&ConfusionCounts::new(45, 5, 30, 20)).unwrap();
        close(s.precision, 0.9);
        close(s.recall, 45.0 / 65.0);
        close(s.accuracy, 0.75);
        close(s.specificity, 30.0 / 35.0);
        close(s.mcc, 1250.0 / (50.0f64 * 65.0 * 35.0 * 50.0).sqrt());
        assert!((s.mcc - 0.5241).abs() < 5e-4);
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let s = score(&ConfusionCounts::new(0, 0, 7, 0)).unwrap();
        assert_eq!(s.precision, 0.0);
        assert_eq!(s.undefined, ["precision", "recall", "f1", "mcc"]);
        assert_eq!(score(&ConfusionCounts::default()), Err(EmptyCounts));
    }

    #[test]
    fn confusion_tallies() {
        let gold: Vec<_> = (0..10)
            .map(|i| comment(&format!("c{i}"), "x", if i < 5 { GoldLabel::IA } else { GoldLabel::GC }))
            .collect();
        let preds = |flip: bool| -> Vec<ConcernPrediction> {
            gold.iter()
                .map(|c| ConcernPrediction {
                    comment_id: c.id.clone(),
                    predicted_label: if (c.gold_label == Some(GoldLabel::IA)) != flip {
                        PredictedLabel::IA
                    } else {
                        PredictedLabel::GC
                    },
                    concern_text: None,
                })
                .collect()
        };
        assert_eq!(confusion(&preds(false), &gold).unwrap(), ConfusionCounts::new(5, 0, 5, 0));
        assert_eq!(confusion(&preds(true), &gold).unwrap(), ConfusionCounts::new(0, 5, 0, 5));
        let mut bad = preds(false);
        bad[0].comment_id = "zz".into();
        assert_eq!(confusion(&bad, &gold), Err(ConfusionError::UnknownComment("zz".into())));
        let mut ina = gold.clone();
        ina[0].gold_label = Some(GoldLabel::INA);
        assert_eq!(confusion(&preds(false), &ina), Err(ConfusionError::NotBinary("c0".into())));
    }

    #[test]
    fn parses_both_concern_shapes() {
        let raw = r#"```json
{"concerns": ["plain", {"concern": "indexed", "comment": 2}, {"concern": "str idx", "comment": "3"}], "used_question": false}
```"#;
        let c = parse_concerns(raw).unwrap();
        assert_eq!(c[0], ExtractedConcern { text: "plain".into(), comment: None });
        assert_eq!(c[1].comment, Some(2));
        assert_eq!(c[2].comment, Some(3));
        assert!(parse_concerns(r#"{"concerns": [3]}"#).is_err());
        assert!(parse_concerns("{}").is_err());
    }

    #[test]
    fn assignment_by_index_then_text() {
        let comments = vec![
            comment("a", "Thanks, works great!", GoldLabel::GC),
            comment("b", ".getToken() is deprecated, use getIdToken()", GoldLabel::IA),
            comment("c", "Should handle the null case", GoldLabel::IA),
        ];
        let concerns = vec![
            ExtractedConcern {
                text: "getToken() is deprecated".into(),
                comment: None,
            },
            ExtractedConcern {
                text: "handle null".into(),
                comment: Some(3),
            },
            ExtractedConcern {
                text: "add benchmarks".into(),
                comment: Some(9),
            },
        ];
        let (p, d) = assign_concerns(&concerns, &comments);
        let labels: Vec<_> = p.iter().map(|x| x.predicted_label).collect();
        assert_eq!(labels, [PredictedLabel::GC, PredictedLabel::IA, PredictedLabel::IA]);
        assert!(p[1].concern_text.as_deref().unwrap().contains("deprecated"));
        assert_eq!(d.len(), 2);
        assert!(matches!(d[0], MatchDiagnostic::IndexOutOfRange { index: 9, .. }));
        assert!(matches!(d[1], MatchDiagnostic::Unmatched { .. }));
    }

    #[test]
    fn ratio_is_case_insensitive() {
        assert_eq!(match_ratio("ABC", "xxabcxx"), 1.0);
        assert!((match_ratio("abcd", "abxd") - 0.5).abs() < 1e-12);
        assert_eq!(match_ratio("", "abc"), 0.0);
    }

    #[test]
    fn ties_go_to_earliest_comment() {
        let comments = vec![comment("a", "same text", GoldLabel::IA), comment("b", "same text", GoldLabel::IA)];
        let (p, _) = assign_concerns(
            &[ExtractedConcern {
                text: "same text".into(),
                comment: None,
            }],
            &comments,
        );
        assert_eq!(p[0].predicted_label, PredictedLabel::IA);
        assert_eq!(p[1].predicted_label, PredictedLabel::GC);
    }
}
