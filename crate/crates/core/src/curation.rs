//! Benchmark instance construction from labeled threads, and quartile-stratified
//! sampling.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::post_model::{quartile_of, AnswerThread, AnswerVersion, Comment, GoldLabel, ModelError, QuartileTag};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("thread {answer_id}: comment {comment_id} has no gold label")]
    Unlabeled { answer_id: String, comment_id: String },
    #[error("thread {answer_id}: no pre-concern version exists")]
    NoPreConcernVersion { answer_id: String },
    #[error("thread {answer_id}: addressed comments link to no revision and the policy drops such threads")]
    UnaddressedDropped { answer_id: String },
    #[error("cannot sample {quartile}: bucket is empty")]
    EmptyBucket { quartile: QuartileTag },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    Python,
    Java,
    Csharp,
    Javascript,
    Other,
}

impl LanguageTag {
    /// First question tag naming one of the four languages, else `Other`.
    pub fn from_tags<S: AsRef<str>>(tags: &[S]) -> LanguageTag {
        tags.iter()
            .find_map(|t| {
                let t = t.as_ref().trim().to_ascii_lowercase();
                let is = |lang: &str| t == lang || t.starts_with(&format!("{lang}-"));
                if is("python") {
                    Some(LanguageTag::Python)
                } else if is("java") {
                    Some(LanguageTag::Java)
                } else if is("c#") || is("csharp") {
                    Some(LanguageTag::Csharp)
                } else if is("javascript") {
                    Some(LanguageTag::Javascript)
                } else {
                    None
                }
            })
            .unwrap_or(LanguageTag::Other)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LanguageTag::Python => "python",
            LanguageTag::Java => "java",
            LanguageTag::Csharp => "csharp",
            LanguageTag::Javascript => "javascript",
            LanguageTag::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub question_id: String,
    pub answer_id: String,
    pub question_title: String,
    #[serde(default)]
    pub question_body: String,
    pub v_init: AnswerVersion,
    pub v_final: AnswerVersion,
    pub relevant_comments: Vec<Comment>,
    pub quartile: QuartileTag,
    pub language_tag: LanguageTag,
    /// Comment count of the source thread; the quartile is derived from it.
    pub source_comment_count: usize,
    /// True when addressed comments existed but none was linked to a
    /// revision, so `v_final` fell back to `v_init`.
    #[serde(default)]
    pub unaddressed_fallback: bool,
}

impl BenchmarkInstance {
    pub fn instance_id(&self) -> &str {
        &self.answer_id
    }

    pub fn question_text(&self) -> String {
        match (self.question_title.trim().is_empty(), self.question_body.trim().is_empty()) {
            (_, true) => self.question_title.clone(),
            (true, false) => self.question_body.clone(),
            (false, false) => format!("{}\n\n{}", self.question_title, self.question_body),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurationPolicy {
    /// Keep threads whose addressed comments link to no revision (v_final
    /// falls back to v_init). Dropping them is the stricter reading.
    pub keep_unaddressed: bool,
}

impl Default for CurationPolicy {
    fn default() -> Self {
        CurationPolicy { keep_unaddressed: true }
    }
}

pub fn curate(thread: &AnswerThread, policy: &CurationPolicy) -> Result<BenchmarkInstance, CurationError> {
    thread.validate()?;
    let answer_id = || thread.answer_id.clone();
    let mut labels = Vec::with_capacity(thread.comments.len());
    for c in &thread.comments {
        let label = c.gold_label.ok_or_else(|| CurationError::Unlabeled {
            answer_id: answer_id(),
            comment_id: c.id.clone(),
        })?;
        labels.push(label);
    }
    let quartile = quartile_of(thread.comments.len())?;

    let ia: Vec<&Comment> = thread
        .comments
        .iter()
        .zip(&labels)
        .filter(|(_, l)| **l == GoldLabel::IA)
        .map(|(c, _)| c)
        .collect();
    let latest = thread.versions.last().expect("validated: at least one version");

    let mut unaddressed_fallback = false;
    let (v_init, v_final) = if ia.is_empty() {
        (latest, latest)
    } else {
        let earliest = ia.iter().map(|c| c.timestamp).min().unwrap();
        let v_init = thread
            .versions
            .iter()
            .rev()
            .find(|v| v.timestamp < earliest)
            .ok_or_else(|| CurationError::NoPreConcernVersion { answer_id: answer_id() })?;
        let ia_ids: HashSet<&str> = ia.iter().map(|c| c.id.as_str()).collect();
        let linked: HashSet<u32> = thread
            .concern_links
            .iter()
            .filter(|l| ia_ids.contains(l.comment_id.as_str()))
            .map(|l| l.revision_ordinal)
            .collect();
        let v_final = thread.versions.iter().rev().find(|v| linked.contains(&v.revision_ordinal));
        match v_final {
            Some(v) => (v_init, v),
            None if policy.keep_unaddressed => {
                unaddressed_fallback = true;
                (v_init, v_init)
            }
            None => return Err(CurationError::UnaddressedDropped { answer_id: answer_id() }),
        }
    };

    let relevant_comments = thread
        .comments
        .iter()
        .zip(&labels)
        .filter(|(_, l)| **l != GoldLabel::INA)
        .map(|(c, _)| c.clone())
        .collect();

    Ok(BenchmarkInstance {
        question_id: thread.question_id.clone(),
        answer_id: thread.answer_id.clone(),
        question_title: thread.question_title.clone(),
        question_body: thread.question_body.clone(),
        v_init: v_init.clone(),
        v_final: v_final.clone(),
        relevant_comments,
        quartile,
        language_tag: LanguageTag::from_tags(&thread.question_tags),
        source_comment_count: thread.comments.len(),
        unaddressed_fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleOptions {
    /// Sample instances whose language is `Other` too.
    pub include_other_languages: bool,
}

/// Draw `min(per_quartile, bucket size)` instances from each quartile,
/// uniformly without replacement. Output is grouped Q1..Q4 and keeps source
/// order within a quartile.
pub fn stratified_sample(
    instances: &[BenchmarkInstance],
    per_quartile: usize,
    seed: u64,
    options: SampleOptions,
) -> Result<Vec<BenchmarkInstance>, CurationError> {
    if per_quartile == 0 {
        return Ok(Vec::new());
    }
    let mut buckets: BTreeMap<QuartileTag, Vec<usize>> = QuartileTag::ALL.iter().map(|q| (*q, Vec::new())).collect();
    for (i, inst) in instances.iter().enumerate() {
        if options.include_other_languages || inst.language_tag != LanguageTag::Other {
            buckets.get_mut(&inst.quartile).unwrap().push(i);
        }
    }
    if let Some((q, _)) = buckets.iter().find(|(_, b)| b.is_empty()) {
        return Err(CurationError::EmptyBucket { quartile: *q });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for bucket in buckets.values() {
        let k = per_quartile.min(bucket.len());
        let mut picked = rand::seq::index::sample(&mut rng, bucket.len(), k).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|j| instances[bucket[j]].clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::post_model::ConcernLink;
    use chrono::{DateTime, TimeZone, Utc};

    fn ts(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(s, 0).unwrap()
    }

    fn thread(comments: Vec<(i64, GoldLabel)>, links: Vec<(usize, u32)>) -> AnswerThread {
        AnswerThread {
            question_id: "q1".into(),
            answer_id: "a1".into(),
            question_title: "title".into(),
            question_body: String::new(),
            question_tags: vec!["python-3.x".into()],
            versions: vec![
                AnswerVersion::new(1, "v1", ts(10)),
                AnswerVersion::new(2, "v2", ts(20)),
                AnswerVersion::new(3, "v3", ts(30)),
            ],
            comments: comments
                .iter()
                .enumerate()
                .map(|(i, (t, l))| Comment::new(format!("c{i}"), "u", format!("comment {i}"), ts(*t), Some(*l)).unwrap())
                .collect(),
            concern_links: links
                .into_iter()
                .map(|(i, o)| ConcernLink {
                    comment_id: format!("c{i}"),
                    revision_ordinal: o,
                })
                .collect(),
        }
    }

    fn ordinals(i: &BenchmarkInstance) -> (u32, u32) {
        (i.v_init.revision_ordinal, i.v_final.revision_ordinal)
    }

    #[test]
    fn no_addressed_comments_uses_latest() {
        let t = thread(vec![(12, GoldLabel::GC), (25, GoldLabel::INA), (31, GoldLabel::GC)], vec![]);
        let inst = curate(&t, &CurationPolicy::default()).unwrap();
        assert_eq!(ordinals(&inst), (3, 3));
        let ids: Vec<_> = inst.relevant_comments.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["c0", "c2"]);
        assert_eq!(inst.quartile, QuartileTag::Q2);
        assert_eq!(inst.language_tag, LanguageTag::Python);
    }

    #[test]
    fn linked_comment_picks_versions() {
        let t = thread(vec![(15, GoldLabel::IA), (16, GoldLabel::GC)], vec![(0, 2)]);
        let inst = curate(&t, &CurationPolicy::default()).unwrap();
        assert_eq!(ordinals(&inst), (1, 2));
        assert_eq!(inst.relevant_comments.len(), 2);
        assert!(!inst.unaddressed_fallback);
    }

    #[test]
    fn unlinked_falls_back_to_init() {
        let t = thread(vec![(15, GoldLabel::IA)], vec![]);
        let inst = curate(&t, &CurationPolicy::default()).unwrap();
        assert_eq!(ordinals(&inst), (1, 1));
        assert!(inst.unaddressed_fallback);
        let strict = CurationPolicy { keep_unaddressed: false };
        assert!(matches!(curate(&t, &strict), Err(CurationError::UnaddressedDropped { .. })));
    }

    #[test]
    fn simultaneous_comment_counts_as_after() {
        // a comment stamped exactly at v2 precedes nothing at v2
        let t = thread(vec![(20, GoldLabel::IA)], vec![(0, 3)]);
        assert_eq!(ordinals(&curate(&t, &CurationPolicy::default()).unwrap()), (1, 3));
        let t = thread(vec![(10, GoldLabel::IA)], vec![(0, 3)]);
        assert_eq!(
            curate(&t, &CurationPolicy::default()),
            Err(CurationError::NoPreConcernVersion { answer_id: "a1".into() })
        );
    }

    #[test]
    fn links_from_non_addressed_comments_are_ignored() {
        let t = thread(vec![(15, GoldLabel::IA), (16, GoldLabel::GC)], vec![(1, 3)]);
        assert_eq!(ordinals(&curate(&t, &CurationPolicy::default()).unwrap()), (1, 1));
    }

    #[test]
    fn latest_linked_version_wins() {
        let t = thread(vec![(15, GoldLabel::IA), (22, GoldLabel::IA)], vec![(1, 3), (0, 2)]);
        assert_eq!(ordinals(&curate(&t, &CurationPolicy::default()).unwrap()), (1, 3));
    }

    #[test]
    fn unlabeled_comment_is_an_error() {
        let mut t = thread(vec![(15, GoldLabel::IA)], vec![]);
        t.comments[0].gold_label = None;
        assert!(matches!(curate(&t, &CurationPolicy::default()), Err(CurationError::Unlabeled { .. })));
    }

    #[test]
    fn too_many_comments_has_no_quartile() {
        let t = thread((0..14).map(|i| (40 + i, GoldLabel::GC)).collect(), vec![]);
        assert_eq!(
            curate(&t, &CurationPolicy::default()),
            Err(CurationError::Model(ModelError::QuartileOutOfRange(14)))
        );
    }

    #[test]
    fn language_tags() {
        assert_eq!(LanguageTag::from_tags(&["winforms", "c#"]), LanguageTag::Csharp);
        assert_eq!(LanguageTag::from_tags(&["javascript", "java"]), LanguageTag::Javascript);
        assert_eq!(LanguageTag::from_tags(&["java-8"]), LanguageTag::Java);
        assert_eq!(LanguageTag::from_tags(&["css"]), LanguageTag::Other);
        assert_eq!(LanguageTag::from_tags::<&str>(&[]), LanguageTag::Other);
    }

    fn pool() -> Vec<BenchmarkInstance> {
        let mut out = Vec::new();
        for (n, count) in [(1usize, 5usize), (2, 4), (4, 3), (6, 6)] {
            for k in 0..count {
                let mut t = thread((0..n).map(|i| (31 + i as i64, GoldLabel::GC)).collect(), vec![]);
                t.answer_id = format!("a{n}-{k}");
                if k == 0 {
                    t.question_tags = vec!["css".into()];
                }
                out.push(curate(&t, &CurationPolicy::default()).unwrap());
            }
        }
        out
    }

    #[test]
    fn sampling_is_stratified_and_reproducible() {
        let pool = pool();
        let a = stratified_sample(&pool, 2, 42, SampleOptions::default()).unwrap();
        let b = stratified_sample(&pool, 2, 42, SampleOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        for q in QuartileTag::ALL {
            assert_eq!(a.iter().filter(|i| i.quartile == q).count(), 2);
        }
        for i in &a {
            assert_eq!(quartile_of(i.source_comment_count).unwrap(), i.quartile);
            assert_ne!(i.language_tag, LanguageTag::Other);
        }
        let ids: HashSet<_> = a.iter().map(|i| i.answer_id.clone()).collect();
        assert_eq!(ids.len(), 8);
    }

    #[test]
    fn sampling_caps_at_bucket_size() {
        let pool = pool();
        let all = stratified_sample(&pool, 100, 1, SampleOptions::default()).unwrap();
        assert_eq!(all.len(), pool.len() - 4);
        let with_other = stratified_sample(&pool, 100, 1, SampleOptions { include_other_languages: true }).unwrap();
        assert_eq!(with_other.len(), pool.len());
    }

    #[test]
    fn zero_request_and_empty_bucket() {
        let pool = pool();
        assert!(stratified_sample(&pool, 0, 1, SampleOptions::default()).unwrap().is_empty());
        let no_q3: Vec<_> = pool.into_iter().filter(|i| i.quartile != QuartileTag::Q3).collect();
        assert_eq!(
            stratified_sample(&no_q3, 1, 1, SampleOptions::default()),
            Err(CurationError::EmptyBucket { quartile: QuartileTag::Q3 })
        );
    }
}
