//! Syntactic similarity metrics for comparing a refined answer against a
//! human-revised reference.
//!
//! All word-level metrics share [`tokenize`]. Scales: TER is a percentage
//! (lower is better), corpus BLEU and chrF are on 0-100, everything else is
//! on 0-1. All functions are pure.

pub mod bleu;
pub mod chrf;
pub mod external;
pub mod meteor;
mod ngram;
pub mod overlap;
pub mod pair;
pub mod rouge;
pub mod ter;
mod tokenize;

pub use bleu::{bleu, corpus_bleu, BleuScore, BleuStats};
pub use chrf::{chrf, chrf_beta, ChrfStats};
pub use external::{ExternalScorer, NamedScores, ProcessScorer};
pub use meteor::{meteor, METEOR_VARIANT};
pub use overlap::{distinct_n, jaccard, tfidf_cosine, FlaggedScore, IdfTable};
pub use pair::{score_pair, CorpusAccumulator, Metric, PairScores, ScoreFlag};
pub use rouge::{rouge_l, rouge_n};
pub use ter::{ter, TER_VARIANT};
pub use tokenize::{tokenize, tokenize_words, TokenSequence};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("{metric}: unsupported n-gram order {n}")]
    UnsupportedOrder { metric: &'static str, n: usize },
    #[error("{metric}: reference is empty")]
    EmptyReference { metric: &'static str },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("external scorer {scorer}: {detail}")]
    External { scorer: String, detail: String },
}
