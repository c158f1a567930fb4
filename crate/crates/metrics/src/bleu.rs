//! Sentence BLEU (cumulative through order k) and pooled corpus BLEU.

use serde::{Deserialize, Serialize};

use crate::ngram::{clipped_overlap, ngram_counts, ngram_total};
use crate::MetricError;

/// Replacement for a zero modified precision.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// At least one precision was zero and replaced by the epsilon.
    pub smoothed: bool,
    /// Hypothesis was empty; score forced to zero.
    pub empty_hypothesis: bool,
}

/// Sufficient statistics for BLEU up to order 4. Merging is associative, so
/// corpus statistics can be accumulated in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn from_pair(hyp: &[String], reference: &[String]) -> Self {
        let mut stats = BleuStats {
            hyp_len: hyp.len(),
            ref_len: reference.len(),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            stats.matches[n - 1] =
                clipped_overlap(&ngram_counts(hyp, n), &ngram_counts(reference, n));
            stats.totals[n - 1] = ngram_total(hyp.len(), n);
        }
        stats
    }

    pub fn merge(mut self, other: &BleuStats) -> Self {
        for i in 0..MAX_ORDER {
            self.matches[i] += other.matches[i];
            self.totals[i] += other.totals[i];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }

    /// Cumulative BLEU through `max_n` with uniform weights.
    pub fn score(&self, max_n: usize) -> BleuScore {
        if self.hyp_len == 0 {
            return BleuScore {
                score: 0.0,
                smoothed: false,
                empty_hypothesis: true,
            };
        }
        let mut smoothed = false;
        let mut log_sum = 0.0;
        for i in 0..max_n {
            let precision = if self.matches[i] == 0 || self.totals[i] == 0 {
                smoothed = true;
                SMOOTHING_EPSILON
            } else {
                self.matches[i] as f64 / self.totals[i] as f64
            };
            log_sum += precision.ln();
        }
        let geo_mean = (log_sum / max_n as f64).exp();
        BleuScore {
            score: brevity_penalty(self.hyp_len, self.ref_len) * geo_mean,
            smoothed,
            empty_hypothesis: false,
        }
    }
}

pub fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    }
}

pub fn bleu(hyp: &[String], reference: &[String], max_n: usize) -> Result<BleuScore, MetricError> {
    if !(1..=MAX_ORDER).contains(&max_n) {
        return Err(MetricError::UnsupportedOrder { metric: "bleu", n: max_n });
    }
    Ok(BleuStats::from_pair(hyp, reference).score(max_n))
}

/// Corpus BLEU-4 on the 0-100 scale from pooled n-gram statistics.
pub fn corpus_bleu<'a, I>(pairs: I) -> Result<BleuScore, MetricError>
where
    I: IntoIterator<Item = (&'a [String], &'a [String])>,
{
    let mut seen = false;
    let stats = pairs.into_iter().fold(BleuStats::default(), |acc, (h, r)| {
        seen = true;
        acc.merge(&BleuStats::from_pair(h, r))
    });
    if !seen {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(corpus_bleu_from_stats(&stats))
}

pub fn corpus_bleu_from_stats(stats: &BleuStats) -> BleuScore {
    let mut s = stats.score(MAX_ORDER);
    s.score *= 100.0;
    s
}
