//! Character n-gram F-score over orders 1..=6 with whitespace removed.
//!
//! Precision and recall are averaged over the orders that have n-grams on
//! both sides and then combined into F-beta, the same aggregation used by
//! the widely deployed chrF implementation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const CHAR_ORDER: usize = 6;
pub const DEFAULT_BETA: f64 = 2.0;

/// Per-order `(hyp, ref, match)` counts. Summing is associative, which lets
/// corpus-level chrF pool statistics across pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats {
    pub hyp: [usize; CHAR_ORDER],
    pub reference: [usize; CHAR_ORDER],
    pub matches: [usize; CHAR_ORDER],
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl ChrfStats {
    pub fn from_pair(hyp: &str, reference: &str) -> Self {
        let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
        let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
        let mut stats = ChrfStats::default();
        for n in 1..=CHAR_ORDER {
            let hc = char_ngrams(&h, n);
            let rc = char_ngrams(&r, n);
            let ref_total: usize = rc.values().sum();
            let hyp_total: usize = hc.values().sum();
            let matched: usize = hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            // hypothesis n-grams only count when the reference has some
            stats.hyp[n - 1] = if ref_total > 0 { hyp_total } else { 0 };
            stats.reference[n - 1] = ref_total;
            stats.matches[n - 1] = matched;
        }
        stats
    }

    pub fn merge(mut self, other: &ChrfStats) -> Self {
        for i in 0..CHAR_ORDER {
            self.hyp[i] += other.hyp[i];
            self.reference[i] += other.reference[i];
            self.matches[i] += other.matches[i];
        }
        self
    }

    /// F-beta on the 0-100 scale.
    pub fn score(&self, beta: f64) -> f64 {
        let mut avg_p = 0.0;
        let mut avg_r = 0.0;
        let mut effective = 0usize;
        for i in 0..CHAR_ORDER {
            if self.hyp[i] > 0 && self.reference[i] > 0 {
                avg_p += self.matches[i] as f64 / self.hyp[i] as f64;
                avg_r += self.matches[i] as f64 / self.reference[i] as f64;
                effective += 1;
            }
        }
        if effective == 0 {
            return 0.0;
        }
        avg_p /= effective as f64;
        avg_r /= effective as f64;
        if avg_p + avg_r == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        100.0 * (1.0 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r)
    }
}

pub fn chrf(hyp: &str, reference: &str) -> f64 {
    chrf_beta(hyp, reference, DEFAULT_BETA)
}

pub fn chrf_beta(hyp: &str, reference: &str, beta: f64) -> f64 {
    ChrfStats::from_pair(hyp, reference).score(beta)
}
