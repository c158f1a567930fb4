//! Inter-rater agreement and the Mann-Whitney U test.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Combined sample sizes up to this use the exact null distribution.
pub const EXACT_MAX_COMBINED: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no observations")]
    Empty,
    #[error("samples contain NaN")]
    NaN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    /// Expected agreement was 1 (both raters constant and equal); kappa set to 0.
    pub degenerate: bool,
}

/// Cohen's kappa for two raters over the same items.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<Kappa, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut ma: BTreeMap<&T, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&T, usize> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
    }
    let expected: f64 = ma
        .iter()
        .map(|(k, ca)| *ca as f64 * *mb.get(k).unwrap_or(&0) as f64)
        .sum::<f64>()
        / (n * n);
    let observed = agree / n;
    if (1.0 - expected).abs() < 1e-12 {
        return Ok(Kappa {
            kappa: 0.0,
            observed,
            expected,
            degenerate: true,
        });
    }
    Ok(Kappa {
        kappa: ((observed - expected) / (1.0 - expected)).clamp(-1.0, 1.0),
        observed,
        expected,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U for the first sample: pairs (x, y) with x > y, ties counting 1/2.
    pub u: f64,
    pub p_two_sided: f64,
    pub method: MwMethod,
}

/// Midranks of the pooled sample (1-based, ties share their mean rank).
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(StatsError::NaN);
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n1].iter().sum();
    let u = rank_sum_a - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1 + n2 <= EXACT_MAX_COMBINED {
        return Ok(MannWhitney {
            u,
            p_two_sided: exact_p(&ranks, n1, u),
            method: MwMethod::Exact,
        });
    }

    let n = (n1 + n2) as f64;
    let mu = (n1 * n2) as f64 / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney {
            u,
            p_two_sided: 1.0,
            method: MwMethod::Normal,
        });
    }
    let u_big = u.max((n1 * n2) as f64 - u);
    let z = (u_big - mu - 0.5) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * normal.sf(z)).min(1.0);
    Ok(MannWhitney {
        u,
        p_two_sided: p,
        method: MwMethod::Normal,
    })
}

/// Exact two-sided p from the null distribution of U over every way to pick
/// `n1` of the pooled ranks. Counts are built by dynamic programming over
/// doubled ranks, which are integers even with midranks.
fn exact_p(ranks: &[f64], n1: usize, u_obs: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled-rank sum s
    let mut ways = vec![vec![0u64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1;
    for &d in &doubled {
        for k in (1..=n1).rev() {
            for s in (d..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - d];
            }
        }
    }
    let offset = n1 * (n1 + 1); // doubled n1(n1+1)/2
    let u2_obs = (u_obs * 2.0).round() as i64;
    let (mut total, mut le, mut ge) = (0u64, 0u64, 0u64);
    let sums: BTreeSet<usize> = (0..=max_sum).filter(|s| ways[n1][*s] > 0).collect();
    for s in sums {
        let c = ways[n1][s];
        let u2 = s as i64 - offset as i64;
        total += c;
        if u2 <= u2_obs {
            le += c;
        }
        if u2 >= u2_obs {
            ge += c;
        }
    }
    let tail = le.min(ge) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}
