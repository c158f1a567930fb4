//! Translation edit rate with a greedy block-shift search.
//!
//! Each round tries moving every hypothesis phrase (up to [`MAX_SHIFT_SIZE`]
//! tokens) that also occurs in the reference to the positions the current
//! alignment assigns to that occurrence, and applies the shift that lowers the
//! word edit distance the most. Rounds stop when no shift helps. Finding the
//! optimal shift sequence is NP-hard; this greedy search is an upper bound.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::MetricError;

pub const TER_VARIANT: &str = "ter-greedy-shift";
pub const MAX_SHIFT_SIZE: usize = 10;
pub const MAX_SHIFT_DISTANCE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerDetail {
    /// Percent scale; 0 is a perfect match.
    pub score: f64,
    pub edits: usize,
    pub shifts: usize,
    pub ref_len: usize,
}

pub fn ter(hyp: &[String], reference: &[String]) -> Result<f64, MetricError> {
    ter_detail(hyp, reference).map(|d| d.score)
}

pub fn ter_detail(hyp: &[String], reference: &[String]) -> Result<TerDetail, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference { metric: "ter" });
    }
    let ref_ngrams = phrase_set(reference);
    let mut current: Vec<&str> = hyp.iter().map(String::as_str).collect();
    let reference: Vec<&str> = reference.iter().map(String::as_str).collect();
    let mut shifts = 0;

    loop {
        let alignment = align(&current, &reference);
        if alignment.distance == 0 {
            break;
        }
        match best_shift(&current, &reference, &ref_ngrams, &alignment) {
            Some(shifted) => {
                current = shifted;
                shifts += 1;
            }
            None => break,
        }
    }

    let edits = edit_distance(&current, &reference);
    let total = edits + shifts;
    Ok(TerDetail {
        score: 100.0 * total as f64 / reference.len() as f64,
        edits,
        shifts,
        ref_len: reference.len(),
    })
}

fn phrase_set(reference: &[String]) -> HashSet<Vec<&str>> {
    let mut set = HashSet::new();
    for len in 1..=MAX_SHIFT_SIZE.min(reference.len()) {
        for w in reference.windows(len) {
            set.insert(w.iter().map(String::as_str).collect());
        }
    }
    set
}

struct Alignment {
    distance: usize,
    /// For each reference position, the hypothesis index it lines up with
    /// (or the insertion point when the reference token was inserted).
    ref_to_hyp: Vec<usize>,
    /// Hypothesis positions that are exact matches.
    hyp_correct: Vec<bool>,
}

fn dp_table(hyp: &[&str], reference: &[&str]) -> Vec<Vec<usize>> {
    let (n, m) = (hyp.len(), reference.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(hyp[i - 1] != reference[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

fn edit_distance(hyp: &[&str], reference: &[&str]) -> usize {
    let m = reference.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for (i, h) in hyp.iter().enumerate() {
        cur[0] = i + 1;
        for j in 1..=m {
            let sub = prev[j - 1] + usize::from(*h != reference[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

fn align(hyp: &[&str], reference: &[&str]) -> Alignment {
    let d = dp_table(hyp, reference);
    let (mut i, mut j) = (hyp.len(), reference.len());
    let mut ref_to_hyp = vec![0usize; reference.len()];
    let mut hyp_correct = vec![false; hyp.len()];
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = hyp[i - 1] == reference[j - 1];
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                ref_to_hyp[j - 1] = i - 1;
                hyp_correct[i - 1] = same;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            i -= 1;
        } else {
            ref_to_hyp[j - 1] = i;
            j -= 1;
        }
    }
    Alignment {
        distance: d[hyp.len()][reference.len()],
        ref_to_hyp,
        hyp_correct,
    }
}

fn apply_shift<'a>(words: &[&'a str], start: usize, len: usize, dest: usize) -> Vec<&'a str> {
    let phrase = &words[start..start + len];
    let mut rest: Vec<&str> = Vec::with_capacity(words.len());
    rest.extend_from_slice(&words[..start]);
    rest.extend_from_slice(&words[start + len..]);
    let at = if dest > start { dest - len } else { dest };
    let mut out = Vec::with_capacity(words.len());
    out.extend_from_slice(&rest[..at]);
    out.extend_from_slice(phrase);
    out.extend_from_slice(&rest[at..]);
    out
}

fn best_shift<'a>(
    current: &[&'a str],
    reference: &[&str],
    ref_ngrams: &HashSet<Vec<&str>>,
    alignment: &Alignment,
) -> Option<Vec<&'a str>> {
    let mut best: Option<(usize, Vec<&'a str>)> = None;
    let mut tried: HashSet<(usize, usize, usize)> = HashSet::new();

    for start in 0..current.len() {
        for len in 1..=MAX_SHIFT_SIZE.min(current.len() - start) {
            let phrase = &current[start..start + len];
            if !ref_ngrams.contains(phrase) {
                // longer phrases from this start cannot occur either
                break;
            }
            if alignment.hyp_correct[start..start + len].iter().all(|&c| c) {
                continue;
            }
            for ref_start in occurrences(reference, phrase) {
                let anchor = alignment.ref_to_hyp[ref_start];
                for dest in [anchor, anchor + 1] {
                    if dest > current.len() || (dest >= start && dest <= start + len) {
                        continue;
                    }
                    if dest.abs_diff(start) > MAX_SHIFT_DISTANCE {
                        continue;
                    }
                    if !tried.insert((start, len, dest)) {
                        continue;
                    }
                    let shifted = apply_shift(current, start, len, dest);
                    let dist = edit_distance(&shifted, reference);
                    if dist >= alignment.distance {
                        continue;
                    }
                    let gain = alignment.distance - dist;
                    if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                        best = Some((gain, shifted));
                    }
                }
            }
        }
    }
    best.map(|(_, s)| s)
}

fn occurrences(reference: &[&str], phrase: &[&str]) -> Vec<usize> {
    reference
        .windows(phrase.len())
        .enumerate()
        .filter(|(_, w)| *w == phrase)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize_words as t;

    #[test]
    fn identical_is_zero() {
        let x = t("one two three");
        assert_eq!(ter(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn single_substitution() {
        assert_eq!(ter(&t("a b c d"), &t("a x c d")).unwrap(), 25.0);
    }

    #[test]
    fn block_shift_costs_one() {
        let d = ter_detail(&t("c d a b"), &t("a b c d")).unwrap();
        assert_eq!(d.shifts, 1);
        assert_eq!(d.edits, 0);
        assert_eq!(d.score, 25.0);
    }

    #[test]
    fn empty_reference_errors() {
        assert!(matches!(
            ter(&t("a"), &[]),
            Err(MetricError::EmptyReference { .. })
        ));
    }

    #[test]
    fn empty_hypothesis_is_all_insertions() {
        assert_eq!(ter(&[], &t("a b")).unwrap(), 100.0);
    }

    #[test]
    fn directional() {
        // deleting 2 extra hyp tokens vs inserting 2 missing ref tokens
        let short = t("a b");
        let long = t("a b c d");
        assert_eq!(ter(&long, &short).unwrap(), 100.0);
        assert_eq!(ter(&short, &long).unwrap(), 50.0);
    }

    #[test]
    fn shift_helper() {
        let w = ["a", "b", "c", "d", "e"];
        assert_eq!(apply_shift(&w, 0, 2, 5), vec!["c", "d", "e", "a", "b"]);
        assert_eq!(apply_shift(&w, 3, 2, 0), vec!["d", "e", "a", "b", "c"]);
    }
}
