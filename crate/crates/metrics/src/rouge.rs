use crate::ngram::{clipped_overlap, ngram_counts, ngram_total};
use crate::MetricError;

fn f1(overlap: usize, hyp_total: usize, ref_total: usize) -> f64 {
    if overlap == 0 || hyp_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / hyp_total as f64;
    let recall = overlap as f64 / ref_total as f64;
    2.0 * precision * recall / (precision + recall)
}

/// ROUGE-N F1 over clipped n-gram overlap. Only `n` of 1 or 2 is accepted.
pub fn rouge_n(hyp: &[String], reference: &[String], n: usize) -> Result<f64, MetricError> {
    if !(1..=2).contains(&n) {
        return Err(MetricError::UnsupportedOrder { metric: "rouge_n", n });
    }
    let overlap = clipped_overlap(&ngram_counts(hyp, n), &ngram_counts(reference, n));
    Ok(f1(
        overlap,
        ngram_total(hyp.len(), n),
        ngram_total(reference.len(), n),
    ))
}

/// ROUGE-L F1 from the longest common subsequence.
pub fn rouge_l(hyp: &[String], reference: &[String]) -> f64 {
    f1(lcs_len(hyp, reference), hyp.len(), reference.len())
}

pub(crate) fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize_words as t;

    #[test]
    fn identical_is_one() {
        let x = t("the quick brown fox");
        assert_eq!(rouge_n(&x, &x, 1).unwrap(), 1.0);
        assert_eq!(rouge_n(&x, &x, 2).unwrap(), 1.0);
        assert_eq!(rouge_l(&x, &x), 1.0);
    }

    #[test]
    fn lcs_example() {
        // LCS("the cat on mat", "the cat sat on mat") = 4
        let got = rouge_l(&t("the cat on mat"), &t("the cat sat on mat"));
        let expected = 2.0 * (4.0 / 4.0) * (4.0 / 5.0) / ((4.0 / 4.0) + (4.0 / 5.0));
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.8889).abs() < 1e-4);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(rouge_n(&t("a b c"), &t("d e f"), 1).unwrap(), 0.0);
        assert_eq!(rouge_l(&t("a b c"), &t("d e f")), 0.0);
    }

    #[test]
    fn single_token_has_no_bigrams() {
        assert_eq!(rouge_n(&t("a"), &t("a"), 2).unwrap(), 0.0);
    }

    #[test]
    fn precision_and_recall_are_directional() {
        // hyp has 2 unigrams, ref 4; overlap 2 => P=1, R=0.5
        let got = rouge_n(&t("a b"), &t("a b c d"), 1).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(rouge_n(&t("a"), &t("a"), 3).is_err());
    }
}
