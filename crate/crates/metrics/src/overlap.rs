//! Set and bag-of-words metrics: Jaccard, Distinct-n, TF-IDF cosine.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ngram::ngram_counts;
use crate::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedScore {
    pub value: f64,
    /// The value is a convention for an undefined case (both sets empty,
    /// zero-length vector, no n-grams).
    pub degenerate: bool,
}

impl FlaggedScore {
    fn defined(value: f64) -> Self {
        Self { value, degenerate: false }
    }
    fn convention(value: f64) -> Self {
        Self { value, degenerate: true }
    }
}

/// |A ∩ B| / |A ∪ B| over token sets. Two empty sets score 1.0 (flagged).
pub fn jaccard(hyp: &[String], reference: &[String]) -> FlaggedScore {
    let a: HashSet<&str> = hyp.iter().map(String::as_str).collect();
    let b: HashSet<&str> = reference.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return FlaggedScore::convention(1.0);
    }
    FlaggedScore::defined(a.intersection(&b).count() as f64 / union as f64)
}

/// Unique n-grams over total n-grams, pooled across `texts`.
pub fn distinct_n<S: AsRef<[String]>>(texts: &[S], n: usize) -> Result<FlaggedScore, MetricError> {
    if !(1..=2).contains(&n) {
        return Err(MetricError::UnsupportedOrder { metric: "distinct_n", n });
    }
    let mut unique: HashSet<&[String]> = HashSet::new();
    let mut total = 0usize;
    for text in texts {
        let counts = ngram_counts(text.as_ref(), n);
        total += counts.values().sum::<usize>();
        unique.extend(counts.into_keys());
    }
    if total == 0 {
        return Ok(FlaggedScore::convention(0.0));
    }
    Ok(FlaggedScore::defined(unique.len() as f64 / total as f64))
}

/// Smoothed inverse document frequencies fitted on a reference corpus:
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`. Terms absent from the corpus get
/// `df = 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdfTable {
    docs: usize,
    df: HashMap<String, usize>,
}

impl IdfTable {
    pub fn fit<S: AsRef<[String]>>(corpus: &[S]) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in corpus {
            let terms: HashSet<&String> = doc.as_ref().iter().collect();
            for term in terms {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
        }
        Self { docs: corpus.len(), df }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    pub fn document_count(&self) -> usize {
        self.docs
    }

    /// L2-normalised tf-idf vector; `None` for a zero vector.
    fn vector(&self, tokens: &[String]) -> Option<BTreeMap<String, f64>> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        for (term, w) in tf.iter_mut() {
            *w *= self.idf(term);
        }
        let norm = tf.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        for w in tf.values_mut() {
            *w /= norm;
        }
        Some(tf)
    }
}

pub fn tfidf_cosine(hyp: &[String], reference: &[String], idf: &IdfTable) -> FlaggedScore {
    let (Some(a), Some(b)) = (idf.vector(hyp), idf.vector(reference)) else {
        return FlaggedScore::convention(0.0);
    };
    let dot: f64 = a
        .iter()
        .filter_map(|(term, wa)| b.get(term).map(|wb| wa * wb))
        .sum();
    FlaggedScore::defined(dot.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize_words as t;

    #[test]
    fn jaccard_sets() {
        let s = jaccard(&t("a b c"), &t("b c d"));
        assert_eq!(s.value, 0.5);
        assert!(!s.degenerate);
    }

    #[test]
    fn jaccard_both_empty() {
        let s = jaccard(&[], &[]);
        assert_eq!(s.value, 1.0);
        assert!(s.degenerate);
    }

    #[test]
    fn distinct_two() {
        let s = distinct_n(&[t("a b a b")], 2).unwrap();
        assert!((s.value - 2.0 / 3.0).abs() < 1e-15);
        let s1 = distinct_n(&[t("a b a b")], 1).unwrap();
        assert_eq!(s1.value, 0.5);
    }

    #[test]
    fn distinct_no_ngrams() {
        let s = distinct_n(&[t("a")], 2).unwrap();
        assert!(s.degenerate);
        assert!(distinct_n(&[t("a")], 3).is_err());
    }

    #[test]
    fn tfidf_identical_under_any_corpus() {
        let x = t("open the file and read lines");
        for corpus in [vec![], vec![t("unrelated words")], vec![x.clone(), t("read more")]] {
            let idf = IdfTable::fit(&corpus);
            let s = tfidf_cosine(&x, &x, &idf);
            assert!((s.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tfidf_zero_vector_flagged() {
        let idf = IdfTable::fit::<Vec<String>>(&[]);
        let s = tfidf_cosine(&[], &t("a"), &idf);
        assert_eq!(s.value, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn idf_formula() {
        let corpus = vec![t("a b"), t("a c"), t("d")];
        let idf = IdfTable::fit(&corpus);
        assert!((idf.idf("a") - ((4.0f64 / 3.0).ln() + 1.0)).abs() < 1e-15);
        assert!((idf.idf("zzz") - (4.0f64.ln() + 1.0)).abs() < 1e-15);
    }
}
