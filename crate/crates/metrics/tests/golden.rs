//! Agreement with reference-tool goldens (fixtures/metrics/golden_scores.json,
//! produced by scripts/gen_metric_goldens.py) and with brute-force oracles.

use std::path::PathBuf;

use autocombat_metrics::{
    bleu, corpus_bleu, distinct_n, jaccard, rouge_l, rouge_n, tfidf_cosine, tokenize_words,
    IdfTable,
};
use autocombat_oracles as oracle;
use serde::Deserialize;

#[derive(Deserialize)]
struct Pair {
    hyp: String,
    #[serde(rename = "ref")]
    reference: String,
}

#[derive(Deserialize)]
struct Golden {
    rouge1: f64,
    rouge2: f64,
    rouge_l: f64,
    bleu1: f64,
    bleu2: f64,
    bleu3: f64,
    bleu4: f64,
    chrf: f64,
}

#[derive(Deserialize)]
struct Goldens {
    pairs: Vec<Golden>,
    corpus_bleu: f64,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/metrics")
}

fn load() -> (Vec<Pair>, Goldens) {
    let pairs = std::fs::read_to_string(fixtures().join("golden_pairs.jsonl")).unwrap();
    let pairs: Vec<Pair> = pairs
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let goldens: Goldens =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("golden_scores.json")).unwrap())
            .unwrap();
    assert_eq!(pairs.len(), 20);
    assert_eq!(goldens.pairs.len(), pairs.len());
    (pairs, goldens)
}

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (tol {tol})"
    );
}

#[test]
fn corpus_texts_tokenize_like_whitespace_split() {
    // the goldens were computed on lowercase whitespace tokens
    let (pairs, _) = load();
    for p in &pairs {
        for text in [&p.hyp, &p.reference] {
            let expected: Vec<String> = text.to_lowercase().split_whitespace().map(String::from).collect();
            assert_eq!(tokenize_words(text), expected, "{text}");
        }
    }
}

#[test]
fn matches_reference_tool_goldens() {
    let (pairs, goldens) = load();
    for (i, (p, g)) in pairs.iter().zip(&goldens.pairs).enumerate() {
        let h = tokenize_words(&p.hyp);
        let r = tokenize_words(&p.reference);
        close(rouge_n(&h, &r, 1).unwrap(), g.rouge1, 1e-3, &format!("pair {i} rouge1"));
        close(rouge_n(&h, &r, 2).unwrap(), g.rouge2, 1e-3, &format!("pair {i} rouge2"));
        close(rouge_l(&h, &r), g.rouge_l, 1e-3, &format!("pair {i} rougeL"));
        for (k, want) in [g.bleu1, g.bleu2, g.bleu3, g.bleu4].into_iter().enumerate() {
            let s = bleu(&h, &r, k + 1).unwrap();
            assert!(!s.smoothed, "pair {i} bleu{} smoothed", k + 1);
            close(s.score, want, 1e-3, &format!("pair {i} bleu{}", k + 1));
        }
        close(autocombat_metrics::chrf(&p.hyp, &p.reference), g.chrf, 1e-3, &format!("pair {i} chrf"));
    }
    let toks: Vec<(Vec<String>, Vec<String>)> = pairs
        .iter()
        .map(|p| (tokenize_words(&p.hyp), tokenize_words(&p.reference)))
        .collect();
    let cb = corpus_bleu(toks.iter().map(|(h, r)| (h.as_slice(), r.as_slice()))).unwrap();
    close(cb.score, goldens.corpus_bleu, 1e-3, "corpus_bleu");
}

#[test]
fn set_metrics_match_brute_force() {
    let (pairs, _) = load();
    let refs: Vec<Vec<String>> = pairs.iter().map(|p| tokenize_words(&p.reference)).collect();
    let idf = IdfTable::fit(&refs);
    for p in &pairs {
        let h = tokenize_words(&p.hyp);
        let r = tokenize_words(&p.reference);
        close(jaccard(&h, &r).value, oracle::jaccard(&h, &r), 1e-9, "jaccard");
        for n in 1..=2 {
            close(
                distinct_n(std::slice::from_ref(&h), n).unwrap().value,
                oracle::distinct_n(std::slice::from_ref(&h), n),
                1e-9,
                "distinct",
            );
        }
        close(
            tfidf_cosine(&h, &r, &idf).value,
            oracle::tfidf_cosine(&h, &r, &refs),
            1e-9,
            "tfidf",
        );
    }
}

#[test]
fn three_pair_corpus_matches_pooled_oracle() {
    let (pairs, _) = load();
    let toks: Vec<(Vec<String>, Vec<String>)> = pairs[..3]
        .iter()
        .map(|p| (tokenize_words(&p.hyp), tokenize_words(&p.reference)))
        .collect();
    let got = corpus_bleu(toks.iter().map(|(h, r)| (h.as_slice(), r.as_slice()))).unwrap();
    assert!(!got.smoothed);
    close(got.score, oracle::pooled_corpus_bleu(&toks), 1e-6, "3-pair corpus bleu");
}
