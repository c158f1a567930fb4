use autocombat_metrics::ter::ter_detail;
use autocombat_metrics::{
    chrf_beta, jaccard, meteor, rouge_n, score_pair, tfidf_cosine, tokenize_words, IdfTable,
    Metric,
};
use autocombat_oracles as oracle;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: &[&str] = &[
    "the", "a", "file", "list", "use", "call", "value", "returns", "none", "error", ",", ".",
    "=", "(", ")", "x.y", "foo()", "my_var", "string", "int", "loop", "is", "not", "deprecated",
    "method", "instead", "running", "runs", "connection", "connected",
];

fn random_text(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn ranges_hold_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let idf = IdfTable::fit(&[tokenize_words("the file is not a list")]);
    let mut checked = 0;
    while checked < 10_000 {
        let h = random_text(&mut rng, 14);
        let r = random_text(&mut rng, 14);
        if tokenize_words(&r).is_empty() {
            continue;
        }
        let s = score_pair(&h, &r, &idf).unwrap();
        for m in Metric::ALL {
            assert!(m.in_range(s.get(m)), "{m} = {} for {h:?} / {r:?}", s.get(m));
        }
        checked += 1;
    }
}

#[test]
fn greedy_ter_bounds() {
    // greedy result lies between the optimal shift search and plain Levenshtein
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let small = ["a", "b", "c", "d"];
    for _ in 0..300 {
        let hl = rng.random_range(1..=5);
        let rl = rng.random_range(1..=5);
        let h: Vec<String> = (0..hl).map(|_| small.choose(&mut rng).unwrap().to_string()).collect();
        let r: Vec<String> = (0..rl).map(|_| small.choose(&mut rng).unwrap().to_string()).collect();
        let d = ter_detail(&h, &r).unwrap();
        let greedy = d.edits + d.shifts;
        let optimal = oracle::optimal_shift_edits(&h, &r, 2);
        assert!(greedy >= optimal, "{h:?} {r:?}: greedy {greedy} < optimal {optimal}");
        assert!(greedy <= oracle::levenshtein(&h, &r), "{h:?} {r:?}");
    }
}

#[test]
fn small_ter_examples_are_optimal() {
    for (h, r) in [("a b c d", "a x c d"), ("c d a b", "a b c d")] {
        let h = tokenize_words(h);
        let r = tokenize_words(r);
        let d = ter_detail(&h, &r).unwrap();
        assert_eq!(d.edits + d.shifts, oracle::optimal_shift_edits(&h, &r, 3));
    }
}

#[test]
fn rouge1_never_increases_under_corruption() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..500 {
        let x = loop {
            let t = tokenize_words(&random_text(&mut rng, 20));
            if t.len() >= 5 {
                break t;
            }
        };
        let mut positions: Vec<usize> = (0..x.len()).collect();
        for i in (1..positions.len()).rev() {
            let j = rng.random_range(0..=i);
            positions.swap(i, j);
        }
        let mut corrupted = x.clone();
        let mut prev = rouge_n(&corrupted, &x, 1).unwrap();
        for (k, &pos) in positions.iter().take(5).enumerate() {
            corrupted[pos] = format!("<junk{trial}-{k}>");
            let now = rouge_n(&corrupted, &x, 1).unwrap();
            assert!(now <= prev + 1e-12, "k={} rose {prev} -> {now}", k + 1);
            prev = now;
        }
    }
}

proptest! {
    #[test]
    fn meteor_self_score_is_exact(words in prop::collection::vec("[a-z]{1,6}", 1..30)) {
        let x = tokenize_words(&words.join(" "));
        let n = x.len() as f64;
        prop_assert_eq!(meteor(&x, &x), 1.0 - 0.5 / n.powi(3));
    }

    #[test]
    fn symmetric_metrics(a in "[a-e ]{0,30}", b in "[a-e ]{0,30}") {
        let ta = tokenize_words(&a);
        let tb = tokenize_words(&b);
        prop_assert_eq!(jaccard(&ta, &tb).value, jaccard(&tb, &ta).value);
        let idf = IdfTable::fit(&[ta.clone(), tb.clone()]);
        prop_assert_eq!(tfidf_cosine(&ta, &tb, &idf).value, tfidf_cosine(&tb, &ta, &idf).value);
        prop_assert!((chrf_beta(&a, &b, 1.0) - chrf_beta(&b, &a, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn self_similarity(words in prop::collection::vec("[a-z]{1,5}|[,.=]", 1..25)) {
        let text = words.join(" ");
        let toks = tokenize_words(&text);
        prop_assume!(!toks.is_empty());
        let idf = IdfTable::fit(&[toks]);
        let s = score_pair(&text, &text, &idf).unwrap();
        prop_assert_eq!(s.ter, 0.0);
        for m in Metric::ALL {
            let want = match m {
                Metric::Ter | Metric::Meteor | Metric::Dist1 | Metric::Dist2 => continue,
                Metric::CorpusBleu | Metric::Chrf => 100.0,
                _ => 1.0,
            };
            // n-gram metrics of order k need at least k tokens
            let order = match m {
                Metric::Rouge2 | Metric::Bleu2 => 2,
                Metric::Bleu3 => 3,
                Metric::Bleu4 | Metric::CorpusBleu => 4,
                _ => 1,
            };
            if tokenize_words(&text).len() < order {
                continue;
            }
            prop_assert!((s.get(m) - want).abs() < 1e-9, "{} = {}", m, s.get(m));
        }
    }
}
