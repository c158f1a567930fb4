use autocombat_core::concern::{confusion, score, ConcernPrediction, ConfusionCounts, PredictedLabel};
use autocombat_core::harness::stats::{cohens_kappa, mann_whitney_u, MwMethod};
use autocombat_core::post_model::{Comment, GoldLabel};
use autocombat_oracles as oracle;
use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn classification_matches_definitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1_000 {
        // include zero cells so undefined ratios come up
        let mut cell = || if rng.random_bool(0.1) { 0 } else { rng.random_range(0..500u64) };
        let c = ConfusionCounts::new(cell(), cell(), cell(), cell());
        let Ok(s) = score(&c) else {
            assert_eq!(c.total(), 0);
            continue;
        };
        let want = oracle::classification(c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
        for (got, want) in s.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "matrix {i}: {c:?} {got} vs {want}");
        }
        assert!((-1.0..=1.0).contains(&s.mcc));
        let flipped = score(&c.flipped_predictions()).unwrap();
        assert!((flipped.mcc + s.mcc).abs() < 1e-12, "{c:?}");
    }
}

#[test]
fn tally_matches_brute_force_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = Utc.timestamp_opt(0, 0).unwrap();
    let gold: Vec<Comment> = (0..200)
        .map(|i| {
            let label = if rng.random_bool(0.4) { GoldLabel::IA } else { GoldLabel::GC };
            Comment::new(format!("c{i}"), "u", "body", t, Some(label)).unwrap()
        })
        .collect();
    let mut preds: Vec<ConcernPrediction> = gold
        .iter()
        .map(|c| ConcernPrediction {
            comment_id: c.id.clone(),
            predicted_label: if rng.random_bool(0.5) { PredictedLabel::IA } else { PredictedLabel::GC },
            concern_text: None,
        })
        .collect();
    preds.shuffle(&mut rng);
    let mut want = [0u64; 4];
    for p in &preds {
        let g = gold.iter().find(|c| c.id == p.comment_id).unwrap().gold_label.unwrap();
        let idx = match (p.predicted_label, g) {
            (PredictedLabel::IA, GoldLabel::IA) => 0,
            (PredictedLabel::IA, _) => 1,
            (PredictedLabel::GC, GoldLabel::GC) => 2,
            (PredictedLabel::GC, _) => 3,
        };
        want[idx] += 1;
    }
    assert_eq!(confusion(&preds, &gold).unwrap(), ConfusionCounts::new(want[0], want[1], want[2], want[3]));
}

#[test]
fn exact_mann_whitney_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for n1 in 1..10usize {
        for n2 in 1..=(10 - n1) {
            for trial in 0..12 {
                // few distinct values on odd trials to force ties
                let spread = if trial % 2 == 1 { 4 } else { 1000 };
                let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(0..spread) as f64).collect() };
                let (a, b) = (draw(n1), draw(n2));
                let got = mann_whitney_u(&a, &b).unwrap();
                let (u, p) = oracle::mann_whitney_exact_by_enumeration(&a, &b);
                assert_eq!(got.method, MwMethod::Exact);
                assert!((got.u - u).abs() < 1e-12, "{a:?} {b:?}");
                assert!((got.p_two_sided - p).abs() < 1e-12, "{a:?} {b:?}: {} vs {p}", got.p_two_sided);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 45 * 12);
}

#[test]
fn normal_branch_tracks_permutation_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..30).map(|_| rng.random_range(0.15..1.15)).collect();
    let got = mann_whitney_u(&a, &b).unwrap();
    assert_eq!(got.method, MwMethod::Normal);
    assert_eq!(got.u, oracle::mann_whitney_u_pairwise(&a, &b));

    let centre = (a.len() * b.len()) as f64 / 2.0;
    let observed = (got.u - centre).abs();
    let mut pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
    let rounds = 20_000;
    let mut extreme = 0;
    for _ in 0..rounds {
        pooled.shuffle(&mut rng);
        let u = oracle::mann_whitney_u_pairwise(&pooled[..30], &pooled[30..]);
        if (u - centre).abs() >= observed {
            extreme += 1;
        }
    }
    let mc = extreme as f64 / rounds as f64;
    assert!((got.p_two_sided - mc).abs() < 0.02, "{} vs {mc}", got.p_two_sided);

    let far: Vec<f64> = b.iter().map(|x| x + 5.0).collect();
    assert!(mann_whitney_u(&a, &far).unwrap().p_two_sided < 0.05);
}

#[test]
fn kappa_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let n = rng.random_range(2..40);
        let k = rng.random_range(2..4usize);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let got = cohens_kappa(&a, &b).unwrap();
        assert!((-1.0..=1.0).contains(&got.kappa));
        assert!((got.kappa - oracle::cohens_kappa(&a, &b, k)).abs() < 1e-9);
        if a.iter().any(|x| *x != a[0]) {
            assert_eq!(cohens_kappa(&a, &a).unwrap().kappa, 1.0);
        }
    }
    let a: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..3)).collect();
    let b: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..3)).collect();
    assert!(cohens_kappa(&a, &b).unwrap().kappa.abs() < 0.05);
}
