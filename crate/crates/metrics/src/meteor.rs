//! METEOR with exact and stemmed matching stages only (no synonym stage).
//! Reports carry the variant name [`METEOR_VARIANT`].

use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

pub const METEOR_VARIANT: &str = "meteor-ex/st";

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

pub fn stem(word: &str) -> String {
    stemmer().stem(word).into_owned()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorDetail {
    pub score: f64,
    pub matches: usize,
    pub chunks: usize,
    pub exact_matches: usize,
    pub stem_matches: usize,
}

pub fn meteor(hyp: &[String], reference: &[String]) -> f64 {
    meteor_detail(hyp, reference).score
}

pub fn meteor_detail(hyp: &[String], reference: &[String]) -> MeteorDetail {
    // alignment[i] = ref index matched by hyp token i
    let mut alignment: Vec<Option<usize>> = vec![None; hyp.len()];
    let mut ref_used = vec![false; reference.len()];

    let exact_matches = align_stage(hyp, reference, &mut alignment, &mut ref_used, |h, r| h == r);
    let hyp_stems: Vec<String> = hyp.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|w| stem(w)).collect();
    let stem_matches = align_stage(&hyp_stems, &ref_stems, &mut alignment, &mut ref_used, |h, r| {
        h == r
    });

    let matches = exact_matches + stem_matches;
    if matches == 0 {
        return MeteorDetail {
            score: 0.0,
            matches: 0,
            chunks: 0,
            exact_matches,
            stem_matches,
        };
    }
    let chunks = count_chunks(&alignment);

    let precision = matches as f64 / hyp.len() as f64;
    let recall = matches as f64 / reference.len() as f64;
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let frag = (chunks.pow(3)) as f64 / (matches.pow(3)) as f64;
    let penalty = 0.5 * frag;
    MeteorDetail {
        score: fmean * (1.0 - penalty),
        matches,
        chunks,
        exact_matches,
        stem_matches,
    }
}

/// Match still-unaligned hypothesis tokens left to right. A candidate that
/// extends the previous match's chunk is preferred, otherwise the first free
/// reference position wins.
fn align_stage<F>(
    hyp: &[String],
    reference: &[String],
    alignment: &mut [Option<usize>],
    ref_used: &mut [bool],
    eq: F,
) -> usize
where
    F: Fn(&str, &str) -> bool,
{
    let mut added = 0;
    let mut prev_ref: Option<usize> = None;
    for (i, token) in hyp.iter().enumerate() {
        if let Some(r) = alignment[i] {
            prev_ref = Some(r);
            continue;
        }
        let next = prev_ref.map(|p| p + 1).filter(|&j| {
            j < reference.len() && !ref_used[j] && eq(token, &reference[j])
        });
        let chosen = next.or_else(|| {
            (0..reference.len()).find(|&j| !ref_used[j] && eq(token, &reference[j]))
        });
        if let Some(j) = chosen {
            alignment[i] = Some(j);
            ref_used[j] = true;
            prev_ref = Some(j);
            added += 1;
        } else {
            prev_ref = None;
        }
    }
    added
}

fn count_chunks(alignment: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for (i, r) in alignment.iter().enumerate() {
        let Some(r) = *r else {
            prev = None;
            continue;
        };
        match prev {
            Some((pi, pr)) if pi + 1 == i && pr + 1 == r => {}
            _ => chunks += 1,
        }
        prev = Some((i, r));
    }
    chunks
}
