use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bleu::{BleuStats, MAX_ORDER};
use crate::chrf::{ChrfStats, DEFAULT_BETA};
use crate::overlap::{distinct_n, jaccard, tfidf_cosine, IdfTable};
use crate::rouge::{rouge_l, rouge_n};
use crate::{meteor, ter, tokenize_words, MetricError};

/// Every syntactic metric, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rouge1,
    Rouge2,
    RougeL,
    Bleu1,
    Bleu2,
    Bleu3,
    Bleu4,
    Meteor,
    Ter,
    CorpusBleu,
    Chrf,
    Jaccard,
    Dist1,
    Dist2,
    TfidfCosine,
}

impl Metric {
    pub const ALL: [Metric; 15] = [
        Metric::Rouge1,
        Metric::Rouge2,
        Metric::RougeL,
        Metric::Bleu1,
        Metric::Bleu2,
        Metric::Bleu3,
        Metric::Bleu4,
        Metric::Meteor,
        Metric::Ter,
        Metric::CorpusBleu,
        Metric::Chrf,
        Metric::Jaccard,
        Metric::Dist1,
        Metric::Dist2,
        Metric::TfidfCosine,
    ];

    /// Column header used in CSV reports.
    pub fn label(self) -> &'static str {
        match self {
            Metric::Rouge1 => "ROUGE-1",
            Metric::Rouge2 => "ROUGE-2",
            Metric::RougeL => "ROUGE-L",
            Metric::Bleu1 => "BLEU-1",
            Metric::Bleu2 => "BLEU-2",
            Metric::Bleu3 => "BLEU-3",
            Metric::Bleu4 => "BLEU-4",
            Metric::Meteor => "METEOR",
            Metric::Ter => "TER",
            Metric::CorpusBleu => "SacreBLEU",
            Metric::Chrf => "chrF",
            Metric::Jaccard => "Jaccard",
            Metric::Dist1 => "Dist-1",
            Metric::Dist2 => "Dist-2",
            Metric::TfidfCosine => "TF-IDF",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::Rouge1 => "rouge1",
            Metric::Rouge2 => "rouge2",
            Metric::RougeL => "rouge_l",
            Metric::Bleu1 => "bleu1",
            Metric::Bleu2 => "bleu2",
            Metric::Bleu3 => "bleu3",
            Metric::Bleu4 => "bleu4",
            Metric::Meteor => "meteor",
            Metric::Ter => "ter",
            Metric::CorpusBleu => "corpus_bleu",
            Metric::Chrf => "chrf",
            Metric::Jaccard => "jaccard",
            Metric::Dist1 => "dist1",
            Metric::Dist2 => "dist2",
            Metric::TfidfCosine => "tfidf_cosine",
        }
    }

    /// TER is the only metric where lower is better.
    pub fn higher_is_better(self) -> bool {
        self != Metric::Ter
    }

    /// Declared value range; TER is unbounded above.
    pub fn range(self) -> (f64, f64) {
        match self {
            Metric::Ter => (0.0, f64::INFINITY),
            Metric::CorpusBleu | Metric::Chrf => (0.0, 100.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn in_range(self, value: f64) -> bool {
        let (lo, hi) = self.range();
        // tolerate rounding at the top of the scale
        value.is_finite() && value >= lo && value <= hi + 1e-9
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFlag {
    BleuSmoothed,
    EmptyHypothesis,
    JaccardBothEmpty,
    DistinctNoNgrams,
    TfidfZeroVector,
}

/// Scores of one hypothesis against one reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub ter: f64,
    pub corpus_bleu: f64,
    pub chrf: f64,
    pub jaccard: f64,
    pub dist1: f64,
    pub dist2: f64,
    pub tfidf_cosine: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<ScoreFlag>,
}

impl PairScores {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rouge1 => self.rouge1,
            Metric::Rouge2 => self.rouge2,
            Metric::RougeL => self.rouge_l,
            Metric::Bleu1 => self.bleu1,
            Metric::Bleu2 => self.bleu2,
            Metric::Bleu3 => self.bleu3,
            Metric::Bleu4 => self.bleu4,
            Metric::Meteor => self.meteor,
            Metric::Ter => self.ter,
            Metric::CorpusBleu => self.corpus_bleu,
            Metric::Chrf => self.chrf,
            Metric::Jaccard => self.jaccard,
            Metric::Dist1 => self.dist1,
            Metric::Dist2 => self.dist2,
            Metric::TfidfCosine => self.tfidf_cosine,
        }
    }

    pub fn set(&mut self, metric: Metric, value: f64) {
        let slot = match metric {
            Metric::Rouge1 => &mut self.rouge1,
            Metric::Rouge2 => &mut self.rouge2,
            Metric::RougeL => &mut self.rouge_l,
            Metric::Bleu1 => &mut self.bleu1,
            Metric::Bleu2 => &mut self.bleu2,
            Metric::Bleu3 => &mut self.bleu3,
            Metric::Bleu4 => &mut self.bleu4,
            Metric::Meteor => &mut self.meteor,
            Metric::Ter => &mut self.ter,
            Metric::CorpusBleu => &mut self.corpus_bleu,
            Metric::Chrf => &mut self.chrf,
            Metric::Jaccard => &mut self.jaccard,
            Metric::Dist1 => &mut self.dist1,
            Metric::Dist2 => &mut self.dist2,
            Metric::TfidfCosine => &mut self.tfidf_cosine,
        };
        *slot = value;
    }

    pub fn zeroed() -> Self {
        PairScores {
            rouge1: 0.0,
            rouge2: 0.0,
            rouge_l: 0.0,
            bleu1: 0.0,
            bleu2: 0.0,
            bleu3: 0.0,
            bleu4: 0.0,
            meteor: 0.0,
            ter: 0.0,
            corpus_bleu: 0.0,
            chrf: 0.0,
            jaccard: 0.0,
            dist1: 0.0,
            dist2: 0.0,
            tfidf_cosine: 0.0,
            flags: Vec::new(),
        }
    }

    /// Every field lies inside its metric's declared range.
    pub fn within_ranges(&self) -> bool {
        Metric::ALL.iter().all(|&m| m.in_range(self.get(m)))
    }
}

/// Score one pair. `idf` is fitted on the evaluated reference set.
pub fn score_pair(hyp: &str, reference: &str, idf: &IdfTable) -> Result<PairScores, MetricError> {
    let h = tokenize_words(hyp);
    let r = tokenize_words(reference);
    let mut flags = Vec::new();

    let stats = BleuStats::from_pair(&h, &r);
    let mut bleu = [0.0; MAX_ORDER];
    for (k, slot) in bleu.iter_mut().enumerate() {
        let s = stats.score(k + 1);
        if s.smoothed {
            flags.push(ScoreFlag::BleuSmoothed);
        }
        if s.empty_hypothesis {
            flags.push(ScoreFlag::EmptyHypothesis);
        }
        *slot = s.score;
    }
    let jac = jaccard(&h, &r);
    if jac.degenerate {
        flags.push(ScoreFlag::JaccardBothEmpty);
    }
    let d1 = distinct_n(&[&h[..]], 1)?;
    let d2 = distinct_n(&[&h[..]], 2)?;
    if d1.degenerate || d2.degenerate {
        flags.push(ScoreFlag::DistinctNoNgrams);
    }
    let tfidf = tfidf_cosine(&h, &r, idf);
    if tfidf.degenerate {
        flags.push(ScoreFlag::TfidfZeroVector);
    }
    flags.sort();
    flags.dedup();

    Ok(PairScores {
        rouge1: rouge_n(&h, &r, 1)?,
        rouge2: rouge_n(&h, &r, 2)?,
        rouge_l: rouge_l(&h, &r),
        bleu1: bleu[0],
        bleu2: bleu[1],
        bleu3: bleu[2],
        bleu4: bleu[3],
        meteor: meteor::meteor(&h, &r),
        ter: ter::ter(&h, &r)?,
        corpus_bleu: 100.0 * bleu[3],
        chrf: ChrfStats::from_pair(hyp, reference).score(DEFAULT_BETA),
        jaccard: jac.value,
        dist1: d1.value,
        dist2: d2.value,
        tfidf_cosine: tfidf.value,
        flags,
    })
}

/// Running totals for macro means and pooled corpus statistics. `merge` is
/// associative so partial accumulators from parallel workers combine freely.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusAccumulator {
    count: usize,
    sums: [f64; 15],
    bleu: BleuStats,
    chrf: ChrfStats,
}

impl CorpusAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, hyp: &str, reference: &str, scores: &PairScores) {
        self.add_scores(scores);
        let h = tokenize_words(hyp);
        let r = tokenize_words(reference);
        self.bleu = self.bleu.merge(&BleuStats::from_pair(&h, &r));
        self.chrf = self.chrf.merge(&ChrfStats::from_pair(hyp, reference));
    }

    /// Add precomputed scores without texts (macro means only).
    pub fn add_scores(&mut self, scores: &PairScores) {
        self.count += 1;
        for (i, m) in Metric::ALL.iter().enumerate() {
            self.sums[i] += scores.get(*m);
        }
    }

    pub fn merge(mut self, other: &CorpusAccumulator) -> Self {
        self.count += other.count;
        for i in 0..self.sums.len() {
            self.sums[i] += other.sums[i];
        }
        self.bleu = self.bleu.merge(&other.bleu);
        self.chrf = self.chrf.merge(&other.chrf);
        self
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn means(&self) -> Option<PairScores> {
        if self.count == 0 {
            return None;
        }
        let mut out = PairScores::zeroed();
        for (i, m) in Metric::ALL.iter().enumerate() {
            out.set(*m, self.sums[i] / self.count as f64);
        }
        Some(out)
    }

    /// Pooled corpus BLEU-4 (0-100); `None` when no texts were added.
    pub fn pooled_corpus_bleu(&self) -> Option<f64> {
        (self.bleu.hyp_len + self.bleu.ref_len > 0)
            .then(|| crate::bleu::corpus_bleu_from_stats(&self.bleu).score)
    }

    pub fn pooled_chrf(&self) -> Option<f64> {
        (self.chrf.reference.iter().sum::<usize>() > 0).then(|| self.chrf.score(DEFAULT_BETA))
    }
}
