//! Intent-preservation labels supplied by human annotators as CSV with the
//! header `instance_id,annotator,label`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::stats::{cohens_kappa, Kappa, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Intent {
    Yes,
    PartiallyYes,
    No,
}

impl Intent {
    pub const ALL: [Intent; 3] = [Intent::Yes, Intent::PartiallyYes, Intent::No];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Yes => "YES",
            Intent::PartiallyYes => "PARTIALLY_YES",
            Intent::No => "NO",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_uppercase() })
            .collect();
        match norm.as_str() {
            "YES" => Ok(Intent::Yes),
            "PARTIALLY_YES" => Ok(Intent::PartiallyYes),
            "NO" => Ok(Intent::No),
            _ => Err(format!("unknown intent label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentLabel {
    pub instance_id: String,
    pub annotator: String,
    pub label: Intent,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("annotations line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error("annotations: {0}")]
    Csv(String),
}

#[derive(Deserialize)]
struct Row {
    instance_id: String,
    annotator: String,
    label: String,
}

/// Read labels, rejecting unknown labels and repeated (instance, annotator)
/// pairs. Order is preserved.
pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<IntentLabel>, AnnotationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| AnnotationError::Row {
            line,
            reason: e.to_string(),
        })?;
        let label = row.label.parse().map_err(|reason| AnnotationError::Row { line, reason })?;
        if row.instance_id.is_empty() || row.annotator.is_empty() {
            return Err(AnnotationError::Row {
                line,
                reason: "empty instance_id or annotator".into(),
            });
        }
        if !seen.insert((row.instance_id.clone(), row.annotator.clone())) {
            return Err(AnnotationError::Row {
                line,
                reason: format!("second label for ({}, {})", row.instance_id, row.annotator),
            });
        }
        out.push(IntentLabel {
            instance_id: row.instance_id,
            annotator: row.annotator,
            label,
        });
    }
    Ok(out)
}

/// Annotators in order of first appearance.
pub fn annotators(labels: &[IntentLabel]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for l in labels {
        if !out.contains(&l.annotator) {
            out.push(l.annotator.clone());
        }
    }
    out
}

/// Labels of one annotator keyed by instance.
pub fn labels_of<'a>(labels: &'a [IntentLabel], annotator: &str) -> BTreeMap<&'a str, Intent> {
    labels
        .iter()
        .filter(|l| l.annotator == annotator)
        .map(|l| (l.instance_id.as_str(), l.label))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub annotator_a: String,
    pub annotator_b: String,
    /// Instances labeled by both.
    pub shared: usize,
    pub kappa: Kappa,
}

/// Kappa between two annotators over the instances both labeled.
pub fn agreement(labels: &[IntentLabel], a: &str, b: &str) -> Result<Agreement, StatsError> {
    let la = labels_of(labels, a);
    let lb = labels_of(labels, b);
    let (xs, ys): (Vec<Intent>, Vec<Intent>) = la
        .iter()
        .filter_map(|(id, x)| lb.get(id).map(|y| (*x, *y)))
        .unzip();
    Ok(Agreement {
        annotator_a: a.to_string(),
        annotator_b: b.to_string(),
        shared: xs.len(),
        kappa: cohens_kappa(&xs, &ys)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "instance_id,annotator,label\n1,ann1,YES\n1,ann2,yes\n2,ann1,PARTIALLY YES\n2,ann2,NO\n3,ann2,NO\n";

    #[test]
    fn reads_and_normalizes() {
        let l = read_annotations(CSV.as_bytes()).unwrap();
        assert_eq!(l.len(), 5);
        assert_eq!(l[2].label, Intent::PartiallyYes);
        assert_eq!(annotators(&l), ["ann1", "ann2"]);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "instance_id,annotator,label\n1,a,YES\n1,a,NO\n";
        assert_eq!(
            read_annotations(dup.as_bytes()).unwrap_err(),
            AnnotationError::Row {
                line: 3,
                reason: "second label for (1, a)".into()
            }
        );
        let bad = "instance_id,annotator,label\n1,a,MAYBE\n";
        assert!(matches!(read_annotations(bad.as_bytes()), Err(AnnotationError::Row { line: 2, .. })));
    }

    #[test]
    fn agreement_over_shared_instances() {
        let l = read_annotations(CSV.as_bytes()).unwrap();
        let a = agreement(&l, "ann1", "ann2").unwrap();
        assert_eq!(a.shared, 2);
        assert_eq!(a.kappa.observed, 0.5);
    }
}
