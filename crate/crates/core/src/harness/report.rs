//! CSV and JSON report files. Numbers are written with four decimals.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use autocombat_metrics::Metric;
use serde::{Deserialize, Serialize};

use super::annotations::Agreement;
use super::{Aggregate, BaselineComparison};
use crate::concern::ClassificationScores;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub aggregate: Aggregate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_used_question_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agreement: Vec<Agreement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineComparison>,
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn write_baseline_csv(path: &Path, cmp: &BaselineComparison) -> io::Result<()> {
    let header = strings(&["metric", "ours", "baseline", "u", "p_value", "significant", "favors_baseline"]);
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.metric.label().to_string(),
                f4(r.ours_mean),
                f4(r.baseline_mean),
                f4(r.u),
                f4(r.p_value),
                r.significant.to_string(),
                r.favors_baseline.to_string(),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Write every applicable report into `dir` and return the paths written.
/// Tables with no rows are skipped.
pub fn write_reports(dir: &Path, bundle: &ReportBundle) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let reports = &bundle.aggregate.reports;

    let classification: Vec<(String, &ClassificationScores)> = reports
        .iter()
        .filter_map(|r| r.classification.as_ref().map(|c| (r.quartile.to_string(), c)))
        .collect();
    if !classification.is_empty() {
        let mut header = vec!["quartile".to_string()];
        header.extend(ClassificationScores::COLUMNS.iter().map(|c| c.to_string()));
        let rows: Vec<Vec<String>> = classification
            .iter()
            .map(|(q, c)| std::iter::once(q.clone()).chain(c.values().map(f4)).collect())
            .collect();
        let p = dir.join("classification.csv");
        write_csv(&p, &header, &rows)?;
        written.push(p);
    }

    let syntactic: Vec<_> = reports
        .iter()
        .filter_map(|r| r.syntactic.as_ref().map(|s| (r, s)))
        .collect();
    if !syntactic.is_empty() {
        let mut header = strings(&["quartile", "pairs"]);
        header.extend(Metric::ALL.iter().map(|m| m.label().to_string()));
        let rows: Vec<Vec<String>> = syntactic
            .iter()
            .map(|(r, s)| {
                let mut row = vec![r.quartile.to_string(), r.scored_pairs.to_string()];
                row.extend(Metric::ALL.iter().map(|m| f4(s.get(*m))));
                row
            })
            .collect();
        let p = dir.join("syntactic.csv");
        write_csv(&p, &header, &rows)?;
        written.push(p);
    }

    let intents: Vec<_> = reports
        .iter()
        .filter_map(|r| r.intent_distribution.as_ref().map(|d| (r.quartile, d)))
        .collect();
    if !intents.is_empty() {
        let header = strings(&["quartile", "labeled", "yes_pct", "partially_yes_pct", "no_pct"]);
        let rows: Vec<Vec<String>> = intents
            .iter()
            .map(|(q, d)| vec![q.to_string(), d.labeled.to_string(), f4(d.yes), f4(d.partially_yes), f4(d.no)])
            .collect();
        let p = dir.join("intent.csv");
        write_csv(&p, &header, &rows)?;
        written.push(p);
    }

    let mut used: Vec<Vec<String>> = reports
        .iter()
        .filter_map(|r| r.used_question_rate.map(|u| vec![r.quartile.to_string(), f4(u)]))
        .collect();
    if let Some(all) = bundle.overall_used_question_rate {
        used.push(vec!["all".into(), f4(all)]);
    }
    if !used.is_empty() {
        let p = dir.join("used_question.csv");
        write_csv(&p, &strings(&["quartile", "used_question_pct"]), &used)?;
        written.push(p);
    }

    if let Some(cmp) = &bundle.baseline {
        let p = dir.join("baseline.csv");
        write_baseline_csv(&p, cmp)?;
        written.push(p);
    }

    let p = dir.join("report.json");
    let json = serde_json::to_string_pretty(bundle).map_err(io::Error::other)?;
    fs::write(&p, json + "\n")?;
    written.push(p);
    Ok(written)
}
