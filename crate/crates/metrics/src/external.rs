//! Process-boundary hook for scorers that live outside this crate (neural
//! metrics and the like).
//!
//! The child process receives one JSON object per line on stdin,
//! `{"hyp": "...", "ref": "..."}`, and must answer with exactly one JSON
//! object per input line on stdout mapping score names to numbers.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};

use serde::Serialize;

use crate::MetricError;

pub type NamedScores = BTreeMap<String, f64>;

pub trait ExternalScorer {
    fn name(&self) -> &str;
    fn score(&self, pairs: &[(String, String)]) -> Result<Vec<NamedScores>, MetricError>;
}

#[derive(Debug, Clone)]
pub struct ProcessScorer {
    name: String,
    program: String,
    args: Vec<String>,
}

impl ProcessScorer {
    pub fn new(name: impl Into<String>, program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            name: name.into(),
            program: program.into(),
            args,
        }
    }
}

#[derive(Serialize)]
struct PairLine<'a> {
    hyp: &'a str,
    #[serde(rename = "ref")]
    reference: &'a str,
}

impl ExternalScorer for ProcessScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, pairs: &[(String, String)]) -> Result<Vec<NamedScores>, MetricError> {
        let fail = |detail: String| MetricError::External {
            scorer: self.name.clone(),
            detail,
        };
        let mut input = Vec::new();
        for (hyp, reference) in pairs {
            serde_json::to_writer(&mut input, &PairLine { hyp, reference })
                .map_err(|e| fail(e.to_string()))?;
            input.push(b'\n');
        }

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("spawn {}: {e}", self.program)))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            stdin.write_all(&input).map_err(|e| fail(e.to_string()))?;
        }
        let output = child.wait_with_output().map_err(|e| fail(e.to_string()))?;
        if !output.status.success() {
            return Err(fail(format!(
                "exit {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }

        let stdout = String::from_utf8_lossy(&output.stdout);
        let rows = stdout
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str::<NamedScores>(line)
                    .map_err(|e| fail(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if rows.len() != pairs.len() {
            return Err(fail(format!(
                "expected {} score lines, got {}",
                pairs.len(),
                rows.len()
            )));
        }
        Ok(rows)
    }
}
