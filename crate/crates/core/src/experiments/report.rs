//! Report container with CSV and JSON output.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// A value with an optional 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metric {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl Metric {
    pub fn exact(value: f64) -> Self {
        Metric {
            value,
            half_width: None,
        }
    }

    pub fn with_ci(value: f64, half_width: f64) -> Self {
        Metric {
            value,
            half_width: Some(half_width),
        }
    }
}

impl From<super::Estimate> for Metric {
    fn from(e: super::Estimate) -> Self {
        Metric::with_ci(e.mean, e.half_width)
    }
}

impl From<super::Proportion> for Metric {
    fn from(p: super::Proportion) -> Self {
        Metric::with_ci(p.p, p.half_width)
    }
}

/// One cell or approach.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub metrics: Vec<(String, Metric)>,
}

impl ReportRow {
    pub fn new(label: impl Into<String>) -> Self {
        ReportRow {
            label: label.into(),
            metrics: Vec::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, metric: impl Into<Metric>) -> Self {
        self.metrics.push((name.into(), metric.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<Metric> {
        self.metrics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| *m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub base_seed: u64,
    pub rows: Vec<ReportRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// First 16 hex digits of the SHA-256 of the config's JSON text. Object
/// keys are serialized in sorted order, so equal configs hash equally.
pub fn config_hash(config: &serde_json::Value) -> String {
    let text = serde_json::to_string(config).expect("JSON values always serialize");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(digest)[..16].to_string()
}

impl ExperimentReport {
    pub fn new<C: Serialize>(experiment: &str, config: &C, base_seed: u64) -> Self {
        let config = serde_json::to_value(config).expect("experiment configs serialize");
        ExperimentReport {
            experiment: experiment.to_string(),
            config_hash: config_hash(&config),
            config,
            base_seed,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Wide CSV: `label` then, per metric, its value and `<name>_hw`.
    pub fn to_csv(&self) -> String {
        let mut names: Vec<&str> = Vec::new();
        for row in &self.rows {
            for (name, _) in &row.metrics {
                if !names.contains(&name.as_str()) {
                    names.push(name);
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string()];
        for n in &names {
            header.push(n.to_string());
            header.push(format!("{n}_hw"));
        }
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.label.clone()];
            for n in &names {
                match row.get(n) {
                    Some(m) => {
                        rec.push(m.value.to_string());
                        rec.push(m.half_width.map(|h| h.to_string()).unwrap_or_default());
                    }
                    None => {
                        rec.push(String::new());
                        rec.push(String::new());
                    }
                }
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Writes `<experiment>-<hash>.csv` and `.json` into `dir`.
    pub fn write_files(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let stem = format!("{}-{}", self.experiment, self.config_hash);
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        fs::write(&csv, self.to_csv())?;
        fs::write(&json, self.to_json())?;
        Ok((csv, json))
    }
}
