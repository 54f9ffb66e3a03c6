//! Result rows, manifests and their on-disk form.
//!
//! Rows use the long CSV schema `experiment,n,delta,q,p,seed,rep,metric,value`.
//! Floats are written in shortest round-trip form, so rerunning a manifest's
//! config reproduces the CSV byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::LabResult;

pub const CSV_HEADER: &str = "experiment,n,delta,q,p,seed,rep,metric,value";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub n: usize,
    pub delta: usize,
    pub q: f64,
    pub p: f64,
    pub seed: u64,
    /// Replica index; summary rows use `None`.
    pub rep: Option<usize>,
    pub metric: String,
    pub value: f64,
}

impl Row {
    pub fn csv(&self) -> String {
        let rep = self.rep.map(|r| r.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{:?},{:?},{},{},{},{:?}",
            self.experiment, self.n, self.delta, self.q, self.p, self.seed, rep, self.metric, self.value
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub version: String,
    /// Constants resolved while running: `p`, `p_u`, caps, radii, …
    pub resolved: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub manifest: Manifest,
    /// Stored in the CSV file only.
    #[serde(skip)]
    pub rows: Vec<Row>,
    pub summary: BTreeMap<String, f64>,
    /// Warnings and heuristics that fired (non-convergence, reduced ε, …).
    pub flags: Vec<String>,
    /// Some replica hit its runtime cap.
    pub capped: bool,
}

/// Common row fields of one experiment run.
#[derive(Clone, Copy, Debug)]
pub struct RowKey<'a> {
    pub experiment: &'a str,
    pub n: usize,
    pub delta: usize,
    pub q: f64,
    pub p: f64,
    pub seed: u64,
}

impl RowKey<'_> {
    pub fn row(&self, rep: Option<usize>, metric: &str, value: f64) -> Row {
        Row {
            experiment: self.experiment.to_string(),
            n: self.n,
            delta: self.delta,
            q: self.q,
            p: self.p,
            seed: self.seed,
            rep,
            metric: metric.to_string(),
            value,
        }
    }
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Self {
        Report {
            manifest: Manifest {
                config: config.clone(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                resolved: BTreeMap::new(),
            },
            rows: Vec::new(),
            summary: BTreeMap::new(),
            flags: Vec::new(),
            capped: false,
        }
    }

    pub fn resolve(&mut self, key: &str, value: f64) {
        self.manifest.resolved.insert(key.to_string(), value);
    }

    /// Records a summary statistic; non-finite values become a flag.
    pub fn summarize(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.summary.insert(key.to_string(), value);
        } else {
            self.flag(format!("{key} is undefined ({value})"));
        }
    }

    pub fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.csv());
        }
        out
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> LabResult<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = if self.manifest.config.experiment.is_empty() { "report" } else { &self.manifest.config.experiment };
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&json, serde_json::to_string_pretty(self)?)?;
        Ok((csv, json))
    }

    pub fn read_json(path: &Path) -> LabResult<Report> {
        Self::read_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn read_json_str(text: &str) -> LabResult<Report> {
        Ok(serde_json::from_str(text)?)
    }

    /// Human-readable summary lines.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k} = {v}");
        }
        for f in &self.flags {
            let _ = writeln!(out, "warning: {f}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_round_trip_floats() {
        let cfg = ExperimentConfig::new("demo");
        let mut r = Report::new(&cfg);
        let key = RowKey { experiment: "demo", n: 8, delta: 3, q: 2.0, p: 0.1 + 0.2, seed: 1 };
        r.rows.push(key.row(Some(0), "x", 1.0 / 3.0));
        r.rows.push(key.row(None, "median", 5.0));
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[4].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(fields[8].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(lines[2], "demo,8,3,2.0,0.30000000000000004,1,,median,5.0");
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new(&ExperimentConfig::new("demo"));
        r.resolve("p", 0.5);
        r.summarize("slope", 1.0);
        r.flag("note");
        r.summarize("empty", f64::NAN);
        r.rows.push(RowKey { experiment: "demo", n: 1, delta: 3, q: 2.0, p: 0.5, seed: 0 }.row(None, "y", 2.0));
        let (csv, json) = r.write(dir.path()).unwrap();
        let back = Report::read_json(&json).unwrap();
        assert_eq!(std::fs::read_to_string(csv).unwrap(), r.to_csv());
        assert_eq!((back.manifest, back.summary, back.flags), (r.manifest, r.summary, r.flags));
    }
}
