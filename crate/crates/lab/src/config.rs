//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # mixing sweep at half the uniqueness threshold
//! experiment = sweep
//! q = 2
//! delta = 3
//! p_rel = 0.75
//! sizes = 128, 256, 512
//! reps = 20
//! seed = 7
//! ```
//!
//! Blank lines and `#` comments are ignored. Recognised keys fill the
//! typed fields; any other key is kept in `extra` for the experiment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub p: Option<f64>,
    /// `p` as a fraction of `p_u(q, Δ)`.
    pub p_rel: Option<f64>,
    pub q: f64,
    pub delta: usize,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub cap: Option<u64>,
    pub out: Option<PathBuf>,
    pub force: bool,
    pub extra: BTreeMap<String, String>,
}

pub const DEFAULT_OUT_DIR: &str = "rclab-out";
pub const OUT_DIR_ENV: &str = "RCLAB_OUT_DIR";

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, LabError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| LabError::Parameter(format!("{key} = {value:?}: {e}")))
}

pub fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, LabError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig { experiment: experiment.into(), q: 2.0, delta: 3, reps: 1, ..Default::default() }
    }

    /// Sets one key; unknown keys go to `extra`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LabError> {
        let v = value.trim();
        match key {
            "experiment" => self.experiment = v.to_string(),
            "p" => self.p = Some(parse_value(key, v)?),
            "p_rel" => self.p_rel = Some(parse_value(key, v)?),
            "q" => self.q = parse_value(key, v)?,
            "delta" => self.delta = parse_value(key, v)?,
            "sizes" => self.sizes = parse_list(key, v)?,
            "n" => self.sizes = vec![parse_value(key, v)?],
            "reps" => self.reps = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "cap" => self.cap = Some(parse_value(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "force" => self.force = parse_value(key, v)?,
            _ => {
                self.extra.insert(key.to_string(), v.to_string());
            }
        }
        Ok(())
    }

    /// Parses the flat text format into `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), LabError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, LabError> {
        let mut c = ExperimentConfig::new("");
        c.apply_text(text)?;
        Ok(c)
    }

    /// Writes the flat text form; `from_text(to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let mut out = format!("experiment = {}\n", self.experiment);
        if let Some(p) = self.p {
            out += &format!("p = {p:?}\n");
        }
        if let Some(p) = self.p_rel {
            out += &format!("p_rel = {p:?}\n");
        }
        out += &format!("q = {:?}\ndelta = {}\n", self.q, self.delta);
        if !self.sizes.is_empty() {
            let s: Vec<String> = self.sizes.iter().map(|n| n.to_string()).collect();
            out += &format!("sizes = {}\n", s.join(", "));
        }
        out += &format!("reps = {}\nseed = {}\n", self.reps, self.seed);
        if let Some(c) = self.cap {
            out += &format!("cap = {c}\n");
        }
        if let Some(o) = &self.out {
            out += &format!("out = {}\n", o.display());
        }
        out += &format!("force = {}\n", self.force);
        for (k, v) in &self.extra {
            out += &format!("{k} = {v}\n");
        }
        out
    }

    pub fn extra<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, LabError>
    where
        T::Err: std::fmt::Display,
    {
        self.extra.get(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn extra_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, LabError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.extra(key)?.unwrap_or(default))
    }

    pub fn extra_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, LabError>
    where
        T::Err: std::fmt::Display,
    {
        self.extra.get(key).map(|v| parse_list(key, v)).transpose()
    }

    /// The single size of a one-size experiment.
    pub fn single_size(&self) -> Result<usize, LabError> {
        match self.sizes.as_slice() {
            [n] => Ok(*n),
            [] => Err(LabError::Parameter("missing n".into())),
            _ => Err(LabError::Parameter("expected a single n".into())),
        }
    }

    /// Resolves `p` (directly or as `p_rel · p_u`) and refuses values at or
    /// above `p_u(q, Δ)` unless `force` is set.
    pub fn resolve_p(&self) -> Result<ResolvedP, LabError> {
        let pu = if self.q >= 1.0 && self.delta >= 3 {
            Some(rcdyn::tree::p_u(self.q, self.delta, 1e-10)?)
        } else {
            None
        };
        let p = match (self.p, self.p_rel) {
            (Some(_), Some(_)) => return Err(LabError::Parameter("give either p or p_rel, not both".into())),
            (Some(p), None) => p,
            (None, Some(r)) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(LabError::Parameter(format!("p_rel = {r} must lie in (0, 1)")));
                }
                r * pu.ok_or_else(|| LabError::Parameter("p_rel needs q >= 1 and delta >= 3".into()))?
            }
            (None, None) => return Err(LabError::Parameter("missing p".into())),
        };
        if !(p > 0.0 && p < 1.0) {
            return Err(LabError::Parameter(format!("p = {p} must lie in (0, 1)")));
        }
        if !self.force {
            match pu {
                Some(pu) if p < pu => {}
                Some(pu) => {
                    return Err(LabError::Parameter(format!(
                        "p = {p} is not below p_u({}, {}) = {pu:.7}; pass --force to run anyway",
                        self.q, self.delta
                    )))
                }
                None => {
                    return Err(LabError::Parameter(format!(
                        "p_u is undefined for q = {}, delta = {}; pass --force to run anyway",
                        self.q, self.delta
                    )))
                }
            }
        }
        Ok(ResolvedP { p, p_u: pu })
    }

    /// Output directory: `out`, else `$RCLAB_OUT_DIR`, else `rclab-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedP {
    pub p: f64,
    pub p_u: Option<f64>,
}
