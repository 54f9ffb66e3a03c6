//! The experiments behind the `rclab` subcommands.
//!
//! Every experiment takes an [`ExperimentConfig`] and returns a [`Report`].
//! Replicas derive their seeds from the config seed with
//! [`derive_seed`](rcdyn::rng::derive_seed), run on the rayon pool and are
//! collected in replica order, so a report depends only on its config.

pub mod lower_bound;
pub mod shatter;
pub mod small;
pub mod spatial;
pub mod sweep;

use rcdyn::graphs::{named, sample_simple, MultiGraph};
use rcdyn::rng::{derive_seed, role};
use rcdyn::BoundaryCondition;

use crate::config::ExperimentConfig;
use crate::report::Report;
use crate::{LabError, LabResult};

pub use lower_bound::lower_bound;
pub use shatter::shatter_probe;
pub use small::{exact_check, gen_graph, glauber_run, p_u_report, sw_run, tree_recursion};
pub use spatial::spatial_mixing;
pub use sweep::mixing_sweep;

/// Rejection-sampling budget for simple random regular graphs.
pub const MAX_TRIES: usize = 10_000;

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `|mean − target| ≤ max(abs, 3σ)`.
    pub fn within(&self, target: f64, abs: f64) -> bool {
        (self.mean - target).abs() <= abs.max(3.0 * self.se)
    }
}

/// Mean and standard error of per-batch means.
pub fn estimate_from_batches(batch_means: &[f64]) -> Estimate {
    let b = batch_means.len();
    let mean = batch_means.iter().sum::<f64>() / b.max(1) as f64;
    let se = if b < 2 {
        f64::NAN
    } else {
        let var = batch_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    };
    Estimate { mean, se }
}

/// Simple `Δ`-regular graph drawn from the graph stream of `seed`.
pub fn regular_graph(n: usize, delta: usize, seed: u64) -> LabResult<MultiGraph> {
    Ok(sample_simple(n, delta, derive_seed(seed, role::GRAPH), MAX_TRIES)?)
}

/// `free`, `wired:0,3,5` or `classes:0,1;2,3`.
pub fn parse_bc(text: &str) -> LabResult<BoundaryCondition> {
    let list = |s: &str| -> LabResult<Vec<usize>> { crate::config::parse_list("bc", s) };
    let text = text.trim();
    if text.is_empty() || text == "free" {
        Ok(BoundaryCondition::free())
    } else if let Some(rest) = text.strip_prefix("wired:") {
        Ok(BoundaryCondition::wired(&list(rest)?))
    } else if let Some(rest) = text.strip_prefix("classes:") {
        let classes = rest.split(';').map(list).collect::<LabResult<Vec<_>>>()?;
        Ok(BoundaryCondition::new(classes)?)
    } else {
        Err(LabError::Parameter(format!("unknown boundary condition {text:?}")))
    }
}

/// The `graph` key (a named graph or `file:<path>`), else a simple random
/// `Δ`-regular graph on the single configured size.
pub fn config_graph(cfg: &ExperimentConfig) -> LabResult<MultiGraph> {
    match cfg.extra.get("graph") {
        Some(name) => {
            if let Some(path) = name.strip_prefix("file:") {
                Ok(MultiGraph::from_text(&std::fs::read_to_string(path)?)?)
            } else {
                named::by_name(name).ok_or_else(|| LabError::Parameter(format!("unknown graph {name:?}")))
            }
        }
        None => regular_graph(cfg.single_size()?, cfg.delta, cfg.seed),
    }
}

pub fn config_bc(cfg: &ExperimentConfig, g: &MultiGraph) -> LabResult<BoundaryCondition> {
    let bc = parse_bc(cfg.extra.get("bc").map(String::as_str).unwrap_or("free"))?;
    if let Some(v) = bc.max_vertex().filter(|&v| v >= g.n()) {
        return Err(LabError::Parameter(format!("wired vertex {v} out of range for n = {}", g.n())));
    }
    Ok(bc)
}

/// Runs the experiment named in `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Report> {
    match cfg.experiment.as_str() {
        "sweep" | "coupling-time" => mixing_sweep(cfg),
        "spatial-mixing" => spatial_mixing(cfg),
        "lower-bound" => lower_bound(cfg),
        "shatter-probe" => shatter_probe(cfg),
        "exact-check" => exact_check(cfg),
        "glauber-run" => glauber_run(cfg),
        "sw-run" => sw_run(cfg),
        "tree-recursion" => tree_recursion(cfg),
        "p-u" => p_u_report(cfg),
        "gen-graph" => gen_graph(cfg).map(|(r, _)| r),
        other => Err(LabError::Usage(format!("unknown experiment {other:?}"))),
    }
}

/// `q ≥ 1` is needed for the monotone coupling.
pub(crate) fn require_monotone(q: f64) -> LabResult<()> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("q = {q} < 1 has no monotone coupling")))
    }
}

pub(crate) fn n_ln_n(n: usize) -> f64 {
    n as f64 * (n.max(2) as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_text() {
        assert!(parse_bc("free").unwrap().is_free());
        assert_eq!(parse_bc("wired:2,0").unwrap(), BoundaryCondition::wired(&[0, 2]));
        let bc = parse_bc("classes:0,1;2,3").unwrap();
        assert_eq!(bc.classes().len(), 2);
        assert!(parse_bc("open").is_err());
    }

    #[test]
    fn estimate_tolerance_is_absolute_or_three_sigma() {
        let e = Estimate { mean: 0.508, se: 0.001 };
        assert!(e.within(0.5, 0.01));
        assert!(!e.within(0.5, 0.005));
        assert!(Estimate { mean: 0.508, se: 0.003 }.within(0.5, 0.005));
    }
}
