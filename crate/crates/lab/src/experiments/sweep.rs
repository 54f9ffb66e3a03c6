use rcdyn::dynamics::{coupling_time_estimate, default_cap};
use rcdyn::rng::{derive_seed, role};
use rcdyn::BoundaryCondition;

use super::{n_ln_n, regular_graph, require_monotone};
use crate::config::ExperimentConfig;
use crate::report::{Report, RowKey};
use crate::stats::{coupon_mean, linear_fit};
use crate::{LabError, LabResult};

/// Coupling time of the all-open and all-closed chains on a fresh simple
/// `Δ`-regular graph for every size, with the log-log slope of the median
/// against `n ln n`.
///
/// Size `n` uses the seed `derive_seed(seed, n)` for its graph and update
/// streams. Reps that reach the cap are reported at the cap and flagged.
pub fn mixing_sweep(cfg: &ExperimentConfig) -> LabResult<Report> {
    require_monotone(cfg.q)?;
    let rp = cfg.resolve_p()?;
    if cfg.sizes.is_empty() {
        return Err(LabError::Parameter("no sizes given".into()));
    }
    if cfg.reps == 0 {
        return Err(LabError::Parameter("reps must be positive".into()));
    }
    let (p, q, delta) = (rp.p, cfg.q, cfg.delta);
    let mut report = Report::new(cfg);
    report.resolve("p", p);
    if let Some(pu) = rp.p_u {
        report.resolve("p_u", pu);
    }
    let name = if cfg.experiment.is_empty() { "sweep" } else { &cfg.experiment };
    let bc = BoundaryCondition::free();
    let mut points = Vec::new();
    for &n in &cfg.sizes {
        let size_seed = derive_seed(cfg.seed, n as u64);
        let g = regular_graph(n, delta, size_seed)?;
        let cap = cfg.cap.unwrap_or_else(|| default_cap(n));
        report.resolve(&format!("cap_n{n}"), cap as f64);
        let s = coupling_time_estimate(&g, p, q, &bc, cfg.reps, derive_seed(size_seed, role::UPDATES), cap)?;
        let key = RowKey { experiment: name, n, delta, q, p, seed: cfg.seed };
        for (rep, (&t, &c)) in s.times.iter().zip(&s.censored).enumerate() {
            report.rows.push(key.row(Some(rep), "coupling_time", t as f64));
            report.rows.push(key.row(Some(rep), "censored", c as u8 as f64));
        }
        report.rows.push(key.row(None, "median", s.median));
        report.rows.push(key.row(None, "mean", s.mean));
        report.rows.push(key.row(None, "median_over_n_ln_n", s.median / n_ln_n(n)));
        report.summarize(&format!("median_n{n}"), s.median);
        report.summarize(&format!("mean_n{n}"), s.mean);
        if q == 1.0 {
            report.summarize(&format!("coupon_mean_n{n}"), coupon_mean(g.num_edges()));
        }
        if s.censored_count() > 0 {
            report.capped = true;
            report.flag(format!("n = {n}: {} of {} reps reached the cap {cap}", s.censored_count(), cfg.reps));
        }
        if s.violations > 0 {
            report.flag(format!("n = {n}: {} monotonicity violations", s.violations));
        }
        points.push((n_ln_n(n).ln(), s.median.ln()));
    }
    match linear_fit(&points) {
        Some((slope, _, r2)) => {
            report.summarize("slope", slope);
            report.summarize("slope_r2", r2);
        }
        None => report.flag("slope undefined: insufficient points (need two or more sizes)"),
    }
    Ok(report)
}
