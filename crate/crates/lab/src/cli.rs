//! The `rclab` command line.
//!
//! Settings are layered: built-in defaults, then `--config <file>` (the
//! flat `key = value` format, or a JSON manifest written by an earlier
//! run), then `--set key=value` pairs, then the named flags.
//!
//! Exit codes: 0 success, 1 usage error, 2 parameter error, 3 runtime cap.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::experiments::{self, small::rational};
use crate::report::Report;
use crate::{LabError, LabResult};

#[derive(Parser, Debug)]
#[command(name = "rclab", version, about = "Random-cluster dynamics experiments", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` config file or JSON manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $RCLAB_OUT_DIR, else `rclab-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run even when p is not below p_u(q, Δ).
    #[arg(long)]
    force: bool,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug, Default)]
struct Model {
    #[arg(long)]
    p: Option<f64>,
    /// p as a fraction of p_u(q, Δ).
    #[arg(long)]
    p_rel: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    delta: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a simple random regular graph.
    GenGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        delta: Option<usize>,
    },
    /// Partition function and edge marginals by enumeration.
    ExactCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        /// Named graph (triangle, path3, k4-minus-edge, multi, …) or file:<path>.
        #[arg(long)]
        graph: Option<String>,
        /// free, wired:0,2 or classes:0,1;2,3.
        #[arg(long)]
        bc: Option<String>,
    },
    /// Run the FK heat-bath dynamics and report edge marginals.
    GlauberRun {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        graph: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        bc: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
        /// Write a `step,edge_index,new_state` event log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run Swendsen–Wang and report the adjacent agreement probability.
    SwRun {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        graph: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Grand-coupling time on one graph size.
    CouplingTime {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Iterate the tree recursion.
    TreeRecursion {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        h: Option<usize>,
    },
    /// Tree uniqueness threshold p_u(q, Δ).
    #[command(name = "p-u")]
    PU {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Cluster tail, sparsity and reveal containment after a long run.
    ShatterProbe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Decay of root influence on the regular tree.
    SpatialMixing {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        /// Comma-separated depths.
        #[arg(long)]
        radii: Option<String>,
    },
    /// Coupon-collector statistic on disjoint tree balls.
    LowerBound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Coupling time over a list of sizes, with the scaling slope.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        /// Comma-separated sizes.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        cap: Option<u64>,
    },
}

fn load_config(name: &str, common: &Common) -> LabResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(name);
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            cfg = Report::read_json_str(&text)?.manifest.config;
        } else {
            cfg.apply_text(&text)?;
        }
    }
    cfg.experiment = name.to_string();
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| LabError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.force |= common.force;
    Ok(cfg)
}

fn apply_model(cfg: &mut ExperimentConfig, m: &Model) {
    if m.p.is_some() || m.p_rel.is_some() {
        cfg.p = m.p;
        cfg.p_rel = m.p_rel;
    }
    if let Some(q) = m.q {
        cfg.q = q;
    }
    if let Some(d) = m.delta {
        cfg.delta = d;
    }
}

fn set_opt<T: ToString>(cfg: &mut ExperimentConfig, key: &str, v: &Option<T>) -> LabResult<()> {
    match v {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn decimals(tol: f64) -> usize {
    (-tol.log10()).ceil().max(0.0) as usize
}

fn build(command: &Command) -> LabResult<ExperimentConfig> {
    use Command::*;
    Ok(match command {
        GenGraph { common, n, delta } => {
            let mut cfg = load_config("gen-graph", common)?;
            set_opt(&mut cfg, "n", n)?;
            set_opt(&mut cfg, "delta", delta)?;
            cfg
        }
        ExactCheck { common, model, graph, bc } => {
            let mut cfg = load_config("exact-check", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "graph", graph)?;
            set_opt(&mut cfg, "bc", bc)?;
            cfg
        }
        GlauberRun { common, model, graph, n, bc, steps, log } => {
            let mut cfg = load_config("glauber-run", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "graph", graph)?;
            set_opt(&mut cfg, "n", n)?;
            set_opt(&mut cfg, "bc", bc)?;
            set_opt(&mut cfg, "steps", steps)?;
            set_opt(&mut cfg, "log", &log.as_ref().map(|p| p.display().to_string()))?;
            cfg
        }
        SwRun { common, model, graph, n, steps } => {
            let mut cfg = load_config("sw-run", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "graph", graph)?;
            set_opt(&mut cfg, "n", n)?;
            set_opt(&mut cfg, "steps", steps)?;
            cfg
        }
        CouplingTime { common, model, n, reps, cap } => {
            let mut cfg = load_config("coupling-time", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "n", n)?;
            set_opt(&mut cfg, "reps", reps)?;
            set_opt(&mut cfg, "cap", cap)?;
            cfg
        }
        TreeRecursion { common, model, h } => {
            let mut cfg = load_config("tree-recursion", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "h_max", h)?;
            cfg
        }
        PU { common, q, delta, tol } => {
            let mut cfg = load_config("p-u", common)?;
            set_opt(&mut cfg, "q", q)?;
            set_opt(&mut cfg, "delta", delta)?;
            set_opt(&mut cfg, "tol", tol)?;
            cfg
        }
        ShatterProbe { common, model, n, reps } => {
            let mut cfg = load_config("shatter-probe", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "n", n)?;
            set_opt(&mut cfg, "reps", reps)?;
            cfg
        }
        SpatialMixing { common, model, radii } => {
            let mut cfg = load_config("spatial-mixing", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "radii", radii)?;
            cfg
        }
        LowerBound { common, model, n, reps, eps, c } => {
            let mut cfg = load_config("lower-bound", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "n", n)?;
            set_opt(&mut cfg, "reps", reps)?;
            set_opt(&mut cfg, "eps", eps)?;
            set_opt(&mut cfg, "c", c)?;
            cfg
        }
        Sweep { common, model, sizes, reps, cap } => {
            let mut cfg = load_config("sweep", common)?;
            apply_model(&mut cfg, model);
            set_opt(&mut cfg, "sizes", sizes)?;
            set_opt(&mut cfg, "reps", reps)?;
            set_opt(&mut cfg, "cap", cap)?;
            cfg
        }
    })
}

fn execute(cfg: &ExperimentConfig, out: &mut dyn Write) -> LabResult<bool> {
    let dir = cfg.out_dir();
    let report = match cfg.experiment.as_str() {
        "gen-graph" => {
            let (report, g) = experiments::gen_graph(cfg)?;
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("graph-n{}-d{}-s{}.txt", g.n(), cfg.delta, cfg.seed));
            std::fs::write(&path, g.to_text()?)?;
            writeln!(out, "graph: {}", path.display())?;
            report
        }
        "p-u" => {
            let report = experiments::p_u_report(cfg)?;
            let tol: f64 = cfg.extra_or("tol", 1e-9)?;
            writeln!(out, "{:.*}", decimals(tol), report.summary["p_u"])?;
            report
        }
        "exact-check" => {
            let report = experiments::exact_check(cfg)?;
            writeln!(out, "Z={}", report.summary["Z"])?;
            for row in &report.rows {
                let e = row.rep.unwrap_or(0);
                match rational(row.value, 10_000, 1e-12) {
                    Some((a, b)) => writeln!(out, "marginal[{e}]={} ({a}/{b})", row.value)?,
                    None => writeln!(out, "marginal[{e}]={}", row.value)?,
                }
            }
            report
        }
        _ => {
            let report = experiments::run(cfg)?;
            write!(out, "{}", report.summary_text())?;
            report
        }
    };
    let (csv, json) = report.write(&dir)?;
    writeln!(out, "wrote {} and {}", csv.display(), json.display())?;
    Ok(report.capped)
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let result = build(&cli.command).and_then(|cfg| execute(&cfg, out));
    match result {
        Ok(false) => 0,
        Ok(true) => {
            let _ = writeln!(err, "error: runtime cap reached by at least one replica");
            3
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_from_tolerance() {
        assert_eq!(decimals(1e-7), 7);
        assert_eq!(decimals(0.5e-3), 4);
        assert_eq!(decimals(1.0), 0);
    }
}
