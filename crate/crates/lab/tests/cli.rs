use std::path::Path;
use std::process::Command;

use rcdyn::graphs::MultiGraph;
use rcdyn_lab::cli::run_cli;
use rcdyn_lab::report::Report;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rclab").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn dir_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn p_u_prints_to_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["p-u", "--q", "2", "--delta", "3", "--tol", "1e-7", "--out", &dir_arg(dir.path())]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("0.6666667"));
}

#[test]
fn exact_check_prints_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) =
        run(&["exact-check", "--graph", "triangle", "--p", "0.5", "--q", "2", "--out", &dir_arg(dir.path())]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "Z=3.5");
    for e in 0..3 {
        assert!(lines[1 + e].starts_with(&format!("marginal[{e}]=0.357")), "{}", lines[1 + e]);
        assert!(lines[1 + e].ends_with("(5/14)"), "{}", lines[1 + e]);
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["no-such-command"]).0, 1);
    assert_eq!(run(&["sweep", "--bogus"]).0, 1);
    assert_eq!(run(&["sweep", "--set", "no_equals_sign"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn parameter_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir_arg(dir.path());
    let (code, _, err) = run(&["sweep", "--p", "0.7", "--sizes", "32", "--reps", "2", "--out", &d]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("p_u"), "{err}");
    assert_eq!(run(&["sweep", "--p", "0.2", "--q", "0.5", "--sizes", "32", "--out", &d]).0, 2);
    assert_eq!(run(&["sweep", "--p", "0.2", "--sizes", "32", "--reps", "x", "--out", &d]).0, 1);
}

#[test]
fn force_overrides_threshold_check() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) =
        run(&["sweep", "--p", "0.7", "--sizes", "32", "--reps", "2", "--force", "--out", &dir_arg(dir.path())]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn runtime_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) =
        run(&["sweep", "--p", "0.3", "--sizes", "64", "--reps", "2", "--cap", "10", "--out", &dir_arg(dir.path())]);
    assert_eq!(code, 3, "{err}");
    let report = Report::read_json(&dir.path().join("sweep.json")).unwrap();
    assert!(report.capped);
}

#[test]
fn config_file_then_set_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# test\np = 0.3\nsizes = 32, 64\nreps = 3\nseed = 5\n").unwrap();
    let (code, _, err) = run(&[
        "sweep",
        "--config",
        &cfg.display().to_string(),
        "--set",
        "reps=2",
        "--seed",
        "9",
        "--out",
        &dir_arg(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = Report::read_json(&dir.path().join("sweep.json")).unwrap();
    let c = &report.manifest.config;
    assert_eq!(c.sizes, vec![32, 64]);
    assert_eq!(c.reps, 2);
    assert_eq!(c.seed, 9);
    assert_eq!(c.p, Some(0.3));
}

#[test]
fn manifest_rerun_is_bit_exact() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let args = ["sweep", "--p-rel", "0.6", "--sizes", "32,64", "--reps", "3", "--seed", "17"];
    let mut a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    a.extend(["--out".into(), dir_arg(first.path())]);
    let refs: Vec<&str> = a.iter().map(String::as_str).collect();
    assert_eq!(run(&refs).0, 0);
    let manifest = first.path().join("sweep.json").display().to_string();
    let (code, _, err) = run(&["sweep", "--config", &manifest, "--out", &dir_arg(second.path())]);
    assert_eq!(code, 0, "{err}");
    let csv1 = std::fs::read(first.path().join("sweep.csv")).unwrap();
    let csv2 = std::fs::read(second.path().join("sweep.csv")).unwrap();
    assert_eq!(csv1, csv2);
    let r1 = Report::read_json(&first.path().join("sweep.json")).unwrap();
    let r2 = Report::read_json(&second.path().join("sweep.json")).unwrap();
    assert_eq!(r1.summary, r2.summary);
}

#[test]
fn binary_uses_output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_rclab"))
        .args(["p-u", "--q", "1", "--delta", "4"])
        .env("RCLAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).starts_with("0.333333333"));
    assert!(dir.path().join("p-u.csv").exists());
    assert!(dir.path().join("p-u.json").exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rclab");
    assert_eq!(Command::new(bin).output().unwrap().status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["coupling-time", "--p", "0.9", "--n", "32"])
        .env("RCLAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn glauber_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let (code, _, err) = run(&[
        "glauber-run",
        "--graph",
        "triangle",
        "--p",
        "0.5",
        "--steps",
        "1000",
        "--log",
        &log.display().to_string(),
        "--out",
        &dir_arg(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&log).unwrap();
    let mut last = 0u64;
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,edge_index,new_state"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<u64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f.len(), 3);
        assert!(f[0] > last);
        assert!(f[1] < 3 && f[2] <= 1);
        last = f[0];
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn gen_graph_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run(&["gen-graph", "--n", "100", "--delta", "3", "--seed", "4", "--out", &dir_arg(dir.path())]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("graph: "));
    let path = dir.path().join("graph-n100-d3-s4.txt");
    let g = MultiGraph::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(g.n(), 100);
    assert_eq!(g.num_edges(), 150);
    assert!(g.is_simple());
    assert!((0..100).all(|v| g.degree(v) == 3));
}
