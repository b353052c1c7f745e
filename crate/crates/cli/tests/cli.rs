use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use proptest::prelude::*;

use hardy_cli::report::exit_code;
use hardy_core::verify::Verdict;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardy-verify"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hardy-cli-tests-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn prop1_passes_with_json_report() {
    let out_path = scratch("prop1.json");
    let o = run(&["prop1", "--p", "0.5", "--q", "2", "--seed", "3", "--output", out_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("prop1 PASS lhs="));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let e = &v[0];
    assert_eq!(e["verdict"], "PASS");
    assert_eq!(e["version"], hardy_core::VERSION);
    // The resolved config is embedded in full.
    assert_eq!(e["config"]["p"], 0.5);
    assert_eq!(e["config"]["weight"], "unit");
    assert_eq!(e["report"]["bound"], 4.0 / 3.0);
}

#[test]
fn log2_square_wave_hits_the_bound() {
    let o = run(&["log2", "--shape", "squarewave", "--x0", "0", "--x1", "1", "--allow-zero-left"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    let lhs: f64 = line.split("lhs=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((lhs - std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn zero_left_endpoint_needs_the_flag() {
    let o = run(&["log2", "--shape", "squarewave", "--x0", "0", "--x1", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("allow-zero-left"), "{}", stderr(&o));
}

#[test]
fn prop4_outside_domain_is_a_usage_error() {
    let o = run(&["prop4", "--p", "0.9", "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("q−1"), "{err}");
    assert!(err.contains("0.5"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let cfg = scratch("bad.json");
    fs::write(&cfg, r#"{"p": 0.5, "colour": "blue"}"#).unwrap();
    let o = run(&["prop1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn flags_override_config_file() {
    let cfg = scratch("cfg.json");
    fs::write(&cfg, r#"{"p": 0.5, "q": "inf", "seed": 7}"#).unwrap();
    let out_path = scratch("override.json");
    let o = run(&["prop1", "--config", cfg.to_str().unwrap(), "--p", "0.8", "--output", out_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v[0]["config"]["p"], 0.8);
    assert_eq!(v[0]["config"]["seed"], 7);
    assert_eq!(v[0]["config"]["q"], "inf");
}

#[test]
fn sweep_is_deterministic_and_skips_bad_rows() {
    let grid = scratch("grid.csv");
    fs::write(&grid, "p,q,seed\n0.8,inf,2\n0.5,2,1\n0.9,1.5,3\n0.3,1,4\n0.5,4,0\n").unwrap();
    let a = scratch("sweep-a.csv");
    let b = scratch("sweep-b.csv");
    for (path, jobs) in [(&a, "1"), (&b, "4")] {
        let o = run(&[
            "sweep",
            "--grid",
            grid.to_str().unwrap(),
            "--check",
            "prop4",
            "--format",
            "csv",
            "--jobs",
            jobs,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("PASS=4 FAIL=0 INCONCLUSIVE=0 SKIP=1"), "{}", stdout(&o));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    // Sorted by p, then q with inf last.
    assert!(rows[0].starts_with("prop4,PASS,0.3,1,"));
    assert!(rows[1].starts_with("prop4,PASS,0.5,2,"));
    assert!(rows[2].starts_with("prop4,PASS,0.5,4,"));
    assert!(rows[3].starts_with("prop4,PASS,0.8,inf,"));
    assert!(rows[4].starts_with("prop4,SKIP,0.9,1.5,"));
    assert!(rows[4].contains("q−1"));
}

#[test]
fn grid_with_unknown_column_is_rejected() {
    let grid = scratch("badgrid.csv");
    fs::write(&grid, "p,colour\n0.5,blue\n").unwrap();
    let o = run(&["sweep", "--grid", grid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn fail_verdict_exits_two() {
    // A (0.5, 2)-atom held to the tighter q = inf budget fails validation.
    let f = scratch("atom.json");
    let o = run(&["atom", "--p", "0.5", "--q", "2", "--seed", "1", "--output", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&f).unwrap()).unwrap();
    let func = scratch("fn.json");
    fs::write(&func, serde_json::to_string(&v[0]["report"]["atom"]["fn"]).unwrap()).unwrap();
    let o = run(&["validate", "--p", "0.5", "--q", "2", "--input", func.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["validate", "--p", "0.5", "--q", "inf", "--input", func.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn classical_writes_plot_blocks() {
    let plot = scratch("classical.dat");
    let o = run(&["classical", "--plot", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&plot).unwrap();
    assert!(text.contains("# hardy: A ratio bound"));
    assert!(text.contains("# dual: A ratio bound"));
    assert_eq!(text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).count(), 8);
}

#[test]
fn extremize_grid_outputs_tightness_table() {
    let grid = scratch("egrid.csv");
    fs::write(&grid, "p,q\n1,inf\n0.5,2\n").unwrap();
    let out = scratch("tight.csv");
    let o = run(&[
        "extremize",
        "--grid",
        grid.to_str().unwrap(),
        "--restarts",
        "2",
        "--max-iters",
        "60",
        "--format",
        "csv",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(hardy_core::extremal::SWEEP_CSV_HEADER));
    assert!(lines.next().unwrap().starts_with("0.5,2,"));
    let last: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&last[..2], &["1", "inf"]);
    let tightness: f64 = last[4].parse().unwrap();
    assert!(tightness > 0.69 && tightness <= 1.0, "{tightness}");
}

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Pass), Just(Verdict::Fail), Just(Verdict::Inconclusive)]
}

proptest! {
    #[test]
    fn exit_code_contract(vs in prop::collection::vec(verdict(), 0..20)) {
        let code = exit_code(&vs);
        let any_fail = vs.contains(&Verdict::Fail);
        let any_inconclusive = vs.contains(&Verdict::Inconclusive);
        let expected = if any_fail { 2 } else if any_inconclusive { 3 } else { 0 };
        prop_assert_eq!(code, expected);
    }
}
