use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mhs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhs"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn mhs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    let tok = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} in {line}"));
    tok.parse().unwrap()
}

#[test]
fn solve_zero_data_completes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(
        dir.path(),
        &[
            "solve", "--init", "0", "--n", "32", "--t-end", "0.01", "--out", "h.csv",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert!(csv.starts_with("t,mean_u,energy,sup_u,sup_abs_ux,radius_est,scale_norm,dt_used\n"));
    assert!(stdout(&o).contains("status=completed"));
}

#[test]
fn breaking_data_reports_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(
        dir.path(),
        &["solve", "--init", "sin(2*pi*x)", "--t-end", "0.5"],
    );
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("status=breakdown"), "{out}");
    let line = out.lines().find(|l| l.starts_with("summary")).unwrap();
    assert!((0.25..0.29).contains(&field(line, "t_final")), "{line}");
}

#[test]
fn lagrangian_solve_writes_flow_map_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(
        dir.path(),
        &[
            "solve",
            "--method",
            "lagrangian",
            "--n",
            "64",
            "--t-end",
            "0.01",
            "--out",
            "h.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",min_gamma_x"));
}

#[test]
fn compare_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(
        dir.path(),
        &[
            "compare", "--p", "2", "--n", "128", "--t-end", "0.02", "--out", "cmp.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o)
        .lines()
        .find(|l| l.contains("max_deviation"))
        .unwrap()
        .to_string();
    assert!(field(&line, "max_deviation") <= 1e-6, "{line}");
    let csv = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    assert!(csv.starts_with("t,euler_lagrange,euler_taylor,lagrange_taylor\n"));
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["solve", "--n", "48"][..],
        &["solve", "--dt", "0.2", "--t-end", "0.1"],
        &["solve", "--init", "sin(3*x)"],
        &["verify", "--suite", "nope"],
    ] {
        let o = mhs(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&o.stderr).starts_with("error:"),
            "{args:?}"
        );
    }
}

#[test]
fn constant_data_never_breaks() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(
        dir.path(),
        &["blowup", "--init", "0.3", "--n", "32", "--t-end", "0.5"],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("no breaking detected"));
}

#[test]
fn analyticity_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = mhs(
        dir.path(),
        &["analyticity", "--t-end", "0.05", "--out", "r.csv"],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("t,radius_est,time_radius\n"));
    let collapse = mhs(
        dir.path(),
        &["analyticity", "--init", "sin(2*pi*x)", "--t-end", "0.263"],
    );
    assert_eq!(collapse.status.code(), Some(5));
}

#[test]
fn norms_of_a_snapshot_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(
        dir.path(),
        &[
            "solve",
            "--n",
            "64",
            "--t-end",
            "0.01",
            "--record-every",
            "20",
            "--snapshots",
            "s.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let snaps = fs::read_to_string(dir.path().join("s.jsonl"))
        .unwrap()
        .lines()
        .count();
    let o = mhs(
        dir.path(),
        &["norms", "--snapshots", "s.jsonl", "--out", "n.csv"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("n.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,mean,sobolev,scale_norm,argmax_k,truncation_ok,radius_est,sup_abs_ux")
    );
    assert_eq!(lines.count(), snaps);
    assert_eq!(mhs(dir.path(), &["norms"]).status.code(), Some(2));
}

#[test]
fn verify_spectral_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhs(dir.path(), &["verify", "--suite", "spectral"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.lines().filter(|l| l.starts_with("[PASS]")).count() >= 3,
        "{out}"
    );
    assert!(out.contains("properties passed"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let csv = format!("{tag}.csv");
        let snaps = format!("{tag}.jsonl");
        let o = mhs(
            dir.path(),
            &[
                "solve",
                "--method",
                "taylor",
                "--p",
                "2",
                "--n",
                "64",
                "--t-end",
                "0.03",
                "--out",
                &csv,
                "--snapshots",
                &snaps,
            ],
        );
        assert_eq!(o.status.code(), Some(0));
        (
            fs::read(dir.path().join(csv)).unwrap(),
            fs::read(dir.path().join(snaps)).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# scenario\np = 3\nn-modes = 64\nt_end = 0.02\ninit = 0.2*cos(2*pi*x)\n",
    )
    .unwrap();
    let o = mhs(
        dir.path(),
        &["solve", "--config", "run.cfg", "--t-end", "0.01"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("summary"))
        .unwrap()
        .to_string();
    assert_eq!(field(&line, "p"), 3.0);
    assert_eq!(field(&line, "n"), 64.0);
    assert!((field(&line, "t_final") - 0.01).abs() < 1e-12);

    fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(
        mhs(dir.path(), &["solve", "--config", "bad.cfg"])
            .status
            .code(),
        Some(2)
    );
}
