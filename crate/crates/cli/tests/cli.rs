use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cmt-scatter");

fn run(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("CMT_THREADS");
    if let Some(t) = threads_env {
        cmd.env("CMT_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const CHAIN: &str = "[model]\nkind = chain1d\nN = 7\nt = 0.4\n\n[sweep]\nquantity = E\nstart = 0\nstop = 4\npoints = 401\n";

const RECT: &str =
    "[model]\nkind = continuum2d\nLx = 1\nLy = 1.8\nd = 1\nn_max = 8\nm_max = 10\np_max = 4\n\n\
[sweep]\nstart = 2\nstop = 3 pi\npoints = 61\n\n[incoming]\nchannels = 0, 1\n";

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"], None).status.code(), Some(0));
    assert_eq!(run(&["--version"], None).status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.cfg");
    let out = run(&["spectrum", "--config", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));

    let bad = write(
        dir.path(),
        "bad.cfg",
        "[model]\nkind = chain1d\nN = 0\nt = x\n[sweep]\npoints = 1\n",
    );
    let out = run(&["spectrum", "--config", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("line 3") && stderr.contains("line 4"),
        "{stderr}"
    );

    let unknown_flag = run(&["spectrum", "--bogus"], None);
    assert_eq!(unknown_flag.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "chain.cfg", CHAIN);
    // above the lead band nothing propagates
    let out = run(
        &["field", "--config", cfg.to_str().unwrap(), "--energy", "5"],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn selfcheck_exit_codes() {
    let ok = run(&["selfcheck"], None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS unitarity/continuum"));
    for fault in ["coupling-sign", "evanescent-branch"] {
        let out = run(&["selfcheck", "--inject", fault], None);
        assert_eq!(out.status.code(), Some(3), "{fault}");
    }
}

#[test]
fn single_threaded_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rect.cfg", RECT);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let status = run(
            &[
                "spectrum",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                "1",
            ],
            None,
        );
        assert_eq!(status.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn numeric_rows(text: &str) -> Vec<Vec<Option<f64>>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().ok()).collect())
        .collect()
}

#[test]
fn parallel_sweep_matches_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rect.cfg", RECT);
    let seq = run(
        &[
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            "1",
        ],
        Some("4"),
    );
    // the environment alone selects the pool size
    let par = run(&["spectrum", "--config", cfg.to_str().unwrap()], Some("3"));
    assert_eq!(seq.status.code(), Some(0));
    assert_eq!(par.status.code(), Some(0));
    let (a, b) = (
        String::from_utf8(seq.stdout).unwrap(),
        String::from_utf8(par.stdout).unwrap(),
    );
    assert_eq!(a.lines().next(), b.lines().next());
    for (ra, rb) in numeric_rows(&a).iter().zip(numeric_rows(&b).iter()) {
        assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(rb) {
            match (x, y) {
                (Some(x), Some(y)) => {
                    assert!((x - y).abs() <= 1e-13 * x.abs().max(y.abs()).max(1e-300))
                }
                (None, None) => {}
                _ => panic!("cell presence differs"),
            }
        }
    }
}

#[test]
fn threshold_endpoints_are_nudged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "chain.cfg", CHAIN);
    let out = run(&["spectrum", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let nudged = header.iter().position(|h| *h == "nudged").unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows[0][nudged], "1");
    assert_eq!(rows[200][nudged], "0");
    assert_eq!(rows[0][1], "0.000000001");
}

#[test]
fn zero_amplitude_gives_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{RECT}amplitude = 0\n\n[field]\nomega = 3pi/2\nnx = 11\nny = 7\n");
    let cfg = write(dir.path(), "rect.cfg", &text);
    let out = run(&["field", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,re,im,abs"));
    // 5 interior columns of 7 points plus 6 lead columns of 3
    assert_eq!(csv.lines().count(), 1 + 5 * 7 + 6 * 3);
    for row in csv.lines().skip(1) {
        let abs: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(abs, 0.0);
    }
}

#[test]
fn field_flag_overrides_config_working_point() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{RECT}\n[field]\nomega = 3pi/2\nnx = 5\nny = 5\n");
    let cfg = write(dir.path(), "rect.cfg", &text);
    let a = run(&["field", "--config", cfg.to_str().unwrap()], None);
    let b = run(
        &[
            "field",
            "--config",
            cfg.to_str().unwrap(),
            "--omega",
            "3pi/2",
        ],
        None,
    );
    let c = run(
        &["field", "--config", cfg.to_str().unwrap(), "--omega", "5"],
        None,
    );
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn resonances_need_probes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "chain.cfg", CHAIN);
    assert_eq!(
        run(&["resonances", "--config", cfg.to_str().unwrap()], None)
            .status
            .code(),
        Some(1)
    );
    let with = write(
        dir.path(),
        "probes.cfg",
        &format!("{CHAIN}\n[resonances]\nenergies = 1, 2\n"),
    );
    let out = run(&["resonances", "--config", with.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 7);
    for row in csv.lines().skip(1) {
        let width: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(width >= 0.0);
    }
}

#[test]
fn outputs_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "chain.cfg",
        &format!("{CHAIN}\n[output]\nspectrum = results/t.csv\n"),
    );
    let out = run(&["spectrum", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = fs::read_to_string(dir.path().join("results/t.csv")).unwrap();
    assert_eq!(written.lines().count(), 402);
}
