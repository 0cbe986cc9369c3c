use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use revjump_cli::io::read_csv;

fn revjump(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_revjump"));
    cmd.arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let f = dir.join("run.toml");
        fs::write(&f, text).unwrap();
        cmd.arg("--config").arg(f);
    }
    cmd.args(args).env_remove("REVJUMP_THREADS").output().unwrap()
}

fn meta(path: &Path) -> Vec<(String, String)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn lookup<'a>(m: &'a [(String, String)], key: &str) -> &'a str {
    &m.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("{key} missing")).1
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

#[test]
fn solve_writes_a_normalized_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = revjump(dir.path(), Some("[model]\nmu0 = 1.0\nmu1 = 1.5\n"), &["solve"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut cols = read_csv(&dir.path().join("out/pi.csv"), &["p", "pi"]).unwrap();
    let (first, last) = (cols[1][0], *cols[1].last().unwrap());
    cols[0].insert(0, 0.0);
    cols[1].insert(0, first);
    cols[0].push(1.0);
    cols[1].push(last);
    assert!((trapezoid(&cols[0], &cols[1]) - 1.0).abs() < 1e-5);
    let m = meta(&dir.path().join("out/pi.meta"));
    assert!((lookup(&m, "total_mass").parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    assert!(dir.path().join("out/asymptotics.meta").exists());
}

#[test]
fn no_jumps_gives_the_beta_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nfamily = \"neutral\"\nmu0 = 1.0\nmu1 = 1.0\nlambda = 0.0\n";
    for (method, tol) in [("shooting", 1e-8), ("nullspace", 1e-5), ("closed_form", 1e-8)] {
        let text = format!("{cfg}[solver]\nmethod = \"{method}\"\n");
        let out = revjump(dir.path(), Some(&text), &["solve"]);
        assert_eq!(out.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let cols = read_csv(&dir.path().join("out/pi.csv"), &["p", "pi"]).unwrap();
        for (p, v) in cols[0].iter().zip(&cols[1]) {
            assert!((v - 6.0 * p * (1.0 - p)).abs() < tol, "{method} at {p}: {v}");
        }
    }
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = revjump(dir.path(), Some("[simulate]\nstep = 0.01\n"), &["simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
    let out = revjump(dir.path(), Some("[model]\nmu0 = -1.0\n"), &["solve"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reverse_tags_each_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [(0.2, "finite"), (0.3, "finite"), (0.6, "infinite"), (1.0, "infinite")];
    for (mu, tag) in cases {
        let text = format!("[model]\nfamily = \"neutral\"\nmu0 = {mu}\nmu1 = {mu}\nlambda = 1.0\n");
        let out = revjump(dir.path(), Some(&text), &["reverse"]);
        assert_eq!(out.status.code(), Some(0));
        let m = meta(&dir.path().join("out/reversed.meta"));
        assert_eq!(lookup(&m, "r0"), tag, "mu = {mu}");
        assert_eq!(lookup(&m, "r1"), tag, "mu = {mu}");
    }
    let text = "[model]\nfamily = \"neutral\"\nmu0 = 0.3\nmu1 = 0.3\nlambda = 0.0\n";
    let out = revjump(dir.path(), Some(text), &["reverse"]);
    assert_eq!(out.status.code(), Some(0));
    let m = meta(&dir.path().join("out/reversed.meta"));
    assert_eq!(lookup(&m, "r0"), "zero");
    assert_eq!(lookup(&m, "r1"), "zero");
    let cols = read_csv(&dir.path().join("out/reversed.csv"), &["p", "mu_tilde", "scale", "speed"]).unwrap();
    assert_eq!(cols.len(), 4);
}

#[test]
fn replicates_are_distinct_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[simulate]\nt_end = 2.0\n";
    let read = |dir: &Path| -> Vec<String> {
        (0..4).map(|r| fs::read_to_string(dir.join(format!("out/forward_{r:04}.csv"))).unwrap()).collect()
    };
    let out = revjump(dir.path(), Some(cfg), &["--replicates", "4", "--seed", "9", "simulate"]);
    assert_eq!(out.status.code(), Some(0));
    let first = read(dir.path());
    assert!(!dir.path().join("out/forward_0004.csv").exists());
    for a in 0..4 {
        for b in a + 1..4 {
            assert_ne!(first[a], first[b]);
        }
    }
    revjump(dir.path(), Some(cfg), &["--replicates", "4", "--seed", "9", "simulate"]);
    assert_eq!(read(dir.path()), first);
    let svg = fs::read_to_string(dir.path().join("out/forward.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn backward_simulation_writes_events() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[simulate]\nt_end = 5.0\nx0 = 0.5\n";
    let out = revjump(dir.path(), Some(cfg), &["simulate", "--direction", "backward", "--time-vertical"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = read_csv(&dir.path().join("out/backward_0000.csv"), &["t", "x", "jump"]).unwrap();
    assert_eq!(path[0][0], 0.0);
    assert_eq!(path[1][0], 0.5);
    assert!(path[1].iter().all(|x| (0.0..=1.0).contains(x)));
    let events = read_csv(&dir.path().join("out/backward_0000_events.csv"), &["t", "from", "to"]).unwrap();
    assert_eq!(events[0].len() as f64, path[2].iter().sum::<f64>());
}

const SMALL_VERIFY: &str = "[verify]\nn_paths = 3000\n";

#[test]
fn small_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = revjump(dir.path(), Some(SMALL_VERIFY), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(report.starts_with("check,statistic,threshold,p_value,pass,status,samples,seed,runtime_s"));
    let m = meta(&dir.path().join("out/report.meta"));
    assert_eq!(lookup(&m, "outcome"), "pass");
}

#[test]
fn perturbed_drift_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = revjump(dir.path(), Some(SMALL_VERIFY), &["--perturb-drift", "0.1", "verify"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn disabled_clock_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = revjump(dir.path(), Some(SMALL_VERIFY), &["--disable-clock", "1", "verify"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verification_without_jumps_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nfamily = \"neutral\"\nmu0 = 0.6\nmu1 = 0.8\nlambda = 0.0\n[verify]\nn_paths = 3000\n";
    let out = revjump(dir.path(), Some(cfg), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn thread_count_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_revjump"))
            .arg("--out")
            .arg(dir.path().join("out"))
            .arg("solve")
            .env("REVJUMP_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    assert_eq!(run("0").status.code(), Some(1));
    assert_eq!(run("many").status.code(), Some(1));
}
