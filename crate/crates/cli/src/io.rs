//! CSV and `key=value` metadata files. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;

use revjump::reversal::{JumpRate, ReversedModel, ScaleLimit};
use revjump::simulate::Path;
use revjump::stationary::StationaryDensity;
use revjump::Model;

use crate::CliError;

/// `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write(path: &FsPath, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn pi_csv(pi: &StationaryDensity) -> String {
    let mut s = String::from("p,pi\n");
    for (p, v) in pi.grid.iter().zip(&pi.values) {
        let _ = writeln!(s, "{},{}", num(*p), num(*v));
    }
    s
}

/// Columns of a numeric CSV with the given header.
pub fn read_csv(path: &FsPath, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let bad = |line: usize, what: String| CliError::Config(format!("{}:{line}: {what}", path.display()));
    let mut lines = text.lines();
    let head = lines.next().unwrap_or_default();
    if head.split(',').ne(header.iter().copied()) {
        return Err(bad(1, format!("expected header {}", header.join(","))));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(bad(k + 2, format!("expected {} fields", header.len())));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.trim().parse::<f64>().map_err(|e| bad(k + 2, format!("{f}: {e}")))?);
        }
    }
    Ok(cols)
}

pub fn pi_meta(model: &Model, pi: &StationaryDensity) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model={}", model.label);
    let _ = writeln!(s, "method={}", pi.method.name());
    let _ = writeln!(s, "nodes={}", pi.len());
    let _ = writeln!(s, "kappa0={}", num(pi.kappa0));
    let _ = writeln!(s, "kappa1={}", num(pi.kappa1));
    let _ = writeln!(s, "total_mass={}", num(pi.total_mass()));
    let _ = writeln!(s, "mean={}", num(pi.mean()));
    let _ = writeln!(s, "normalization_residual={}", num(pi.normalization_residual));
    let _ = writeln!(s, "residual={}", num(pi.diagnostics.residual));
    let _ = writeln!(s, "flux_residual={}", num(pi.diagnostics.flux_residual));
    let _ = writeln!(s, "iterations={}", pi.diagnostics.iterations);
    s
}

pub fn asymptotics_meta(pi: &StationaryDensity) -> String {
    let mut s = String::new();
    for (i, a) in pi.boundary_asymptotics.iter().enumerate() {
        let _ = writeln!(s, "boundary{i}.case={}", a.case.name());
        let _ = writeln!(s, "boundary{i}.beta={}", num(a.beta));
        let _ = writeln!(s, "boundary{i}.fitted_beta={}", num(a.fitted_beta));
        let _ = writeln!(s, "boundary{i}.coefficient={}", num(a.coefficient));
        let _ = writeln!(s, "boundary{i}.predicted={}", num(a.predicted));
        let _ = writeln!(s, "boundary{i}.fit_residual={}", num(a.fit_residual));
        let _ = writeln!(s, "boundary{i}.reliable={}", a.reliable);
    }
    s
}

pub fn reversed_csv(rev: &ReversedModel) -> String {
    let ss = &rev.scale_speed;
    let mut s = String::from("p,mu_tilde,scale,speed\n");
    for k in 0..rev.pi.len() {
        let mu = rev.drift.values[k] + rev.drift_perturbation;
        let _ = writeln!(s, "{},{},{},{}", num(rev.pi.grid[k]), num(mu), num(ss.scale[k]), num(ss.speed[k]));
    }
    s
}

pub fn reversed_meta(rev: &ReversedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model={}", rev.model.label);
    for i in 0..2 {
        let r = &rev.rates[i];
        let _ = writeln!(s, "r{i}={}", r.rate.tag());
        if let JumpRate::Finite(v) = r.rate {
            let _ = writeln!(s, "r{i}.value={}", num(v));
            let _ = writeln!(s, "r{i}.error={}", num(r.error));
        }
        let _ = writeln!(s, "r{i}.reliable={}", r.reliable);
        let _ = writeln!(s, "kappa{i}={}", num(rev.kappa[i]));
        let _ = writeln!(s, "mu_tilde{i}={}", num(rev.drift.limits[i]));
        let _ = writeln!(s, "mu_tilde{i}.error={}", num(rev.drift.limit_error[i]));
        match rev.scale_speed.limits[i] {
            ScaleLimit::Finite(v) => {
                let _ = writeln!(s, "scale{i}={}", num(v));
            }
            ScaleLimit::Infinite => {
                let _ = writeln!(s, "scale{i}=infinite");
            }
        }
        let _ = writeln!(s, "scale{i}.exponent={}", num(rev.scale_speed.exponent[i]));
        let _ = writeln!(s, "forward_accessible{i}={}", rev.forward_accessible(i));
    }
    let _ = writeln!(s, "drift_crosscheck={}", num(rev.drift.crosscheck));
    let _ = writeln!(s, "scale_identity_residual={}", num(rev.scale_speed.identity_residual));
    let _ = writeln!(s, "drift_perturbation={}", num(rev.drift_perturbation));
    s
}

pub fn path_csv(path: &Path) -> String {
    let flags = path.jump_flags();
    let mut s = String::from("t,x,jump\n");
    for (k, (x, f)) in path.states.iter().zip(flags).enumerate() {
        let _ = writeln!(s, "{},{},{}", num(path.time(k)), num(*x), u8::from(f));
    }
    s
}

pub fn events_csv(path: &Path) -> String {
    let mut s = String::from("t,from,to\n");
    for e in &path.events {
        let _ = writeln!(s, "{},{},{}", num(path.event_time(e)), num(e.from), num(e.to));
    }
    s
}
