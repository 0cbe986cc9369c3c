//! Deterministic and Monte Carlo checks that `pi` is stationary and that the reversed model is
//! the stationary time reversal of the forward model.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{coef, neutral, wright_fisher, CRITICAL_TOL};
use crate::quad::GaussLegendre;
use crate::reversal::{stationary_sampler, JumpRate, ReversedModel};
use crate::simulate::{
    draw_start, run_replicates, simulate_backward, simulate_forward, simulate_forward_eps, BackwardOptions, Path,
    Refinement, SimParams, HIT_TOL,
};
use crate::stationary::{AsymptoticCase, StationaryDensity};
use crate::stats::{batch_means_iat, ks_one_sample, ks_two_sample, mean, variance};
use crate::Model;

/// Residual bound for [`check_stationarity`].
pub const STATIONARITY_TOL: f64 = 1e-6;
/// Agreement bound, in pooled standard errors, for Monte Carlo comparisons of means.
pub const SE_BOUND: f64 = 3.0;
/// Fewest jump events per side for the jump-target comparison.
pub const MIN_JUMPS: usize = 1000;
/// Fewest samples for a Monte Carlo check to be conclusive.
pub const MIN_SAMPLES: usize = 100;
/// Subsampling interval in units of the integrated autocorrelation time.
pub const SUBSAMPLE_IAT: f64 = 5.0;
/// Tolerance on the endpoint limits of the reversed drift.
pub const DRIFT_LIMIT_TOL: f64 = 1e-3;
/// Tolerance on `sup |mu_tilde - mu|` without jumps.
pub const REVERSIBLE_TOL: f64 = 1e-6;
/// Relative tolerance between finite jump rates and the asymptotic-coefficient formula.
pub const RATE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    /// Bound on the statistic, or the significance level when `p_value` is set.
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub status: Status,
    pub samples: u64,
    pub seed: Option<u64>,
    /// Wall-clock seconds.
    pub runtime: f64,
    pub note: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, statistic: f64, threshold: f64, status: Status) -> Self {
        CheckResult {
            name: name.into(),
            statistic,
            threshold,
            p_value: None,
            status,
            samples: 0,
            seed: None,
            runtime: 0.0,
            note: String::new(),
        }
    }

    /// Pass iff `statistic < threshold`.
    fn below(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        let ok = statistic < threshold;
        Self::new(name, statistic, threshold, if ok { Status::Pass } else { Status::Fail })
    }

    /// Pass iff `p >= alpha`.
    fn test(name: impl Into<String>, statistic: f64, p: f64, alpha: f64) -> Self {
        let mut c = Self::new(name, statistic, alpha, if p >= alpha { Status::Pass } else { Status::Fail });
        c.p_value = Some(p);
        c
    }

    fn inconclusive(name: impl Into<String>, note: impl Into<String>) -> Self {
        let mut c = Self::new(name, f64::NAN, f64::NAN, Status::Inconclusive);
        c.note = note.into();
        c
    }

    fn samples(mut self, n: usize) -> Self {
        self.samples = n as u64;
        self
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime = start.elapsed().as_secs_f64();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, cs: impl IntoIterator<Item = CheckResult>) {
        self.checks.extend(cs);
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Fail if any check failed, else inconclusive if any was, else pass.
    pub fn outcome(&self) -> Status {
        if self.checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else if self.checks.iter().any(|c| c.status == Status::Inconclusive) {
            Status::Inconclusive
        } else {
            Status::Pass
        }
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    /// `check,statistic,threshold,p_value,pass,status,samples,seed,runtime_s`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,statistic,threshold,p_value,pass,status,samples,seed,runtime_s\n");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{},{},{},{},{},{:.3}",
                c.name,
                c.statistic,
                c.threshold,
                c.p_value.map_or(String::new(), |p| format!("{p:.17e}")),
                c.passed(),
                c.status.name(),
                c.samples,
                c.seed.map_or(String::new(), |s| s.to_string()),
                c.runtime
            );
        }
        s
    }

    /// `key=value` lines, one block per check, then the overall outcome.
    pub fn to_meta(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let n = &c.name;
            let _ = writeln!(s, "{n}.status={}", c.status.name());
            let _ = writeln!(s, "{n}.statistic={:e}", c.statistic);
            let _ = writeln!(s, "{n}.threshold={:e}", c.threshold);
            if let Some(p) = c.p_value {
                let _ = writeln!(s, "{n}.p_value={p:e}");
            }
            let _ = writeln!(s, "{n}.samples={}", c.samples);
            if let Some(seed) = c.seed {
                let _ = writeln!(s, "{n}.seed={seed}");
            }
            let _ = writeln!(s, "{n}.runtime_s={:.3}", c.runtime);
            if !c.note.is_empty() {
                let _ = writeln!(s, "{n}.note={}", c.note);
            }
        }
        let _ = writeln!(s, "checks={}", self.checks.len());
        let _ = writeln!(s, "failed={}", self.failures().len());
        let _ = writeln!(s, "outcome={}", self.outcome().name());
        s
    }
}

/// `|int G p^k pi dp|` for `k = 0..=degree`.
pub fn stationarity_residuals(model: &Model, pi: &StationaryDensity, degree: usize) -> Vec<f64> {
    (0..=degree as i32)
        .map(|k| {
            let kf = k as f64;
            let phi0 = if k == 0 { 1.0 } else { 0.0 };
            let g = |p: f64| {
                let d1 = if k >= 1 { kf * p.powi(k - 1) } else { 0.0 };
                let d2 = if k >= 2 { kf * (kf - 1.0) * p.powi(k - 2) } else { 0.0 };
                model.generator(p, p.powi(k), d1, d2, phi0, 1.0)
            };
            pi.integrate(g).abs()
        })
        .collect()
}

/// Largest residual of the stationarity identity over monomials up to `degree`.
pub fn check_stationarity(model: &Model, pi: &StationaryDensity, degree: usize) -> CheckResult {
    let start = Instant::now();
    let r = stationarity_residuals(model, pi, degree);
    let (k, worst) = r.iter().enumerate().fold((0, 0.0), |a, (k, &x)| if x > a.1 { (k, x) } else { a });
    CheckResult::below("stationarity", worst, STATIONARITY_TOL)
        .samples(r.len())
        .note(format!("degree {degree}, worst monomial p^{k}"))
        .timed(start)
}

/// `1 / min(mu(0), -mu(1), lambda + 1)`, the relaxation time scale used for burn-in.
pub fn relaxation_scale(model: &Model) -> f64 {
    let rate = model.taylor[0].m0.min(model.taylor[1].m0).min(model.lambda + 1.0);
    if rate > 0.0 {
        1.0 / rate
    } else {
        1.0 / (model.lambda + 1.0)
    }
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stationary-started forward and backward paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub n_paths: u64,
    pub horizon: f64,
    pub dt: f64,
    pub record_every: u64,
    pub refine: Option<Refinement>,
    pub backward: BackwardOptions,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub forward: Vec<Path>,
    pub backward: Vec<Path>,
    pub params: EnsembleParams,
    /// Seeds of the forward and backward streams.
    pub seeds: [u64; 2],
}

impl Ensemble {
    pub fn record_dt(&self) -> f64 {
        self.params.dt * self.params.record_every as f64
    }
}

/// Simulates `n_paths` forward and `n_paths` backward paths, each started from an independent
/// draw of `pi`.
pub fn stationary_ensemble(rev: &ReversedModel, p: &EnsembleParams) -> Result<Ensemble> {
    let sim = SimParams { refine: p.refine, ..SimParams::new(p.horizon, p.dt).recording_every(p.record_every) };
    sim.steps()?;
    let start = stationary_sampler(rev.pi.clone())?;
    let seeds = [mix(p.seed, 1), mix(p.seed, 2)];
    let forward = run_replicates(p.n_paths, |r| {
        let x0 = draw_start(&start, seeds[0], r);
        simulate_forward(&rev.model, x0, &sim, seeds[0], r)
    })?;
    let backward = run_replicates(p.n_paths, |r| {
        let x0 = draw_start(&start, seeds[1], r);
        simulate_backward(rev, x0, &sim, &p.backward, seeds[1], r)
    })?;
    Ok(Ensemble { forward, backward, params: *p, seeds })
}

fn lag_index(ens: &Ensemble, lag: f64) -> Result<usize> {
    let k = (lag / ens.record_dt()).round();
    if k < 1.0 || (k * ens.record_dt() - lag).abs() > 1e-9 * lag {
        return Err(Error::InvalidParameter(format!("lag {lag} is not a multiple of the recording step {}", ens.record_dt())));
    }
    let k = k as usize;
    if ens.forward.first().is_some_and(|p| p.states.len() <= k) {
        return Err(Error::InvalidParameter(format!("lag {lag} exceeds the horizon {}", ens.params.horizon)));
    }
    Ok(k)
}

/// Compares `E[phi(p(0)) psi(p(lag))]` along forward paths with `E[psi(q(0)) phi(q(lag))]` along
/// backward paths, for `phi = p^a`, `psi = p^b`.
pub fn check_adjoint_correlation(ens: &Ensemble, a: i32, b: i32, lag: f64) -> Result<CheckResult> {
    let start = Instant::now();
    let name = format!("adjoint_p{a}_p{b}");
    let k = lag_index(ens, lag)?;
    let f: Vec<f64> = ens.forward.iter().map(|p| p.states[0].powi(a) * p.states[k].powi(b)).collect();
    let g: Vec<f64> = ens.backward.iter().map(|p| p.states[0].powi(b) * p.states[k].powi(a)).collect();
    let n = f.len().min(g.len());
    if n < MIN_SAMPLES {
        return Ok(CheckResult::inconclusive(name, format!("{n} paths")));
    }
    let se = (variance(&f) / f.len() as f64 + variance(&g) / g.len() as f64).sqrt();
    let diff = (mean(&f) - mean(&g)).abs();
    let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(CheckResult::below(name, z, SE_BOUND)
        .samples(f.len() + g.len())
        .seed(ens.params.seed)
        .note(format!("forward {:.6e} backward {:.6e} se {se:.3e} lag {lag}", mean(&f), mean(&g)))
        .timed(start))
}

/// States after `burn` time units, spaced by `SUBSAMPLE_IAT` autocorrelation times when the paths
/// are long enough to estimate one, else the final state of each path.
pub fn subsample(paths: &[Path], burn: f64) -> (Vec<f64>, usize) {
    let Some(first) = paths.first() else { return (Vec::new(), 0) };
    let kb = (burn / first.record_dt() - 1e-9).ceil().max(0.0) as usize;
    let m = first.states.len().saturating_sub(kb);
    if m == 0 {
        return (Vec::new(), 0);
    }
    let spacing = if m >= 200 {
        let taus: Vec<f64> = paths.iter().take(8).filter_map(|p| batch_means_iat(&p.states[kb..], 20)).collect();
        if taus.is_empty() {
            m
        } else {
            ((SUBSAMPLE_IAT * mean(&taus)).ceil() as usize).clamp(1, m)
        }
    } else {
        m
    };
    let mut out = Vec::new();
    for p in paths {
        let mut k = p.states.len() - 1;
        loop {
            out.push(p.states[k]);
            if k < kb + spacing {
                break;
            }
            k -= spacing;
        }
    }
    (out, spacing)
}

/// One-sample KS of subsampled states against `pi`, with exact-boundary states set aside.
pub fn marginal_ks(name: &str, states: &[f64], pi: &StationaryDensity, alpha: f64) -> (CheckResult, usize) {
    let interior: Vec<f64> = states.iter().copied().filter(|&x| x > 0.0 && x < 1.0).collect();
    let atoms = states.len() - interior.len();
    if interior.len() < MIN_SAMPLES {
        return (CheckResult::inconclusive(name, format!("{} samples", interior.len())), atoms);
    }
    let r = ks_one_sample(&interior, |x| pi.cdf(x));
    (CheckResult::test(name, r.statistic, r.p_value, alpha).samples(interior.len()), atoms)
}

/// Forward and backward marginals against `pi` after `burn` time units, plus a comparison of
/// the frequencies of states exactly at 0 or 1.
pub fn check_marginals(ens: &Ensemble, pi: &StationaryDensity, burn: f64, alpha: f64) -> Vec<CheckResult> {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut atoms = [(0usize, 0usize); 2];
    for (s, (name, paths)) in [("marginal_forward", &ens.forward), ("marginal_backward", &ens.backward)].into_iter().enumerate() {
        let (xs, spacing) = subsample(paths, burn);
        let (c, a) = marginal_ks(name, &xs, pi, alpha);
        atoms[s] = (a, xs.len());
        let note = format!("{} spacing {spacing} records, {a} boundary states set aside", c.note);
        out.push(c.seed(ens.seeds[s]).note(note.trim().to_string()).timed(start));
    }
    let (fa, fnn) = atoms[0];
    let (ba, bn) = atoms[1];
    let c = if fnn == 0 || bn == 0 {
        CheckResult::inconclusive("marginal_atoms", "no samples")
    } else {
        let (p1, p2) = (fa as f64 / fnn as f64, ba as f64 / bn as f64);
        let pool = (fa + ba) as f64 / (fnn + bn) as f64;
        let se = (pool * (1.0 - pool) * (1.0 / fnn as f64 + 1.0 / bn as f64)).sqrt();
        let z = if se > 0.0 { (p1 - p2).abs() / se } else { 0.0 };
        CheckResult::below("marginal_atoms", z, SE_BOUND)
            .samples(fnn + bn)
            .note(format!("forward {fa}/{fnn} backward {ba}/{bn}"))
    };
    out.push(c.timed(start));
    out
}

#[inline]
fn at(x: f64, i: usize) -> bool {
    if i == 0 {
        x <= HIT_TOL
    } else {
        1.0 - x <= HIT_TOL
    }
}

/// Per boundary: (a) forward pre-jump states of jumps landing at `i` against backward jump
/// targets off `i`; (b) jump counts per unit time; (c) boundary dwell of the backward paths.
pub fn check_jump_reversal(ens: &Ensemble, rev: &ReversedModel, alpha: f64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let horizon = ens.params.horizon;
    for i in 0..2 {
        let start = Instant::now();
        let fwd: Vec<f64> = ens.forward.iter().flat_map(|p| p.events.iter()).filter(|e| at(e.to, i)).map(|e| e.from).collect();
        let bwd: Vec<f64> = ens.backward.iter().flat_map(|p| p.events.iter()).filter(|e| at(e.from, i)).map(|e| e.to).collect();
        let expect_none = rev.rates[i].rate == JumpRate::Zero;
        let name = format!("jump_targets_{i}");
        let c = if expect_none {
            let n = fwd.len() + bwd.len();
            CheckResult::below(name, n as f64, 0.5).note("no jumps at this boundary")
        } else if fwd.len() < MIN_JUMPS || bwd.len() < MIN_JUMPS {
            CheckResult::inconclusive(name, format!("{} forward and {} backward jumps, need {MIN_JUMPS}", fwd.len(), bwd.len()))
        } else {
            let r = ks_two_sample(&fwd, &bwd);
            CheckResult::test(name, r.statistic, r.p_value, alpha)
                .samples(fwd.len() + bwd.len())
                .note(format!("{} forward, {} backward", fwd.len(), bwd.len()))
        };
        out.push(c.seed(ens.params.seed).timed(start));

        let start = Instant::now();
        let count = |paths: &[Path], fwd: bool| -> Vec<f64> {
            paths
                .iter()
                .map(|p| p.events.iter().filter(|e| at(if fwd { e.to } else { e.from }, i)).count() as f64 / horizon)
                .collect()
        };
        let (cf, cb) = (count(&ens.forward, true), count(&ens.backward, false));
        let se = (variance(&cf) / cf.len() as f64 + variance(&cb) / cb.len() as f64).sqrt();
        let diff = (mean(&cf) - mean(&cb)).abs();
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        out.push(
            CheckResult::below(format!("jump_rate_{i}"), z, SE_BOUND)
                .samples(cf.len() + cb.len())
                .seed(ens.params.seed)
                .note(format!(
                    "forward {:.5} backward {:.5} per unit time, lambda kappa {:.5}",
                    mean(&cf),
                    mean(&cb),
                    rev.model.lambda * rev.kappa[i]
                ))
                .timed(start),
        );

        let dwell: u64 = ens.backward.iter().map(|p| p.dwell_steps[i]).sum();
        let near: f64 = ens.backward.iter().map(|p| p.near_time[i]).sum();
        let near_f: f64 = ens.forward.iter().map(|p| p.near_time[i]).sum();
        let name = format!("dwell_{i}");
        let c = match rev.rates[i].rate {
            JumpRate::Infinite => CheckResult::below(name, dwell as f64, 0.5).note(format!("steps ending at the boundary, near time {near:.4}")),
            JumpRate::Finite(_) => {
                let ok = near > 0.0;
                CheckResult::new(name, near, 0.0, if ok { Status::Pass } else { Status::Fail })
                    .note(format!("backward time within 1e-3: {near:.4}, forward {near_f:.4}, steps at the boundary {dwell}"))
            }
            JumpRate::Zero => CheckResult::new(name, near, 0.0, Status::Pass).note("no jump clock at this boundary"),
        };
        out.push(c.samples(ens.backward.len()).seed(ens.params.seed));
    }
    out
}

/// Jump inter-arrival times of the forward paths against `Exp(lambda)`.
pub fn check_interarrivals(paths: &[Path], lambda: f64, alpha: f64) -> CheckResult {
    let start = Instant::now();
    let mut gaps = Vec::new();
    for p in paths {
        let mut last = 0.0;
        for e in &p.events {
            let t = p.event_time(e);
            gaps.push(t - last);
            last = t;
        }
    }
    // the first gap of each path runs from time 0, which is memoryless too
    if gaps.len() < MIN_SAMPLES || lambda <= 0.0 {
        return CheckResult::inconclusive("interarrival", format!("{} gaps", gaps.len()));
    }
    let r = ks_one_sample(&gaps, |t| 1.0 - (-lambda * t.max(0.0)).exp());
    CheckResult::test("interarrival", r.statistic, r.p_value, alpha).samples(gaps.len()).timed(start)
}

/// Settings for the forward-only checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardParams {
    /// Stationary-started paths for the marginal test.
    pub n_paths: u64,
    pub dt: f64,
    pub burn_factor: f64,
    /// Expected number of jumps along the long paths of the inter-arrival test.
    pub jumps: u64,
    /// Number of long paths the jumps are split over.
    pub long_paths: u64,
    pub alpha: f64,
    pub refine: Option<Refinement>,
    pub seed: u64,
}

impl Default for ForwardParams {
    fn default() -> Self {
        ForwardParams {
            n_paths: 100_000,
            dt: 1e-3,
            burn_factor: 0.2,
            jumps: 12_000,
            long_paths: 8,
            alpha: 0.01,
            refine: Some(Refinement::default()),
            seed: 1,
        }
    }
}

/// Inter-arrival times of long forward paths against `Exp(lambda)` (skipped when `lambda = 0`)
/// and the marginal of stationary-started forward paths after burn-in against `pi`.
pub fn run_forward_checks(model: &Model, pi: Arc<StationaryDensity>, p: &ForwardParams) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    if model.lambda > 0.0 {
        let seed = mix(p.seed, 3);
        let t = (p.jumps as f64 / model.lambda / p.long_paths.max(1) as f64 / p.dt).ceil() * p.dt;
        let sim = SimParams { refine: p.refine, ..SimParams::new(t, p.dt).recording_every((t / p.dt).round() as u64) };
        let paths = run_replicates(p.long_paths.max(1), |r| simulate_forward(model, 0.5, &sim, seed, r))?;
        report.push(check_interarrivals(&paths, model.lambda, p.alpha).seed(seed));
    }
    let start = Instant::now();
    let burn = p.burn_factor * relaxation_scale(model);
    let horizon = (burn / p.dt).ceil().max(1.0) * p.dt;
    let sim = SimParams { refine: p.refine, ..SimParams::new(horizon, p.dt).recording_every((horizon / p.dt).round() as u64) };
    let sampler = stationary_sampler(pi.clone())?;
    let seed = mix(p.seed, 4);
    let paths = run_replicates(p.n_paths, |r| simulate_forward(model, draw_start(&sampler, seed, r), &sim, seed, r))?;
    let finals: Vec<f64> = paths.iter().map(|q| *q.states.last().unwrap()).collect();
    let (c, atoms) = marginal_ks("marginal_forward", &finals, &pi, p.alpha);
    let note = format!("{} horizon {horizon}, {atoms} boundary states set aside", c.note);
    report.push(c.seed(seed).note(note.trim().to_string()).timed(start));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsParams {
    pub eps: Vec<f64>,
    pub replicates: u64,
    /// Horizon of each replicate, including burn-in.
    pub t_end: f64,
    pub burn: f64,
    pub dt: f64,
    pub record_every: u64,
    pub bins: usize,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsPoint {
    pub eps: f64,
    pub l1: f64,
    /// Jackknife standard error over replicates.
    pub se: f64,
}

/// L1 distance between the histogram of states after burn-in and `pi` on equal bins.
fn histogram_l1(states: &[&[f64]], pi_mass: &[f64]) -> f64 {
    let bins = pi_mass.len();
    let mut h = vec![0.0; bins];
    let mut n = 0.0;
    for s in states {
        for &x in s.iter() {
            h[((x * bins as f64) as usize).min(bins - 1)] += 1.0;
            n += 1.0;
        }
    }
    h.iter().zip(pi_mass).map(|(c, p)| (c / n - p).abs()).sum()
}

/// L1 distances along the epsilon sequence; passes if they decrease within two standard errors
/// and the last is below `tol`.
pub fn check_eps_convergence(model: &Model, pi: Arc<StationaryDensity>, p: &EpsParams) -> Result<(CheckResult, Vec<EpsPoint>)> {
    let start = Instant::now();
    if p.eps.windows(2).any(|w| w[1] >= w[0]) || p.eps.is_empty() || p.bins == 0 {
        return Err(Error::InvalidParameter("eps sequence must be nonempty and decreasing".into()));
    }
    let sim = SimParams::new(p.t_end, p.dt).recording_every(p.record_every);
    sim.steps()?;
    let faces: Vec<f64> = (0..=p.bins).map(|k| k as f64 / p.bins as f64).collect();
    let pi_mass = pi.interval_masses(&faces);
    let sampler = stationary_sampler(pi)?;
    let kb = (p.burn / sim.dt / p.record_every as f64).ceil() as usize;
    let mut points = Vec::new();
    for (j, &eps) in p.eps.iter().enumerate() {
        let seed = mix(p.seed, 16 + j as u64);
        let paths = run_replicates(p.replicates, |r| {
            let x0 = draw_start(&sampler, seed, r);
            simulate_forward_eps(model, eps, x0, &sim, seed, r)
        })?;
        let kept: Vec<&[f64]> = paths.iter().map(|q| &q.states[kb.min(q.states.len())..]).collect();
        let l1 = histogram_l1(&kept, &pi_mass);
        let r = kept.len();
        let se = if r > 1 {
            let loo: Vec<f64> = (0..r)
                .map(|d| {
                    let sub: Vec<&[f64]> = kept.iter().enumerate().filter(|&(k, _)| k != d).map(|(_, s)| *s).collect();
                    histogram_l1(&sub, &pi_mass)
                })
                .collect();
            let m = mean(&loo);
            ((r - 1) as f64 / r as f64 * loo.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
        } else {
            f64::NAN
        };
        points.push(EpsPoint { eps, l1, se });
    }
    let monotone = points.windows(2).all(|w| w[1].l1 <= w[0].l1 + 2.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt());
    let last = *points.last().unwrap();
    let ok = monotone && last.l1 < p.tol;
    let note = points.iter().map(|q| format!("eps {} l1 {:.4} se {:.4}", q.eps, q.l1, q.se)).collect::<Vec<_>>().join("; ");
    let c = CheckResult::new("eps_convergence", last.l1, p.tol, if ok { Status::Pass } else { Status::Fail })
        .samples((p.replicates * p.eps.len() as u64) as usize)
        .seed(p.seed)
        .note(format!("{note}; decreasing {monotone}"))
        .timed(start);
    Ok((c, points))
}

/// Rate tag implied by the boundary classification: `"zero"` without jumps into `i`, `"infinite"`
/// when `2 |mu(i)| >= |v'(i)|`, `"finite"` otherwise.
pub fn expected_rate_tag(model: &Model, i: usize) -> &'static str {
    let t = model.taylor[i];
    if !(model.lambda > 0.0 && model.jump_reach[i]) {
        "zero"
    } else if 2.0 * t.m0.abs() >= t.v1.abs() - CRITICAL_TOL {
        "infinite"
    } else {
        "finite"
    }
}

/// Endpoint value of the reversed drift in the `p` orientation: `mu(i)` unless jumps reach an
/// inaccessible boundary, where it is `v'(i) - mu(i)`.
pub fn expected_drift_limit(model: &Model, i: usize) -> f64 {
    let t = model.taylor[i];
    let jumps = model.lambda > 0.0 && model.jump_reach[i];
    let inward = if jumps && 2.0 * t.m0.abs() > t.v1.abs() { t.v1 - t.m0 } else { t.m0 };
    if i == 0 {
        inward
    } else {
        -inward
    }
}

/// Finite jump rate from the leading coefficient `C` of `pi ~ C q^beta`:
/// `lambda kappa v1 C K / (v pi)(1/2)^2` with `K = lim q^(2 m0 / v1) exp(int_q^(1/2) 2 mu / v)`.
pub fn rate_from_asymptotics(model: &Model, pi: &StationaryDensity, i: usize) -> Option<f64> {
    let a = pi.boundary_asymptotics[i];
    if a.case != AsymptoticCase::Power || expected_rate_tag(model, i) != "finite" {
        return None;
    }
    let t = model.taylor[i];
    let gl = GaussLegendre::new(20);
    let g = |q: f64| {
        let (v, m) = model.inward(i, q);
        2.0 * m / v - 2.0 * t.m0 / (t.v1 * q)
    };
    let (lo, hi) = (1e-10f64, 0.5f64);
    let panels = 60;
    let r = (hi / lo).powf(1.0 / panels as f64);
    let mut integral = 0.0;
    let mut x = lo;
    for _ in 0..panels {
        integral += gl.integrate(x, x * r, g);
        x *= r;
    }
    let k = (integral - 2.0 * t.m0 / t.v1 * 2f64.ln()).exp();
    let vpi_half = model.v(0.5) * pi.eval(0.5);
    Some(model.lambda * pi.kappa(i) * t.v1 * a.coefficient * k / (vpi_half * vpi_half))
}

/// Reversed-drift limits and rate classification against their closed-form predictions.
pub fn check_reversal_limits(rev: &ReversedModel) -> Vec<CheckResult> {
    let model = &rev.model;
    let mut out = Vec::new();
    for i in 0..2 {
        let start = Instant::now();
        let want = expected_drift_limit(model, i);
        let got = rev.drift.limits[i];
        out.push(
            CheckResult::below(format!("drift_limit_{i}"), (got - want).abs(), DRIFT_LIMIT_TOL)
                .note(format!("estimate {got:.6} expected {want:.6} fit spread {:.2e}", rev.drift.limit_error[i]))
                .timed(start),
        );
        let tag = rev.rates[i].rate.tag();
        let want = expected_rate_tag(model, i);
        out.push(
            CheckResult::below(format!("rate_tag_{i}"), if tag == want { 0.0 } else { 1.0 }, 0.5)
                .note(format!("estimate {tag} expected {want}, growth {:?}", rev.rates[i].growth)),
        );
        if let (Some(got), Some(want)) = (rev.rates[i].rate.value(), rate_from_asymptotics(model, &rev.pi, i)) {
            out.push(
                CheckResult::below(format!("rate_value_{i}"), (got / want - 1.0).abs(), RATE_TOL)
                    .note(format!("estimate {got:.6} asymptotic {want:.6}")),
            );
        }
    }
    if model.lambda == 0.0 {
        let pi = &rev.pi;
        let err = (0..pi.len()).map(|k| (rev.drift.values[k] - model.mu(pi.grid[k])).abs()).fold(0.0, f64::max);
        out.push(CheckResult::below("reversible_drift", err, REVERSIBLE_TOL).samples(pi.len()));
    }
    out
}

/// Twelve models covering zero, finite and infinite rates, the critical case and the
/// sign change of the reversed drift.
pub fn classification_sweep() -> Vec<Model> {
    let wf = |mu0: f64, mu1: f64, s: f64, lambda: f64, w: fn(f64) -> f64| {
        wright_fisher(mu0, mu1, coef(move |_| s), lambda, coef(w)).expect("sweep model")
    };
    let n = |mu0: f64, mu1: f64, lambda: f64| neutral(mu0, mu1, lambda).expect("sweep model");
    let mut m = vec![
        n(1.0, 1.0, 0.0),
        n(0.3, 0.6, 0.0),
        n(0.2, 0.2, 1.0),
        n(0.3, 0.3, 1.0),
        n(1.0, 1.0, 1.0),
        n(0.5, 0.7, 1.0),
        n(2.0, 0.5, 1.0),
        n(0.2, 1.4, 2.0),
        wf(0.2, 0.6, 2.0, 1.0, |p| p),
        wf(1.5, 0.1, 0.0, 0.5, |p| p),
        Model::custom("p*(1-p)", "0.3*(1-p) - 0.4*p", "1", 1.0, &Default::default()).expect("sweep model"),
    ];
    m.push(
        wright_fisher(0.4, 0.7, coef(|p: f64| 2.0 - p), 1.5, coef(|p: f64| p * p)).expect("sweep model"),
    );
    m
}

/// Settings for the Monte Carlo reversal suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub n_paths: u64,
    pub dt: f64,
    /// Burn-in as a multiple of [`relaxation_scale`].
    pub burn_factor: f64,
    pub lag: f64,
    /// Monomial exponents `(a, b)` of the adjoint-correlation pairs `(p^a, p^b)`.
    pub pairs: Vec<(i32, i32)>,
    pub alpha: f64,
    pub degree: usize,
    pub refine: Option<Refinement>,
    pub backward: BackwardOptions,
    pub seed: u64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            n_paths: 100_000,
            dt: 1e-3,
            burn_factor: 0.2,
            lag: 0.1,
            pairs: vec![(1, 2), (2, 3)],
            alpha: 0.01,
            degree: 6,
            refine: Some(Refinement::default()),
            backward: BackwardOptions::default(),
            seed: 1,
        }
    }
}

impl SuiteParams {
    /// Path horizon: the burn-in rounded up to a whole number of lags.
    pub fn horizon(&self, model: &Model) -> f64 {
        let burn = self.burn_factor * relaxation_scale(model);
        (burn / self.lag).ceil().max(1.0) * self.lag
    }

    pub fn ensemble(&self, model: &Model) -> Result<EnsembleParams> {
        let k = (self.lag / self.dt).round();
        if k < 1.0 || (k * self.dt - self.lag).abs() > 1e-9 * self.lag {
            return Err(Error::InvalidParameter(format!("lag {} is not a multiple of dt {}", self.lag, self.dt)));
        }
        Ok(EnsembleParams {
            n_paths: self.n_paths,
            horizon: self.horizon(model),
            dt: self.dt,
            record_every: k as u64,
            refine: self.refine,
            backward: self.backward,
            seed: self.seed,
        })
    }
}

/// Stationarity plus the Monte Carlo reversal checks on one model.
pub fn run_reversal_suite(rev: &ReversedModel, p: &SuiteParams) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    report.push(check_stationarity(&rev.model, &rev.pi, p.degree));
    let ep = p.ensemble(&rev.model)?;
    let ens = stationary_ensemble(rev, &ep)?;
    for &(a, b) in &p.pairs {
        report.push(check_adjoint_correlation(&ens, a, b, p.lag)?);
    }
    report.extend(check_marginals(&ens, &rev.pi, ep.horizon, p.alpha));
    report.extend(check_jump_reversal(&ens, rev, p.alpha));
    Ok(report)
}

/// Deterministic checks at every model of the classification sweep.
pub fn run_sweep(degree: usize) -> Result<Vec<(String, VerificationReport)>> {
    let mut out = Vec::new();
    for m in classification_sweep() {
        let pi = Arc::new(crate::stationary::solve_stationary_shooting(&m, 1e-12)?);
        let rev = crate::reversal::reverse_model(&m, pi.clone())?;
        let mut r = VerificationReport::new();
        r.push(check_stationarity(&m, &pi, degree));
        r.extend(check_reversal_limits(&rev));
        out.push((m.label.clone(), r));
    }
    Ok(out)
}
