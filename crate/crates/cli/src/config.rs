//! Run configuration, read from TOML with `[model]`, `[solver]`, `[simulate]`, `[verify]` and
//! `[output]` sections. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use revjump::expr::Expr;
use revjump::model::{coef, wright_fisher};
use revjump::quad::{GridParams, PanelGrid};
use revjump::simulate::{BackwardOptions, Refinement, DEFAULT_EPS};
use revjump::stationary::{
    solve_stationary_nullspace, solve_stationary_shooting, stationary_neutral_closed_form, StationaryDensity,
};
use revjump::verify::{EpsParams, ForwardParams, SuiteParams};
use revjump::Model;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub simulate: SimulateConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Wright-Fisher with `w(p) = p` and no selection.
    Neutral,
    /// Wright-Fisher with expressions for the selection coefficient and `w`.
    WrightFisher,
    /// Expressions for `v`, `mu` and `w0`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub family: Family,
    pub mu0: f64,
    pub mu1: f64,
    pub lambda: f64,
    /// Selection coefficient `s(p)` (wright_fisher).
    pub selection: Option<String>,
    /// Probability `w(p)` that a jump lands at 1 (wright_fisher).
    pub w: Option<String>,
    pub v: Option<String>,
    pub mu: Option<String>,
    pub w0: Option<String>,
    /// Named constants usable in the expressions.
    pub params: BTreeMap<String, f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: Family::Neutral,
            mu0: 0.3,
            mu1: 0.3,
            lambda: 1.0,
            selection: None,
            w: None,
            v: None,
            mu: None,
            w0: None,
            params: BTreeMap::new(),
        }
    }
}

fn config_err(e: revjump::Error) -> CliError {
    CliError::Config(format!("model: {e}"))
}

impl ModelConfig {
    pub fn build(&self) -> Result<Model, CliError> {
        let stray = |keys: &[(&str, bool)], family: &str| -> Result<(), CliError> {
            match keys.iter().find(|(_, set)| *set) {
                Some((k, _)) => Err(CliError::Config(format!("model.{k} does not apply to family = \"{family}\""))),
                None => Ok(()),
            }
        };
        match self.family {
            Family::Neutral => {
                stray(
                    &[
                        ("selection", self.selection.is_some()),
                        ("w", self.w.is_some()),
                        ("v", self.v.is_some()),
                        ("mu", self.mu.is_some()),
                        ("w0", self.w0.is_some()),
                    ],
                    "neutral",
                )?;
                revjump::model::neutral(self.mu0, self.mu1, self.lambda).map_err(config_err)
            }
            Family::WrightFisher => {
                stray(&[("v", self.v.is_some()), ("mu", self.mu.is_some()), ("w0", self.w0.is_some())], "wright_fisher")?;
                let s = Expr::parse_with(self.selection.as_deref().unwrap_or("0"), &self.params).map_err(config_err)?;
                let w = Expr::parse_with(self.w.as_deref().unwrap_or("p"), &self.params).map_err(config_err)?;
                let mut m = wright_fisher(self.mu0, self.mu1, coef(move |p| s.eval(p)), self.lambda, coef(move |p| w.eval(p)))
                    .map_err(config_err)?;
                m.label = format!(
                    "wright_fisher(mu0={}, mu1={}, s={}, lambda={}, w={})",
                    self.mu0,
                    self.mu1,
                    self.selection.as_deref().unwrap_or("0"),
                    self.lambda,
                    self.w.as_deref().unwrap_or("p")
                );
                Ok(m)
            }
            Family::Custom => {
                stray(&[("selection", self.selection.is_some()), ("w", self.w.is_some())], "custom")?;
                let need = |k: &str, e: &Option<String>| {
                    e.clone().ok_or_else(|| CliError::Config(format!("model.{k} is required for family = \"custom\"")))
                };
                let (v, mu, w0) = (need("v", &self.v)?, need("mu", &self.mu)?, need("w0", &self.w0)?);
                Model::custom(&v, &mu, &w0, self.lambda, &self.params).map_err(config_err)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Shooting,
    Nullspace,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Shooting tolerance.
    pub tol: f64,
    /// Cells of the null-space scheme.
    pub cells: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { method: SolverMethod::Shooting, tol: 1e-12, cells: 2000 }
    }
}

impl SolverConfig {
    pub fn solve(&self, model: &Model, spec: &ModelConfig) -> Result<StationaryDensity, CliError> {
        let stage = |e| CliError::Solver { stage: "stationary density", source: e };
        match self.method {
            SolverMethod::Shooting => solve_stationary_shooting(model, self.tol).map_err(stage),
            SolverMethod::Nullspace => solve_stationary_nullspace(model, self.cells).map_err(stage),
            SolverMethod::ClosedForm => {
                if spec.family != Family::Neutral {
                    return Err(CliError::Config("solver.method = \"closed_form\" needs family = \"neutral\"".into()));
                }
                let grid = Arc::new(PanelGrid::new(GridParams::default()));
                stationary_neutral_closed_form(spec.mu0, spec.mu1, spec.lambda, grid).map_err(stage)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    ForwardEps,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::ForwardEps => "forward_eps",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub direction: Direction,
    pub t_end: f64,
    pub dt: f64,
    /// Width of the jump-destination strip of `forward_eps`.
    pub eps: f64,
    /// Local-time window of the backward clock.
    pub local_time_eps: f64,
    /// Initial state; drawn from the stationary density when absent.
    pub x0: Option<f64>,
    pub seed: u64,
    pub replicates: u64,
    /// Steps between recorded states.
    pub record_every: u64,
    /// Step refinement and square-root steps near the boundaries.
    pub refine: bool,
    /// Boundaries whose backward jump clock is switched off.
    pub disable_clock: Vec<usize>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            direction: Direction::Forward,
            t_end: 10.0,
            dt: 1e-3,
            eps: 0.02,
            local_time_eps: DEFAULT_EPS,
            x0: None,
            seed: 1,
            replicates: 1,
            record_every: 10,
            refine: true,
            disable_clock: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Stationarity identity over monomials.
    Stationarity,
    /// Endpoint drift limits and jump-rate classification.
    Limits,
    /// Adjoint correlations, marginals and jump reversal from stationary-started path pairs.
    Reversal,
    /// Forward inter-arrival times and marginal.
    Forward,
    /// Histogram distance of the epsilon-regularized process along the epsilon sequence.
    Eps,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub checks: Vec<CheckKind>,
    pub n_paths: u64,
    pub dt: f64,
    pub burn_factor: f64,
    pub lag: f64,
    /// Monomial exponents of the adjoint-correlation pairs.
    pub pairs: Vec<[i32; 2]>,
    pub alpha: f64,
    pub degree: usize,
    pub seed: u64,
    pub local_time_eps: f64,
    pub refine: bool,
    /// Constant added to the reversed drift (negative control).
    pub perturb_drift: f64,
    pub disable_clock: Vec<usize>,
    /// Expected jumps for the forward inter-arrival test.
    pub jumps: u64,
    pub eps_sequence: Vec<f64>,
    pub eps_replicates: u64,
    pub eps_t_end: f64,
    pub eps_burn: f64,
    pub eps_dt: f64,
    pub eps_record_every: u64,
    pub eps_bins: usize,
    pub eps_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let s = SuiteParams::default();
        VerifyConfig {
            checks: vec![CheckKind::Stationarity, CheckKind::Limits, CheckKind::Reversal],
            n_paths: s.n_paths,
            dt: s.dt,
            burn_factor: s.burn_factor,
            lag: s.lag,
            pairs: s.pairs.iter().map(|&(a, b)| [a, b]).collect(),
            alpha: s.alpha,
            degree: s.degree,
            seed: s.seed,
            local_time_eps: DEFAULT_EPS,
            refine: true,
            perturb_drift: 0.0,
            disable_clock: Vec::new(),
            jumps: ForwardParams::default().jumps,
            eps_sequence: vec![0.2, 0.1, 0.05, 0.02],
            eps_replicates: 160,
            eps_t_end: 1000.0,
            eps_burn: 10.0,
            eps_dt: 1e-3,
            eps_record_every: 100,
            eps_bins: 20,
            eps_tol: 0.02,
        }
    }
}

fn clock_mask(list: &[usize], key: &str) -> Result<[bool; 2], CliError> {
    let mut mask = [false; 2];
    for &i in list {
        if i > 1 {
            return Err(CliError::Config(format!("{key}: boundary {i} is not 0 or 1")));
        }
        mask[i] = true;
    }
    Ok(mask)
}

impl VerifyConfig {
    fn refinement(&self) -> Option<Refinement> {
        self.refine.then(Refinement::default)
    }

    pub fn backward(&self) -> Result<BackwardOptions, CliError> {
        Ok(BackwardOptions { eps: self.local_time_eps, disable_clock: clock_mask(&self.disable_clock, "verify.disable_clock")? })
    }

    pub fn suite(&self) -> Result<SuiteParams, CliError> {
        Ok(SuiteParams {
            n_paths: self.n_paths,
            dt: self.dt,
            burn_factor: self.burn_factor,
            lag: self.lag,
            pairs: self.pairs.iter().map(|p| (p[0], p[1])).collect(),
            alpha: self.alpha,
            degree: self.degree,
            refine: self.refinement(),
            backward: self.backward()?,
            seed: self.seed,
        })
    }

    pub fn forward(&self) -> ForwardParams {
        ForwardParams {
            n_paths: self.n_paths,
            dt: self.dt,
            burn_factor: self.burn_factor,
            jumps: self.jumps,
            long_paths: 8,
            alpha: self.alpha,
            refine: self.refinement(),
            seed: self.seed,
        }
    }

    pub fn eps(&self) -> EpsParams {
        EpsParams {
            eps: self.eps_sequence.clone(),
            replicates: self.eps_replicates,
            t_end: self.eps_t_end,
            burn: self.eps_burn,
            dt: self.eps_dt,
            record_every: self.eps_record_every,
            bins: self.eps_bins,
            tol: self.eps_tol,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write an SVG of the simulated paths.
    pub plot: bool,
    /// Draw time on the vertical axis, increasing upwards.
    pub time_vertical: bool,
    /// Most paths drawn in one plot.
    pub plot_paths: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), plot: true, time_vertical: false, plot_paths: 4 }
    }
}

impl SimulateConfig {
    pub fn backward(&self) -> Result<BackwardOptions, CliError> {
        Ok(BackwardOptions {
            eps: self.local_time_eps,
            disable_clock: clock_mask(&self.disable_clock, "simulate.disable_clock")?,
        })
    }
}

fn positive(key: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key} must be positive (got {x})")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        if s.cells < 10 {
            return Err(CliError::Config(format!("solver.cells must be at least 10 (got {})", s.cells)));
        }
        let m = &self.simulate;
        positive("simulate.t_end", m.t_end)?;
        positive("simulate.dt", m.dt)?;
        if m.dt >= m.t_end {
            return Err(CliError::Config(format!("simulate.dt = {} must be below simulate.t_end = {}", m.dt, m.t_end)));
        }
        positive("simulate.local_time_eps", m.local_time_eps)?;
        if !(m.eps > 0.0 && m.eps < 0.5) {
            return Err(CliError::Config(format!("simulate.eps must lie in (0, 1/2) (got {})", m.eps)));
        }
        if let Some(x0) = m.x0 {
            if !(0.0..=1.0).contains(&x0) {
                return Err(CliError::Config(format!("simulate.x0 = {x0} is outside [0, 1]")));
            }
        }
        if m.replicates == 0 || m.record_every == 0 {
            return Err(CliError::Config("simulate.replicates and simulate.record_every must be positive".into()));
        }
        m.backward()?;
        let v = &self.verify;
        for (k, x) in [
            ("verify.dt", v.dt),
            ("verify.burn_factor", v.burn_factor),
            ("verify.lag", v.lag),
            ("verify.alpha", v.alpha),
            ("verify.local_time_eps", v.local_time_eps),
            ("verify.eps_t_end", v.eps_t_end),
            ("verify.eps_dt", v.eps_dt),
            ("verify.eps_tol", v.eps_tol),
        ] {
            positive(k, x)?;
        }
        if v.dt >= v.lag {
            return Err(CliError::Config(format!("verify.dt = {} must be below verify.lag = {}", v.dt, v.lag)));
        }
        if v.eps_dt >= v.eps_t_end {
            return Err(CliError::Config(format!("verify.eps_dt = {} must be below verify.eps_t_end = {}", v.eps_dt, v.eps_t_end)));
        }
        if v.alpha >= 1.0 {
            return Err(CliError::Config(format!("verify.alpha must be below 1 (got {})", v.alpha)));
        }
        if v.eps_burn < 0.0 || v.eps_burn >= v.eps_t_end {
            return Err(CliError::Config("verify.eps_burn must lie in [0, eps_t_end)".into()));
        }
        if v.n_paths == 0 || v.eps_replicates == 0 || v.eps_bins == 0 || v.eps_record_every == 0 {
            return Err(CliError::Config("verify sample sizes must be positive".into()));
        }
        if v.eps_sequence.is_empty() || v.eps_sequence.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::Config("verify.eps_sequence must be nonempty and decreasing".into()));
        }
        v.backward()?;
        if self.output.plot_paths == 0 {
            return Err(CliError::Config("output.plot_paths must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.model.build().is_ok());
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_toml("[model]\nmu2 = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("mu2"), "{e}");
        let e = RunConfig::from_toml("[plots]\n").unwrap_err();
        assert!(e.to_string().contains("plots"), "{e}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[simulate]\ndt = 2.0\nt_end = 1.0\n",
            "[solver]\ntol = -1.0\n",
            "[verify]\neps_sequence = [0.1, 0.2]\n",
            "[simulate]\ndisable_clock = [2]\n",
            "[simulate]\nx0 = 1.5\n",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn families_build() {
        let wf = RunConfig::from_toml(
            "[model]\nfamily = \"wright_fisher\"\nmu0 = 0.4\nmu1 = 0.7\nselection = \"s0 - p\"\nw = \"p^2\"\nparams = { s0 = 2.0 }\n",
        )
        .unwrap();
        let m = wf.model.build().unwrap();
        assert!((m.mu(0.5) - (0.4 * 0.5 - 0.7 * 0.5 + 1.5 * 0.25)).abs() < 1e-12);
        assert!((m.w1(0.5) - 0.25).abs() < 1e-12);

        let custom = RunConfig::from_toml("[model]\nfamily = \"custom\"\nv = \"p*(1-p)\"\nmu = \"0.3 - 0.7*p\"\nw0 = \"1-p\"\n").unwrap();
        assert!((custom.model.build().unwrap().mu(0.0) - 0.3).abs() < 1e-12);

        let stray = RunConfig::from_toml("[model]\nv = \"p\"\n").unwrap();
        assert!(stray.model.build().unwrap_err().to_string().contains("model.v"));
        let missing = RunConfig::from_toml("[model]\nfamily = \"custom\"\nv = \"p*(1-p)\"\n").unwrap();
        assert!(missing.model.build().unwrap_err().to_string().contains("model.mu"));
    }
}
