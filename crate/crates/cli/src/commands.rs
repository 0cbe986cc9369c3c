//! Subcommands. Each writes its files under the output directory and returns the outcome that
//! determines the exit code.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use revjump::reversal::{reverse_model, stationary_sampler, ReversedModel};
use revjump::simulate::{
    draw_start, run_replicates, simulate_backward, simulate_forward, simulate_forward_eps, Path, Refinement, SimParams,
};
use revjump::stationary::StationaryDensity;
use revjump::verify::{
    check_adjoint_correlation, check_eps_convergence, check_jump_reversal, check_marginals, check_reversal_limits,
    check_stationarity, run_forward_checks, run_sweep, stationary_ensemble, Status, VerificationReport,
};
use revjump::Model;

use crate::config::{CheckKind, Direction, RunConfig};
use crate::{io, plot, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Reverse,
    Simulate,
    Verify,
    Sweep,
}

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub perturb_drift: Option<f64>,
    pub disable_clock: Vec<usize>,
    pub direction: Option<Direction>,
    pub time_vertical: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(d) = &self.out {
            cfg.output.dir = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.simulate.seed = s;
            cfg.verify.seed = s;
        }
        if let Some(r) = self.replicates {
            cfg.simulate.replicates = r;
        }
        if let Some(x) = self.perturb_drift {
            cfg.verify.perturb_drift = x;
        }
        if !self.disable_clock.is_empty() {
            cfg.simulate.disable_clock = self.disable_clock.clone();
            cfg.verify.disable_clock = self.disable_clock.clone();
        }
        if let Some(d) = self.direction {
            cfg.simulate.direction = d;
        }
        cfg.output.time_vertical |= self.time_vertical;
        cfg.validate()
    }
}

pub fn load_config(path: Option<&FsPath>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml(&text)
        }
    }
}

/// Loads the config, applies the overrides and runs `cmd`.
pub fn run(cmd: Command, config: Option<&FsPath>, overrides: &Overrides) -> Result<Status, CliError> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg)?;
    execute(cmd, &cfg)
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Status, CliError> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    match cmd {
        Command::Solve => solve(cfg),
        Command::Reverse => reverse(cfg),
        Command::Simulate => simulate(cfg),
        Command::Verify => verify(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

fn stationary(cfg: &RunConfig) -> Result<(Model, Arc<StationaryDensity>), CliError> {
    let model = cfg.model.build()?;
    let pi = cfg.solver.solve(&model, &cfg.model)?;
    Ok((model, Arc::new(pi)))
}

fn reversed(model: &Model, pi: Arc<StationaryDensity>) -> Result<ReversedModel, CliError> {
    reverse_model(model, pi).map_err(|source| CliError::Solver { stage: "reversal", source })
}

fn solve(cfg: &RunConfig) -> Result<Status, CliError> {
    let (model, pi) = stationary(cfg)?;
    io::write(&out(cfg, "pi.csv"), &io::pi_csv(&pi))?;
    io::write(&out(cfg, "pi.meta"), &io::pi_meta(&model, &pi))?;
    io::write(&out(cfg, "asymptotics.meta"), &io::asymptotics_meta(&pi))?;
    println!("{}: {} nodes, mass {:.12}, mean {:.12}", model.label, pi.len(), pi.total_mass(), pi.mean());
    Ok(Status::Pass)
}

fn reverse(cfg: &RunConfig) -> Result<Status, CliError> {
    let (model, pi) = stationary(cfg)?;
    let rev = reversed(&model, pi)?.with_drift_perturbation(cfg.verify.perturb_drift);
    io::write(&out(cfg, "reversed.csv"), &io::reversed_csv(&rev))?;
    io::write(&out(cfg, "reversed.meta"), &io::reversed_meta(&rev))?;
    println!("{}: r0 {}, r1 {}", model.label, rev.rates[0].rate.tag(), rev.rates[1].rate.tag());
    Ok(Status::Pass)
}

fn simulate(cfg: &RunConfig) -> Result<Status, CliError> {
    let sc = &cfg.simulate;
    let model = cfg.model.build()?;
    let sim = SimParams {
        refine: sc.refine.then(Refinement::default),
        ..SimParams::new(sc.t_end, sc.dt).recording_every(sc.record_every)
    };
    sim.steps().map_err(|e| CliError::Config(format!("simulate: {e}")))?;
    let needs_pi = sc.direction == Direction::Backward || sc.x0.is_none();
    let pi = if needs_pi { Some(Arc::new(cfg.solver.solve(&model, &cfg.model)?)) } else { None };
    let sampler = match (&pi, sc.x0) {
        (Some(pi), None) => Some(stationary_sampler(pi.clone()).map_err(|source| CliError::Solver { stage: "sampler", source })?),
        _ => None,
    };
    let start = |r: u64| sc.x0.unwrap_or_else(|| draw_start(sampler.as_ref().unwrap(), sc.seed, r));
    let sim_stage = |source| CliError::Solver { stage: "simulation", source };
    let paths = match sc.direction {
        Direction::Forward => run_replicates(sc.replicates, |r| simulate_forward(&model, start(r), &sim, sc.seed, r)),
        Direction::ForwardEps => {
            run_replicates(sc.replicates, |r| simulate_forward_eps(&model, sc.eps, start(r), &sim, sc.seed, r))
        }
        Direction::Backward => {
            let rev = reversed(&model, pi.clone().unwrap())?.with_drift_perturbation(cfg.verify.perturb_drift);
            let opts = sc.backward()?;
            run_replicates(sc.replicates, |r| simulate_backward(&rev, start(r), &sim, &opts, sc.seed, r))
        }
    }
    .map_err(sim_stage)?;

    let name = sc.direction.name();
    let mut warnings = BTreeSet::new();
    for p in &paths {
        let stem = format!("{name}_{:04}", p.replicate);
        io::write(&out(cfg, &format!("{stem}.csv")), &io::path_csv(p))?;
        io::write(&out(cfg, &format!("{stem}_events.csv")), &io::events_csv(p))?;
        warnings.extend(p.warnings.iter().cloned());
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if cfg.output.plot {
        let shown: Vec<&Path> = paths.iter().take(cfg.output.plot_paths).collect();
        let title = format!("{name}: {}", model.label);
        io::write(&out(cfg, &format!("{name}.svg")), &plot::paths_svg(&shown, &title, cfg.output.time_vertical))?;
    }
    let jumps: usize = paths.iter().map(|p| p.events.len()).sum();
    println!("{} {name} paths over [0, {}], {jumps} jumps", paths.len(), sc.t_end);
    Ok(Status::Pass)
}

fn verify(cfg: &RunConfig) -> Result<Status, CliError> {
    let vc = &cfg.verify;
    let (model, pi) = stationary(cfg)?;
    let mc = |source| CliError::Solver { stage: "verification", source };
    let wants = |k: CheckKind| vc.checks.contains(&k);
    let mut report = VerificationReport::new();
    if wants(CheckKind::Stationarity) {
        report.push(check_stationarity(&model, &pi, vc.degree));
    }
    if wants(CheckKind::Limits) || wants(CheckKind::Reversal) {
        let rev = reversed(&model, pi.clone())?.with_drift_perturbation(vc.perturb_drift);
        if wants(CheckKind::Limits) {
            report.extend(check_reversal_limits(&rev));
        }
        if wants(CheckKind::Reversal) {
            let suite = vc.suite()?;
            let ep = suite.ensemble(&model).map_err(|e| CliError::Config(format!("verify: {e}")))?;
            let ens = stationary_ensemble(&rev, &ep).map_err(mc)?;
            for &(a, b) in &suite.pairs {
                report.push(check_adjoint_correlation(&ens, a, b, suite.lag).map_err(mc)?);
            }
            report.extend(check_marginals(&ens, &pi, ep.horizon, suite.alpha));
            report.extend(check_jump_reversal(&ens, &rev, suite.alpha));
        }
    }
    if wants(CheckKind::Forward) {
        report.extend(run_forward_checks(&model, pi.clone(), &vc.forward()).map_err(mc)?.checks);
    }
    if wants(CheckKind::Eps) {
        let (c, points) = check_eps_convergence(&model, pi.clone(), &vc.eps()).map_err(mc)?;
        report.push(c);
        let mut s = String::from("eps,l1,se\n");
        for p in &points {
            let _ = writeln!(s, "{},{},{}", io::num(p.eps), io::num(p.l1), io::num(p.se));
        }
        io::write(&out(cfg, "eps.csv"), &s)?;
    }
    let mut meta = format!("model={}\nperturb_drift={}\n", model.label, vc.perturb_drift);
    meta.push_str(&report.to_meta());
    io::write(&out(cfg, "report.csv"), &report.to_csv())?;
    io::write(&out(cfg, "report.meta"), &meta)?;
    print_report(&report);
    Ok(report.outcome())
}

fn sweep(cfg: &RunConfig) -> Result<Status, CliError> {
    let results = run_sweep(cfg.verify.degree).map_err(|source| CliError::Solver { stage: "sweep", source })?;
    let mut all = VerificationReport::new();
    let mut csv = String::new();
    let mut meta = String::new();
    for (k, (label, report)) in results.iter().enumerate() {
        let body = report.to_csv();
        let mut lines = body.lines();
        let header = lines.next().unwrap_or_default();
        if k == 0 {
            let _ = writeln!(csv, "model,{header}");
        }
        for l in lines {
            let _ = writeln!(csv, "{k},{l}");
        }
        let _ = writeln!(meta, "model{k}={label}");
        let _ = writeln!(meta, "model{k}.outcome={}", report.outcome().name());
        println!("[{k}] {label}: {}", report.outcome().name());
        for c in report.failures() {
            println!("    {} {:.3e} (threshold {:.3e}) {}", c.name, c.statistic, c.threshold, c.note);
        }
        all.extend(report.checks.iter().cloned());
    }
    let _ = writeln!(meta, "models={}", results.len());
    let _ = writeln!(meta, "failed={}", all.failures().len());
    let _ = writeln!(meta, "outcome={}", all.outcome().name());
    io::write(&out(cfg, "sweep.csv"), &csv)?;
    io::write(&out(cfg, "sweep.meta"), &meta)?;
    Ok(all.outcome())
}

fn print_report(report: &VerificationReport) {
    for c in &report.checks {
        let p = c.p_value.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
        println!("{:<20} {:<12} stat {:<11.4e} thr {:<9.3e} p {p}  {}", c.name, c.status.name(), c.statistic, c.threshold, c.note);
    }
    println!("outcome: {}", report.outcome().name());
}
