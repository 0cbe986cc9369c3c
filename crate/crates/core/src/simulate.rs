//! Euler-Maruyama simulation of the forward, epsilon-regularized and reversed jump-diffusions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::reversal::{DensitySampler, JumpRate, ReversedModel};
use crate::Model;

/// Resolution of jump times within one step.
pub const TICKS_PER_STEP: u64 = 1 << 32;
/// Distance at which a clamped state counts as sitting on a boundary.
pub const HIT_TOL: f64 = 1e-12;
/// Width of the boundary zone tracked by [`Path::near_time`].
pub const NEAR_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Forward,
    ForwardEps { eps: f64 },
    Backward { eps: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Forward => "forward",
            Scheme::ForwardEps { .. } => "forward_eps",
            Scheme::Backward { .. } => "backward",
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            Scheme::Forward => None,
            Scheme::ForwardEps { eps } | Scheme::Backward { eps } => Some(eps),
        }
    }
}

/// A jump at `tick / TICKS_PER_STEP` steps from the start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub tick: u64,
    pub from: f64,
    pub to: f64,
}

/// States on the uniform grid `k * record_every * dt` plus exact jump events.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub dt: f64,
    pub record_every: u64,
    pub n_steps: u64,
    pub states: Vec<f64>,
    pub events: Vec<JumpEvent>,
    pub seed: u64,
    pub replicate: u64,
    pub scheme: Scheme,
    /// Produced by [`reverse_path`] an odd number of times.
    pub reversed: bool,
    /// Steps ending within `HIT_TOL` of each boundary.
    pub dwell_steps: [u64; 2],
    /// Time, counted per step end, within `NEAR_WIDTH` of each boundary.
    pub near_time: [f64; 2],
    pub warnings: Vec<String>,
}

impl Path {
    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn record_dt(&self) -> f64 {
        self.record_every as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as u64 * self.record_every) as f64 * self.dt
    }

    pub fn event_time(&self, e: &JumpEvent) -> f64 {
        (e.tick as f64 / TICKS_PER_STEP as f64) * self.dt
    }

    /// `flags[k]` marks a jump in `(t_{k-1}, t_k]` (`flags[0]`: a jump at time 0).
    pub fn jump_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.states.len()];
        let per = self.record_every * TICKS_PER_STEP;
        let last = flags.len() - 1;
        for e in &self.events {
            let k = e.tick.div_ceil(per) as usize;
            flags[k.min(last)] = true;
        }
        flags
    }

    /// Recorded states within `HIT_TOL` of boundary `i`.
    pub fn boundary_dwell(&self, i: usize) -> usize {
        self.states.iter().filter(|&&x| dist(x, i) <= HIT_TOL).count()
    }

    /// Time spent within `width` of boundary `i`, from the recorded states.
    pub fn time_near(&self, i: usize, width: f64) -> f64 {
        self.states.iter().skip(1).filter(|&&x| dist(x, i) < width).count() as f64 * self.record_dt()
    }
}

#[derive(Default)]
struct Occupancy {
    dwell: [u64; 2],
    near: [u64; 2],
}

impl Occupancy {
    #[inline]
    fn record(&mut self, x: f64) {
        for i in 0..2 {
            let q = dist(x, i);
            if q < NEAR_WIDTH {
                self.near[i] += 1;
                if q <= HIT_TOL {
                    self.dwell[i] += 1;
                }
            }
        }
    }

    fn near_time(&self, dt: f64) -> [f64; 2] {
        [self.near[0] as f64 * dt, self.near[1] as f64 * dt]
    }
}

#[inline]
fn dist(x: f64, i: usize) -> f64 {
    if i == 0 {
        x
    } else {
        1.0 - x
    }
}

/// Step refinement near the boundaries: the step is halved until the diffusive displacement
/// `sqrt(v'(i) q h)` is below `sqrt(layer) q`, at most `max_level` times. Where the step is
/// coarser than `sqrt(cir_layer) q`, `boundary_cir` replaces the Euler step by the exact
/// transition of the square-root diffusion with coefficients frozen at the current state. An
/// outward drift is applied as a shift after the driftless transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub layer: f64,
    pub max_level: u32,
    pub boundary_cir: bool,
    pub cir_layer: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Refinement { layer: 0.1, max_level: 6, boundary_cir: true, cir_layer: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub t_end: f64,
    pub dt: f64,
    pub record_every: u64,
    pub refine: Option<Refinement>,
}

impl SimParams {
    pub fn new(t_end: f64, dt: f64) -> Self {
        SimParams { t_end, dt, record_every: 1, refine: Some(Refinement::default()) }
    }

    pub fn recording_every(mut self, k: u64) -> Self {
        self.record_every = k;
        self
    }

    pub fn without_refinement(mut self) -> Self {
        self.refine = None;
        self
    }

    /// Number of steps; rejects horizons that are not a whole number of recording intervals.
    pub fn steps(&self) -> Result<u64> {
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt < self.t_end) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("need 0 < dt < T (dt = {}, T = {})", self.dt, self.t_end)));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end || n > 1e15 {
            return Err(Error::InvalidParameter(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        let n = n as u64;
        if self.record_every == 0 || n % self.record_every != 0 {
            return Err(Error::InvalidParameter(format!(
                "record_every = {} must divide the {n} steps",
                self.record_every
            )));
        }
        if let Some(r) = self.refine {
            if !(r.layer > 0.0 && r.cir_layer > 0.0) || r.max_level > 30 {
                return Err(Error::InvalidParameter("refinement needs positive layers and max_level <= 30".into()));
            }
        }
        Ok(n)
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.dt > 1e-3 * self.t_end {
            w.push(format!("dt = {} exceeds 1e-3 T", self.dt));
        }
        w
    }
}

/// Independent random streams per (seed, replicate, purpose).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Increments = 0,
    Clock = 1,
    Targets = 2,
    Start = 3,
}

pub fn stream(seed: u64, replicate: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(replicate.wrapping_mul(4).wrapping_add(purpose as u64));
    r
}

/// Stationary starting state for a replicate.
pub fn draw_start(sampler: &DensitySampler, seed: u64, replicate: u64) -> f64 {
    sampler.sample(&mut stream(seed, replicate, Purpose::Start))
}

/// Runs `n` replicates in parallel, in replicate order.
pub fn run_replicates<F>(n: u64, f: F) -> Result<Vec<Path>>
where
    F: Fn(u64) -> Result<Path> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

struct Stepper<C> {
    coefs: C,
    vprime: [f64; 2],
    dt: f64,
    refine: Option<Refinement>,
    /// Boundaries whose hitting must be detected between grid points.
    watch: [bool; 2],
}

impl<C: Fn(f64) -> (f64, f64)> Stepper<C> {
    /// Substep length at `x`, as a power-of-two fraction of `dt` in units of `dt / 2^max_level`.
    fn units(&self, x: f64) -> u64 {
        let Some(r) = self.refine else { return 1 };
        let full = 1u64 << r.max_level;
        let (q, i) = if x <= 0.5 { (x, 0) } else { (1.0 - x, 1) };
        let hmax = r.layer * q / self.vprime[i].abs();
        if hmax >= self.dt {
            return full;
        }
        let k = (self.dt / hmax).log2().ceil().clamp(0.0, r.max_level as f64) as u32;
        full >> k
    }

    fn full_units(&self) -> u64 {
        self.refine.map_or(1, |r| 1u64 << r.max_level)
    }

    #[inline]
    fn em<R: Rng>(&self, x: f64, h: f64, rng: &mut R) -> f64 {
        let (v, mu) = (self.coefs)(x);
        if let Some(r) = self.refine {
            if r.boundary_cir {
                let (q, i) = if x <= 0.5 { (x, 0) } else { (1.0 - x, 1) };
                let vp = self.vprime[i].abs();
                let a = if i == 0 { mu } else { -mu };
                if h * vp > r.cir_layer * q {
                    let s2 = if q > 0.0 { v / q } else { vp };
                    let mut q1 = if a >= 0.0 { cir_step(q, a, s2, h, rng) } else { (cir_step(q, 0.0, s2, h, rng) + a * h).max(0.0) };
                    let delta = 4.0 * a / s2;
                    if self.watch[i] && q1 > 0.0 && delta > 0.0 && delta < 2.0 {
                        let scale = 4.0 / s2;
                        if rng.random::<f64>() < besq_bridge_hit(delta, scale * q, scale * q1, h) {
                            q1 = 0.0;
                        }
                    }
                    return if i == 0 { q1.min(1.0) } else { (1.0 - q1).max(0.0) };
                }
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        (x + mu * h + (v.max(0.0) * h).sqrt() * z).clamp(0.0, 1.0)
    }

    /// Finest substep used within `eps` of a boundary, against the layer width.
    fn resolves(&self, eps: f64) -> bool {
        let u = self.units(eps.min(0.5));
        let h = self.dt * u as f64 / self.full_units() as f64;
        let vp = self.vprime[0].abs().max(self.vprime[1].abs());
        (vp * eps * h).sqrt() <= 0.5 * eps
    }
}

/// Exact transition over `h` of `dq = a dt + sqrt(s2 q) dW` (`a >= 0`): a scaled noncentral
/// chi-square, sampled as a Poisson mixture of gamma laws.
fn cir_step<R: Rng>(q: f64, a: f64, s2: f64, h: f64, rng: &mut R) -> f64 {
    let c = 0.25 * s2 * h;
    let d = a / c * h;
    let nu = q / c;
    let n = if nu > 0.0 { Poisson::new(0.5 * nu).map_or(0.0, |p| p.sample(rng)) } else { 0.0 };
    let shape = 0.5 * d + n;
    if shape <= 0.0 {
        return 0.0;
    }
    let g: f64 = Gamma::new(shape, 1.0).map_or(shape, |g| g.sample(rng));
    2.0 * c * g
}

/// Probability that a squared Bessel bridge of dimension `delta` in (0, 2), from `x` to `y` over
/// time `t`, visits 0: `1 - I_{1-delta/2}(z) / I_{delta/2-1}(z)` with `z = sqrt(x y) / t`.
pub fn besq_bridge_hit(delta: f64, x: f64, y: f64, t: f64) -> f64 {
    let z = (x * y).sqrt() / t;
    if z > 18.0 {
        return 0.0;
    }
    let m = 1.0 - 0.5 * delta;
    let w = 0.25 * z * z;
    // sum_k w^k / (k! (nu + 1)_k)
    let series = |nu: f64| {
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..200 {
            term *= w / (k as f64 * (nu + k as f64));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    };
    let ratio = (0.5 * z).powf(2.0 * m) * gamma(1.0 - m) / gamma(1.0 + m) * series(m) / series(-m);
    (1.0 - ratio).clamp(0.0, 1.0)
}

fn check_state(x0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::InvalidParameter(format!("initial state {x0} outside [0, 1]")));
    }
    Ok(())
}

fn tick_at(step: u64, frac: f64) -> u64 {
    step * TICKS_PER_STEP + ((frac * TICKS_PER_STEP as f64) as u64).min(TICKS_PER_STEP - 1)
}

fn forward_impl(model: &Model, eps: Option<f64>, x0: f64, p: &SimParams, seed: u64, replicate: u64) -> Result<Path> {
    check_state(x0)?;
    let n = p.steps()?;
    if let Some(e) = eps {
        if !(e > 0.0 && e < 0.5) {
            return Err(Error::InvalidParameter(format!("eps = {e} outside (0, 1/2)")));
        }
    }
    let st = Stepper {
        coefs: |x: f64| (model.v(x), model.mu(x)),
        vprime: model.v_prime,
        dt: p.dt,
        refine: p.refine,
        watch: [false; 2],
    };
    let mut inc = stream(seed, replicate, Purpose::Increments);
    let mut clock = stream(seed, replicate, Purpose::Clock);
    let mut dest = stream(seed, replicate, Purpose::Targets);
    let lam = model.lambda;
    let draw_wait = |c: &mut ChaCha8Rng| if lam > 0.0 { c.sample::<f64, _>(Exp1) / lam } else { f64::INFINITY };
    let mut next = draw_wait(&mut clock);

    let full = st.full_units();
    let unit = p.dt / full as f64;
    let mut states = Vec::with_capacity((n / p.record_every + 1) as usize);
    let mut events = Vec::new();
    let mut x = x0;
    let mut occ = Occupancy::default();
    states.push(x);
    for step in 0..n {
        let t0 = step as f64 * p.dt;
        let mut used = 0u64;
        while used < full {
            let u = st.units(x).min(full - used);
            let (ta, tb) = (t0 + used as f64 * unit, t0 + (used + u) as f64 * unit);
            let mut t = ta;
            while next < tb {
                if next > t {
                    x = st.em(x, next - t, &mut inc);
                    t = next;
                }
                let up: f64 = dest.random();
                let to = match eps {
                    None => {
                        if up < model.w1(x) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Some(e) => {
                        let s: f64 = dest.random();
                        if up < model.w1(x) {
                            1.0 - e * s
                        } else {
                            e * s
                        }
                    }
                };
                events.push(JumpEvent { tick: tick_at(step, (next - t0) / p.dt), from: x, to });
                x = to;
                next += draw_wait(&mut clock);
            }
            if tb > t {
                x = st.em(x, tb - t, &mut inc);
            }
            used += u;
        }
        occ.record(x);
        if (step + 1) % p.record_every == 0 {
            states.push(x);
        }
    }
    Ok(Path {
        dt: p.dt,
        record_every: p.record_every,
        n_steps: n,
        states,
        events,
        seed,
        replicate,
        scheme: eps.map_or(Scheme::Forward, |eps| Scheme::ForwardEps { eps }),
        reversed: false,
        dwell_steps: occ.dwell,
        near_time: occ.near_time(p.dt),
        warnings: p.warnings(),
    })
}

/// Forward jump-diffusion: jumps at rate `lambda` to 1 with probability `w1(p)`, else to 0.
pub fn simulate_forward(model: &Model, x0: f64, p: &SimParams, seed: u64, replicate: u64) -> Result<Path> {
    forward_impl(model, None, x0, p, seed, replicate)
}

/// As [`simulate_forward`] with jump destinations uniform on `[0, eps)` or `(1 - eps, 1]`.
pub fn simulate_forward_eps(model: &Model, eps: f64, x0: f64, p: &SimParams, seed: u64, replicate: u64) -> Result<Path> {
    forward_impl(model, Some(eps), x0, p, seed, replicate)
}

/// Local-time window and negative-control switches for the reversed simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardOptions {
    pub eps: f64,
    /// Turns off the jump clock (and the immediate-jump rule) at each boundary.
    pub disable_clock: [bool; 2],
}

/// Default local-time window.
pub const DEFAULT_EPS: f64 = 1e-4;

impl Default for BackwardOptions {
    fn default() -> Self {
        BackwardOptions { eps: DEFAULT_EPS, disable_clock: [false; 2] }
    }
}

/// Reversed jump-diffusion: drift `mu_tilde`, variance `v`. At a boundary with finite rate the
/// clock accrues `dt / (eps pi(x))` while within `eps` of `i` and fires past an
/// `Exp(lambda kappa_i)` threshold; a boundary with infinite rate is left as soon as it is hit.
pub fn simulate_backward(
    rev: &ReversedModel,
    x0: f64,
    p: &SimParams,
    opts: &BackwardOptions,
    seed: u64,
    replicate: u64,
) -> Result<Path> {
    check_state(x0)?;
    let n = p.steps()?;
    let eps = opts.eps;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1/2)")));
    }
    let model = &rev.model;
    let pi = &rev.pi;
    let mut rates = [0.0; 2];
    let mut clock_on = [false; 2];
    let mut immediate = [false; 2];
    for i in 0..2 {
        rates[i] = model.lambda * rev.kappa[i];
        let tag = rev.rates[i].rate;
        if (tag == JumpRate::Zero) != (rates[i] <= 0.0) {
            return Err(Error::Internal(format!("rate tag {} at boundary {i} disagrees with lambda kappa = {}", tag.tag(), rates[i])));
        }
        if opts.disable_clock[i] || tag == JumpRate::Zero {
            continue;
        }
        if rev.targets[i].is_none() {
            return Err(Error::Internal(format!("no jump-target law at boundary {i}")));
        }
        immediate[i] = tag == JumpRate::Infinite;
        clock_on[i] = !immediate[i];
    }
    let st = Stepper {
        coefs: |x: f64| (model.v(x), rev.mu_tilde(x)),
        vprime: model.v_prime,
        dt: p.dt,
        refine: p.refine,
        watch: immediate,
    };
    let mut warnings = p.warnings();
    if clock_on.iter().any(|&c| c) && !st.resolves(eps) {
        warnings.push(format!("eps = {eps} does not resolve the boundary layer at dt = {}", p.dt));
    }

    let mut inc = stream(seed, replicate, Purpose::Increments);
    let mut clock = stream(seed, replicate, Purpose::Clock);
    let mut dest = stream(seed, replicate, Purpose::Targets);
    let thresholds = |c: &mut ChaCha8Rng| -> [f64; 2] {
        let mut r = [f64::INFINITY; 2];
        for i in 0..2 {
            if clock_on[i] {
                r[i] = c.sample::<f64, _>(Exp1) / rates[i];
            }
        }
        r
    };
    let mut thr = thresholds(&mut clock);
    let mut local = [0.0f64; 2];

    let full = st.full_units();
    let unit = p.dt / full as f64;
    let mut states = Vec::with_capacity((n / p.record_every + 1) as usize);
    let mut events = Vec::new();
    let mut x = x0;
    let mut occ = Occupancy::default();
    for i in 0..2 {
        if immediate[i] && dist(x, i) <= HIT_TOL {
            let to = rev.targets[i].as_ref().unwrap().sample(&mut dest);
            events.push(JumpEvent { tick: 0, from: i as f64, to });
            x = to;
            thr = thresholds(&mut clock);
            break;
        }
    }
    states.push(x);
    for step in 0..n {
        let mut used = 0u64;
        while used < full {
            let u = st.units(x).min(full - used);
            let h = u as f64 * unit;
            for i in 0..2 {
                if clock_on[i] {
                    let q = dist(x, i);
                    if q < eps {
                        local[i] += h / (eps * pi.eval(x));
                    }
                }
            }
            x = st.em(x, h, &mut inc);
            used += u;
            for i in 0..2 {
                let fire = (clock_on[i] && local[i] >= thr[i]) || (immediate[i] && dist(x, i) <= HIT_TOL);
                if fire {
                    let to = rev.targets[i].as_ref().unwrap().sample(&mut dest);
                    let tick = step * TICKS_PER_STEP + used * (TICKS_PER_STEP / full);
                    events.push(JumpEvent { tick, from: i as f64, to });
                    x = to;
                    local = [0.0; 2];
                    thr = thresholds(&mut clock);
                    break;
                }
            }
        }
        occ.record(x);
        if (step + 1) % p.record_every == 0 {
            states.push(x);
        }
    }
    Ok(Path {
        dt: p.dt,
        record_every: p.record_every,
        n_steps: n,
        states,
        events,
        seed,
        replicate,
        scheme: Scheme::Backward { eps },
        reversed: false,
        dwell_steps: occ.dwell,
        near_time: occ.near_time(p.dt),
        warnings,
    })
}

/// Time reversal `t -> T - t` of a path; jump events `(t, a, b)` become `(T - t, b, a)`.
pub fn reverse_path(path: &Path) -> Path {
    let total = path.n_steps * TICKS_PER_STEP;
    let mut states = path.states.clone();
    states.reverse();
    let events = path
        .events
        .iter()
        .rev()
        .map(|e| JumpEvent { tick: total - e.tick, from: e.to, to: e.from })
        .collect();
    Path { states, events, reversed: !path.reversed, ..path.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::neutral;

    #[test]
    fn refinement_halves_near_boundaries() {
        let st = Stepper {
            coefs: |x: f64| (x * (1.0 - x), 0.0),
            vprime: [1.0, -1.0],
            dt: 1e-3,
            refine: Some(Refinement::default()),
            watch: [false; 2],
        };
        assert_eq!(st.units(0.5), 64);
        assert_eq!(st.units(0.9995), 2);
        assert_eq!(st.units(1e-9), 1);
    }

    #[test]
    fn square_root_step_has_exact_moments() {
        let (q, a, s2, h) = (2e-4, 0.3, 1.0, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| cir_step(q, a, s2, h, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // E = q + a h, Var = s2 q h + s2 a h^2 / 2
        let (em, ev) = (q + a * h, s2 * q * h + 0.5 * s2 * a * h * h);
        assert!((mean - em).abs() < 4.0 * (ev / n as f64).sqrt());
        assert!((var / ev - 1.0).abs() < 0.02);
        assert!(xs.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn bridge_hits_average_to_the_hitting_time_law() {
        // T0 of BESQ(delta) from x satisfies x / (2 T0) ~ Gamma(1 - delta / 2)
        use statrs::function::gamma::gamma_ur;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (delta, x, t) in [(1.6, 1.0, 0.4), (0.5, 2.0, 1.0), (1.0, 0.3, 1.0)] {
            let n = 200_000;
            // the exact step from q = x / 4 with s2 = 1 is the reflecting BESQ at y = 4 q1
            let hits: f64 = (0..n)
                .map(|_| {
                    let y = 4.0 * cir_step(0.25 * x, 0.25 * delta, 1.0, t, &mut rng);
                    besq_bridge_hit(delta, x, y, t)
                })
                .sum::<f64>()
                / n as f64;
            let exact = gamma_ur(1.0 - 0.5 * delta, x / (2.0 * t));
            println!("delta {delta} x {x}: {hits} vs {exact}");
            assert!((hits - exact).abs() < 4.0 * (exact * (1.0 - exact) / n as f64).sqrt());
        }
        assert_eq!(besq_bridge_hit(1.0, 1.0, 0.0, 1.0), 1.0);
        assert_eq!(besq_bridge_hit(1.0, 400.0, 400.0, 1.0), 0.0);
    }

    #[test]
    fn parameters_are_validated() {
        assert!(SimParams::new(1.0, 2.0).steps().is_err());
        assert!(SimParams::new(1.0, 0.3).steps().is_err());
        assert!(SimParams::new(1.0, 0.01).recording_every(3).steps().is_err());
        assert_eq!(SimParams::new(1.0, 0.01).recording_every(5).steps().unwrap(), 100);
        let m = neutral(0.5, 0.5, 1.0).unwrap();
        assert!(simulate_forward(&m, 1.5, &SimParams::new(1.0, 0.01), 1, 0).is_err());
    }

    #[test]
    fn flags_mark_the_interval_containing_each_jump() {
        let p = Path {
            dt: 0.1,
            record_every: 2,
            n_steps: 4,
            states: vec![0.5; 3],
            events: vec![
                JumpEvent { tick: 0, from: 0.0, to: 0.3 },
                JumpEvent { tick: 3 * TICKS_PER_STEP + 5, from: 0.2, to: 1.0 },
            ],
            seed: 0,
            replicate: 0,
            scheme: Scheme::Forward,
            reversed: false,
            dwell_steps: [0; 2],
            near_time: [0.0; 2],
            warnings: vec![],
        };
        assert_eq!(p.jump_flags(), vec![true, false, true]);
    }
}
