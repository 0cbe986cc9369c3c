//! Time-reversed model: drift, scale and speed, jump-rate constants and jump-target laws.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{ModelSpec, CRITICAL_TOL};
use crate::quad::PanelGrid;
use crate::stationary::{Layout, StationaryDensity};

/// Number of innermost nodes per side where the drift switches to its asymptotic form.
pub const INNER_NODES: usize = 10;
/// Densities below this are not divided by.
pub const POSITIVITY_FLOOR: f64 = 1e-280;
/// Largest distance from a boundary used by the endpoint extrapolations.
pub const EXTRAPOLATION_WINDOW: f64 = 1e-4;

/// Extended nonnegative rate constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpRate {
    Zero,
    Finite(f64),
    Infinite,
}

impl JumpRate {
    pub fn tag(&self) -> &'static str {
        match self {
            JumpRate::Zero => "zero",
            JumpRate::Finite(_) => "finite",
            JumpRate::Infinite => "infinite",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            JumpRate::Finite(r) => Some(*r),
            _ => None,
        }
    }
}

/// Limit of the reversed scale function at a boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleLimit {
    Finite(f64),
    /// `-inf` at 0, `+inf` at 1.
    Infinite,
}

impl ScaleLimit {
    pub fn is_finite(&self) -> bool {
        matches!(self, ScaleLimit::Finite(_))
    }
}

#[derive(Debug, Clone)]
pub struct ReversedDrift {
    /// Reversed drift at the grid nodes.
    pub values: Vec<f64>,
    /// Endpoint limits extrapolated from the nodes nearest each boundary.
    pub limits: [f64; 2],
    pub limit_error: [f64; 2],
    /// `mu - 2 J / pi` with the flux `J` obtained by integrating `pi`, at the grid nodes.
    pub flux_route: Vec<f64>,
    /// Largest `|values - flux_route| / (1 + |values|)` outside the innermost nodes.
    pub crosscheck: f64,
    /// Distances below which the asymptotic form is used.
    pub inner: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ScaleSpeed {
    /// `ln S'` at the grid nodes.
    pub log_scale_density: Vec<f64>,
    /// `S`, anchored at `S(1/2) = 0`.
    pub scale: Vec<f64>,
    /// Speed density `1 / (v S')`.
    pub speed: Vec<f64>,
    pub limits: [ScaleLimit; 2],
    /// Local exponent `e` of `S' ~ |p - i|^(-e)` at the innermost nodes.
    pub exponent: [f64; 2],
    /// Largest deviation of `ln S'` from `int 2 mu / v + 2 ln((v pi)(1/2) / (v pi))`.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: JumpRate,
    /// Spread of the extrapolated value between fitting windows (finite rates only).
    pub error: f64,
    /// Log-slope of `m pi^-1` against `ln(1/q)` near the boundary and two decades further in.
    pub growth: [f64; 2],
    pub reliable: bool,
}

fn panel_grid(pi: &StationaryDensity) -> Result<Arc<PanelGrid>> {
    match &pi.layout {
        Layout::Panels(g) => Ok(g.clone()),
        Layout::Cells { .. } => Err(Error::InvalidParameter(
            "the reversed model needs a density on a panel grid (shooting or closed form)".into(),
        )),
    }
}

/// Side of the node and its distance to that side's boundary.
#[inline]
fn side(pi: &StationaryDensity, k: usize) -> (usize, f64) {
    if pi.grid[k] <= 0.5 {
        (0, pi.grid[k])
    } else {
        (1, pi.mirror[k])
    }
}

/// `(v, mu)` at node `k`, with `mu` in the `p` orientation.
fn coefs(model: &ModelSpec<f64>, pi: &StationaryDensity, k: usize) -> (f64, f64) {
    let (i, q) = side(pi, k);
    let (v, m) = model.inward(i, q);
    (v, if i == 0 { m } else { -m })
}

/// Probability flux `mu pi - (v pi / 2)'` at distance `q` from boundary `i`, from `J' = -lambda pi`.
fn flux_from_mass(model: &ModelSpec<f64>, pi: &StationaryDensity, i: usize, q: f64) -> f64 {
    let lam = model.lambda;
    if i == 0 {
        lam * (pi.kappa0 - pi.mass_near(0, q))
    } else {
        lam * (pi.mass_near(1, q) - pi.kappa1)
    }
}

fn asymptotic_drift(model: &ModelSpec<f64>, pi: &StationaryDensity, i: usize, q: f64) -> f64 {
    let (_, m) = model.inward(i, q);
    let mu = if i == 0 { m } else { -m };
    let dens = pi.eval_dist(i, q);
    if dens > POSITIVITY_FLOOR {
        mu - 2.0 * flux_from_mass(model, pi, i, q) / dens
    } else {
        mu
    }
}

fn dedup_exponents(mut e: Vec<f64>) -> Vec<f64> {
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    e
}

/// Weighted least-squares extrapolation to `q -> 0` with basis `1, basis(q)...`; returns the
/// constant term for the full window and for a narrower window.
fn extrapolate(
    q: &[f64],
    y: &[f64],
    w: &[f64],
    basis: &dyn Fn(f64) -> Vec<f64>,
    narrow: f64,
) -> Option<(f64, f64)> {
    let fit = |limit: f64| {
        let idx: Vec<usize> = (0..q.len()).filter(|&k| q[k] <= limit).collect();
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&k| {
                let mut r = vec![1.0];
                r.extend(basis(q[k]));
                r
            })
            .collect();
        let b: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
        let ww: Vec<f64> = idx.iter().map(|&k| w[k]).collect();
        lstsq(&rows, &b, &ww).map(|(c, _)| c[0])
    };
    let wide = fit(f64::INFINITY)?;
    let nar = fit(narrow).unwrap_or(wide);
    Some((wide, (wide - nar).abs()))
}

/// Nodes on side `i` within `[lo, hi]` of the boundary, as (node index, distance).
fn window(pi: &StationaryDensity, i: usize, lo: f64, hi: f64) -> Vec<(usize, f64)> {
    (0..pi.len()).map(|k| (k, pi.dist(k, i))).filter(|&(_, q)| q >= lo && q <= hi).collect()
}

/// Reversed drift `-mu + (v pi)' / pi` by panel differentiation of `v pi`, with the asymptotic
/// form `mu - 2 J / pi` on the innermost nodes and endpoint limits by extrapolation.
pub fn reversed_drift(model: &ModelSpec<f64>, pi: &StationaryDensity) -> Result<ReversedDrift> {
    let grid = panel_grid(pi)?;
    let n = pi.len();
    let inner = [pi.grid[INNER_NODES - 1], pi.mirror[n - INNER_NODES]];
    let mut vpi = vec![0.0; n];
    let mut mus = vec![0.0; n];
    for k in 0..n {
        let (v, m) = coefs(model, pi, k);
        vpi[k] = v * pi.values[k];
        mus[k] = m;
    }
    let d = grid.differentiate(&vpi);
    let mut values = vec![0.0; n];
    let mut flux_route = vec![0.0; n];
    let mut crosscheck: f64 = 0.0;
    for k in 0..n {
        let (i, q) = side(pi, k);
        let dens = pi.values[k];
        let j = flux_from_mass(model, pi, i, q);
        flux_route[k] = if dens > POSITIVITY_FLOOR { mus[k] - 2.0 * j / dens } else { mus[k] };
        if q <= inner[i] || dens <= POSITIVITY_FLOOR {
            values[k] = flux_route[k];
        } else {
            values[k] = -mus[k] + d[k] / dens;
            crosscheck = crosscheck.max((values[k] - flux_route[k]).abs() / (1.0 + values[k].abs()));
        }
    }

    let mut limits = [0.0; 2];
    let mut limit_error = [0.0; 2];
    for i in 0..2 {
        let t = model.taylor[i];
        let pts = window(pi, i, 0.0, EXTRAPOLATION_WINDOW);
        let q: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let y: Vec<f64> = pts.iter().map(|p| values[p.0]).collect();
        let w = vec![1.0; q.len()];
        let beta = model.beta(i);
        let jumps = model.lambda > 0.0 && model.jump_reach[i];
        let basis: Box<dyn Fn(f64) -> Vec<f64>> = if !jumps {
            Box::new(|x: f64| vec![x, x * x])
        } else if (t.v1 - 2.0 * t.m0).abs() < CRITICAL_TOL {
            Box::new(|x: f64| {
                let l = 1.0 / (1.0 / x).ln();
                vec![l, l * l, l * l * l, x]
            })
        } else if beta < 0.0 {
            let e = dedup_exponents(vec![-beta, -2.0 * beta, 1.0]);
            Box::new(move |x: f64| e.iter().map(|&p| x.powf(p)).collect())
        } else if (beta - 1.0).abs() < 1e-3 {
            Box::new(|x: f64| vec![x, x * x.ln()])
        } else {
            let e = dedup_exponents(vec![1.0, beta.min(2.0)]);
            Box::new(move |x: f64| e.iter().map(|&p| x.powf(p)).collect())
        };
        let (lim, err) = extrapolate(&q, &y, &w, basis.as_ref(), 1e-6)
            .ok_or(Error::NonConvergence { stage: "reversed drift limit", detail: format!("boundary {i}") })?;
        limits[i] = lim;
        limit_error[i] = err;
    }
    Ok(ReversedDrift { values, limits, limit_error, flux_route, crosscheck, inner })
}

/// `int_{1/2}^{x_k} g` at every node, accumulated outward from the midpoint.
fn outward_integral(grid: &PanelGrid, g: &[f64]) -> Vec<f64> {
    let n = grid.order();
    let rule = &grid.rule;
    let mut out = vec![0.0; g.len()];
    let totals = grid.panel_totals(g);
    let mid = grid.panels.partition_point(|pn| pn.b <= 0.5 + 1e-15);
    let mut acc = 0.0;
    for p in (0..mid).rev() {
        let pn = grid.panels[p];
        let h = 0.5 * pn.width;
        for i in 0..n {
            let c: f64 = (0..n).map(|j| rule.cumint[i][j] * g[pn.start + j]).sum::<f64>() * h;
            out[pn.start + i] = -(acc + totals[p] - c);
        }
        acc += totals[p];
    }
    acc = 0.0;
    for p in mid..grid.panels.len() {
        let pn = grid.panels[p];
        let h = 0.5 * pn.width;
        for i in 0..n {
            let c: f64 = (0..n).map(|j| rule.cumint[i][j] * g[pn.start + j]).sum::<f64>() * h;
            out[pn.start + i] = acc + c;
        }
        acc += totals[p];
    }
    out
}

/// Least-squares slope of `y` against `ln q` over the given points.
fn log_slope(q: &[f64], y: &[f64]) -> f64 {
    let rows: Vec<Vec<f64>> = q.iter().map(|&x| vec![1.0, x.ln()]).collect();
    lstsq(&rows, y, &vec![1.0; q.len()]).map_or(f64::NAN, |(c, _)| c[1])
}

/// Exponents `e` of `S' ~ q^-e` at least this close to 1 mark a divergent scale function.
pub const SCALE_DIVERGENCE_MARGIN: f64 = 1e-3;

/// Scale function and speed density of the reversed diffusion.
pub fn scale_speed(model: &ModelSpec<f64>, pi: &StationaryDensity, drift: &ReversedDrift) -> Result<ScaleSpeed> {
    let grid = panel_grid(pi)?;
    let n = pi.len();
    let mut g = vec![0.0; n];
    let mut ga = vec![0.0; n];
    let mut ln_vpi = vec![0.0; n];
    let mut ln_v = vec![0.0; n];
    for k in 0..n {
        let (v, m) = coefs(model, pi, k);
        g[k] = 2.0 * drift.values[k] / v;
        ga[k] = 2.0 * m / v;
        ln_v[k] = v.ln();
        ln_vpi[k] = v.ln() + pi.values[k].ln();
    }
    let neg = outward_integral(&grid, &g);
    let log_scale_density: Vec<f64> = neg.iter().map(|x| -x).collect();
    let a = outward_integral(&grid, &ga);
    let half = (0.25 * pi.eval(0.5)).ln();
    let mut identity_residual: f64 = 0.0;
    for k in 0..n {
        if pi.values[k] > POSITIVITY_FLOOR {
            let id = a[k] + 2.0 * (half - ln_vpi[k]);
            identity_residual = identity_residual.max((id - log_scale_density[k]).abs());
        }
    }
    let sd: Vec<f64> = log_scale_density.iter().map(|x| x.exp()).collect();
    let scale = outward_integral(&grid, &sd);
    let speed: Vec<f64> = (0..n).map(|k| (-ln_v[k] - log_scale_density[k]).exp()).collect();

    let lo = grid.lo();
    let mut limits = [ScaleLimit::Infinite; 2];
    let mut exponent = [0.0; 2];
    for i in 0..2 {
        let pts = window(pi, i, lo, 100.0 * lo);
        let q: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let y: Vec<f64> = pts.iter().map(|p| log_scale_density[p.0]).collect();
        let e = -log_slope(&q, &y);
        exponent[i] = e;
        if e < 1.0 - SCALE_DIVERGENCE_MARGIN {
            let edge = if i == 0 { 0 } else { n - 1 };
            let qe = pi.dist(edge, i);
            let tail = sd[edge] * qe / (1.0 - e);
            let s = if i == 0 { scale[edge] - tail } else { scale[edge] + tail };
            limits[i] = if s.is_finite() { ScaleLimit::Finite(s) } else { ScaleLimit::Infinite };
        }
    }
    Ok(ScaleSpeed { log_scale_density, scale, speed, limits, exponent, identity_residual })
}

/// Growth slopes above this, sustained toward the boundary, classify a rate as infinite.
pub const RATE_GROWTH_LIMIT: f64 = 0.015;

/// Rate constants `lim lambda kappa_i m(p) / pi(p)` at both boundaries.
pub fn jump_rates(model: &ModelSpec<f64>, pi: &StationaryDensity, ss: &ScaleSpeed) -> [RateEstimate; 2] {
    let lo = match &pi.layout {
        Layout::Panels(g) => g.lo(),
        Layout::Cells { faces, .. } => faces[1],
    };
    let one = |i: usize| {
        let lk = model.lambda * pi.kappa(i);
        if model.lambda == 0.0 || !model.jump_reach[i] || lk <= 0.0 {
            return RateEstimate { rate: JumpRate::Zero, error: 0.0, growth: [0.0; 2], reliable: true };
        }
        let pts = window(pi, i, lo, EXTRAPOLATION_WINDOW);
        let q: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let ln_rho: Vec<f64> = pts
            .iter()
            .map(|&(k, _)| lk.ln() + ss.speed[k].ln() - pi.values[k].ln())
            .collect();
        let slope_over = |a: f64, b: f64| {
            let idx: Vec<usize> = (0..q.len()).filter(|&k| q[k] >= a && q[k] <= b).collect();
            let qq: Vec<f64> = idx.iter().map(|&k| q[k]).collect();
            let yy: Vec<f64> = idx.iter().map(|&k| ln_rho[k]).collect();
            -log_slope(&qq, &yy)
        };
        let growth = [slope_over(lo, 100.0 * lo), slope_over(1e-8, 1e-6)];
        if growth[0] > RATE_GROWTH_LIMIT && growth[0] > 0.5 * growth[1] {
            return RateEstimate { rate: JumpRate::Infinite, error: 0.0, growth, reliable: true };
        }
        let rho: Vec<f64> = ln_rho.iter().map(|x| x.exp()).collect();
        let w: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
        let beta = model.beta(i);
        let exps = if beta < 0.0 { dedup_exponents(vec![-beta, -2.0 * beta, 1.0]) } else { vec![0.5, 1.0] };
        let basis = move |x: f64| exps.iter().map(|&p| x.powf(p)).collect::<Vec<f64>>();
        match extrapolate(&q, &rho, &w, &basis, 1e-6) {
            Some((r, err)) if r.is_finite() => RateEstimate {
                rate: JumpRate::Finite(r),
                error: err,
                growth,
                reliable: r > 0.0 && err < 1e-2 * r,
            },
            _ => RateEstimate { rate: JumpRate::Finite(f64::NAN), error: f64::INFINITY, growth, reliable: false },
        }
    };
    [one(0), one(1)]
}

/// Inverse-CDF sampler for a law `w(q) pi(q) dq / int w pi`.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    /// Boundary whose jump-target law this is; `None` for `pi` itself.
    pub boundary: Option<usize>,
    /// Normalizing mass `int w_i pi`.
    pub mass: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// Quantiles at `u = k / KNOTS`.
    knots: Vec<f64>,
    /// `(ln u, ln q)` for `u <= 1 / KNOTS`, decreasing; `q` the distance from 0.
    low: Vec<(f64, f64)>,
    /// `(ln (1 - u), ln q)` for `1 - u <= 1 / KNOTS`, decreasing; `q` the distance from 1.
    high: Vec<(f64, f64)>,
    pi: Arc<StationaryDensity>,
    weighted: Vec<f64>,
    totals: Vec<f64>,
    /// Weight `w_i` at each boundary, applied to the density tails.
    tail_weight: [f64; 2],
}

/// Number of quantile intervals.
pub const KNOTS: usize = 4096;
const TAIL_LEVELS: usize = 64;
/// Knot intervals at each end interpolated as local power laws.
const EDGE_INTERVALS: usize = 16;

impl DensitySampler {
    fn grid(&self) -> &PanelGrid {
        match &self.pi.layout {
            Layout::Panels(g) => g,
            Layout::Cells { .. } => unreachable!(),
        }
    }

    /// Unnormalized target mass within distance `q` of boundary `j`.
    fn mass_near(&self, j: usize, q: f64) -> f64 {
        let g = self.grid();
        let t = self.pi.tails[j];
        if q <= g.lo() {
            return self.tail_weight[j] * t.mass_to(q);
        }
        self.tail_weight[j] * t.mass() + g.integral_near(&self.weighted, &self.totals, j, q)
    }

    /// Target distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else if x <= 0.5 {
            self.mass_near(0, x) / self.mass
        } else {
            1.0 - self.mass_near(1, 1.0 - x) / self.mass
        }
    }

    /// Distance `q` from boundary `j` at which the target mass within `q` equals `m`.
    fn invert_near(&self, j: usize, m: f64) -> f64 {
        let g = self.grid();
        let t = self.pi.tails[j];
        let tail = self.tail_weight[j] * t.mass();
        if m <= tail {
            if t.k <= 0.0 || self.tail_weight[j] <= 0.0 {
                return 0.0;
            }
            let e = t.gamma + 1.0;
            return (m * e / (self.tail_weight[j] * t.k)).powf(1.0 / e);
        }
        let (mut a, mut b) = (g.lo(), 0.5);
        for _ in 0..200 {
            let c = if b / a > 4.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
            if self.mass_near(j, c) < m {
                a = c;
            } else {
                b = c;
            }
            if b - a <= 1e-15 * b {
                break;
            }
        }
        0.5 * (a + b)
    }

    /// Quantile function.
    pub fn quantile(&self, u: f64) -> f64 {
        let half = self.mass_near(0, 0.5);
        let m = u * self.mass;
        if m <= half {
            self.invert_near(0, m)
        } else {
            1.0 - self.invert_near(1, (1.0 - u) * self.mass)
        }
    }

    /// Draws one target state in (0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        while u == 0.0 {
            u = rng.random();
        }
        self.sample_at(u)
    }

    /// Table lookup for a uniform variate `u` in (0, 1); the result lies in the open interval.
    pub fn sample_at(&self, u: f64) -> f64 {
        self.lookup(u).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }

    fn lookup(&self, u: f64) -> f64 {
        let n = KNOTS as f64;
        let s = u * n;
        if s < 1.0 {
            return interpolate_tail(&self.low, u.ln()).min(0.5);
        }
        if s > n - 1.0 {
            return 1.0 - interpolate_tail(&self.high, (1.0 - u).ln()).min(0.5);
        }
        let k = (s.floor() as usize).min(KNOTS - 1);
        let f = s - k as f64;
        if k < EDGE_INTERVALS {
            let (u0, u1) = (k as f64 / n, (k + 1) as f64 / n);
            return power_interpolate(u0, u1, self.knots[k], self.knots[k + 1], u);
        }
        if k >= KNOTS - EDGE_INTERVALS {
            let (u0, u1) = ((KNOTS - k) as f64 / n, (KNOTS - k - 1) as f64 / n);
            let (a, b) = (1.0 - self.knots[k], 1.0 - self.knots[k + 1]);
            return 1.0 - power_interpolate(u0, u1, a, b, 1.0 - u);
        }
        self.knots[k] + f * (self.knots[k + 1] - self.knots[k])
    }
}

/// Interpolation of `ln q` linearly in `ln u` between `(u0, q0)` and `(u1, q1)`.
fn power_interpolate(u0: f64, u1: f64, q0: f64, q1: f64, u: f64) -> f64 {
    if !(q0 > 0.0 && q1 > 0.0) {
        return q0 + (u - u0) / (u1 - u0) * (q1 - q0);
    }
    let f = (u / u0).ln() / (u1 / u0).ln();
    (q0.ln() + f * (q1 / q0).ln()).exp()
}

/// Piecewise-linear interpolation of `ln q` in `ln u` over a decreasing table, with a power-law
/// continuation past its end.
fn interpolate_tail(table: &[(f64, f64)], lu: f64) -> f64 {
    let m = table.len();
    if lu <= table[m - 1].0 {
        let (a, b) = (table[m - 2], table[m - 1]);
        let slope = (b.1 - a.1) / (b.0 - a.0);
        return (b.1 + slope * (lu - b.0)).exp();
    }
    let j = table.partition_point(|e| e.0 > lu).clamp(1, m - 1);
    let (a, b) = (table[j - 1], table[j]);
    let f = (lu - a.0) / (b.0 - a.0);
    (a.1 + f * (b.1 - a.1)).exp()
}

/// Jump-target law `w_i pi / kappa_i` of the reversed process leaving boundary `i`.
pub type JumpTargetSampler = DensitySampler;

/// Sampler for post-jump states of the reversed process leaving boundary `i`.
pub fn jump_target_sampler(pi: Arc<StationaryDensity>, model: &ModelSpec<f64>, i: usize) -> Result<JumpTargetSampler> {
    if pi.kappa(i) <= 0.0 || !model.jump_reach[i] || model.lambda == 0.0 {
        return Err(Error::NoJumps { boundary: i });
    }
    let tails = [model.w(i, 0.0), model.w(i, 1.0)];
    build_sampler(pi, Some(i), &|p| model.w(i, p), tails)
}

/// Sampler for the stationary law itself.
pub fn stationary_sampler(pi: Arc<StationaryDensity>) -> Result<DensitySampler> {
    build_sampler(pi, None, &|_| 1.0, [1.0, 1.0])
}

fn build_sampler(
    pi: Arc<StationaryDensity>,
    boundary: Option<usize>,
    weight: &dyn Fn(f64) -> f64,
    tail_weight: [f64; 2],
) -> Result<DensitySampler> {
    let grid = panel_grid(&pi)?;
    let n = pi.len();
    let weighted: Vec<f64> = (0..n).map(|k| weight(pi.grid[k]) * pi.values[k]).collect();
    let totals = grid.panel_totals(&weighted);
    let mut s = DensitySampler {
        boundary,
        mass: 1.0,
        mean: 0.0,
        second_moment: 0.0,
        knots: Vec::new(),
        low: Vec::new(),
        high: Vec::new(),
        pi: pi.clone(),
        weighted,
        totals,
        tail_weight,
    };
    let mass = s.mass_near(0, 0.5) + s.mass_near(1, 0.5);
    if !(mass > 0.0) {
        return Err(Error::NoJumps { boundary: boundary.unwrap_or(0) });
    }
    s.mass = mass;
    let t = pi.tails;
    let moment = |f: &dyn Fn(f64) -> f64| {
        let body: f64 = (0..n).map(|k| pi.weights[k] * s.weighted[k] * f(pi.grid[k])).sum();
        body + tail_weight[0] * t[0].mass() * f(t[0].mean_point())
            + tail_weight[1] * t[1].mass() * f(1.0 - t[1].mean_point())
    };
    s.mean = moment(&|x| x) / mass;
    s.second_moment = moment(&|x| x * x) / mass;

    let mut knots = vec![0.0; KNOTS + 1];
    knots[KNOTS] = 1.0;
    for (k, slot) in knots.iter_mut().enumerate().take(KNOTS).skip(1) {
        *slot = s.quantile(k as f64 / KNOTS as f64);
    }
    let top = 1.0 / KNOTS as f64;
    let mut low = Vec::with_capacity(TAIL_LEVELS);
    let mut high = Vec::with_capacity(TAIL_LEVELS);
    for j in 0..TAIL_LEVELS {
        let u = top * 0.5f64.powi(j as i32);
        let ql = s.invert_near(0, u * mass);
        let qh = s.invert_near(1, u * mass);
        if ql > 0.0 {
            low.push((u.ln(), ql.ln()));
        }
        if qh > 0.0 {
            high.push((u.ln(), qh.ln()));
        }
    }
    if low.len() < 2 || high.len() < 2 {
        return Err(Error::Internal(format!("sampler tail table is degenerate ({boundary:?})")));
    }
    knots[0] = low[0].1.exp();
    knots[KNOTS] = 1.0 - high[0].1.exp();
    s.knots = knots;
    s.low = low;
    s.high = high;
    Ok(s)
}

/// The reversed jump-diffusion.
#[derive(Clone)]
pub struct ReversedModel {
    pub model: ModelSpec<f64>,
    pub pi: Arc<StationaryDensity>,
    pub drift: ReversedDrift,
    pub scale_speed: ScaleSpeed,
    pub rates: [RateEstimate; 2],
    pub kappa: [f64; 2],
    pub targets: [Option<Arc<JumpTargetSampler>>; 2],
    /// Constant added to the drift everywhere (negative control).
    pub drift_perturbation: f64,
    grid: Arc<PanelGrid>,
}

impl std::fmt::Debug for ReversedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReversedModel")
            .field("model", &self.model.label)
            .field("rates", &self.rates)
            .field("kappa", &self.kappa)
            .field("drift_limits", &self.drift.limits)
            .field("scale_limits", &self.scale_speed.limits)
            .finish()
    }
}

impl ReversedModel {
    /// Reversed drift at `x`, including any perturbation.
    pub fn mu_tilde(&self, x: f64) -> f64 {
        let (i, q) = if x > 0.5 { (1, 1.0 - x) } else { (0, x) };
        let base = if q <= self.drift.inner[i] {
            asymptotic_drift(&self.model, &self.pi, i, q)
        } else {
            self.grid.interpolate_dist(&self.drift.values, i, q)
        };
        base + self.drift_perturbation
    }

    pub fn grid(&self) -> &PanelGrid {
        &self.grid
    }

    pub fn with_drift_perturbation(mut self, delta: f64) -> Self {
        self.drift_perturbation = delta;
        self
    }

    /// Whether boundary `i` is reachable by the forward process, diffusively or by jumps.
    pub fn forward_accessible(&self, i: usize) -> bool {
        let t = self.model.taylor[i];
        (self.model.lambda > 0.0 && self.model.jump_reach[i]) || 2.0 * t.m0 < t.v1
    }
}

/// Assembles the reversed model from `pi` (which must carry kappa).
pub fn reverse_model(model: &ModelSpec<f64>, pi: Arc<StationaryDensity>) -> Result<ReversedModel> {
    let grid = panel_grid(&pi)?;
    let drift = reversed_drift(model, &pi)?;
    let scale_speed = scale_speed(model, &pi, &drift)?;
    let rates = jump_rates(model, &pi, &scale_speed);
    let mut targets = [None, None];
    for (i, slot) in targets.iter_mut().enumerate() {
        if rates[i].rate != JumpRate::Zero {
            *slot = Some(Arc::new(jump_target_sampler(pi.clone(), model, i)?));
        }
    }
    Ok(ReversedModel {
        model: model.clone(),
        kappa: [pi.kappa0, pi.kappa1],
        pi,
        drift,
        scale_speed,
        rates,
        targets,
        drift_perturbation: 0.0,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_interpolation_is_power_law() {
        let table: Vec<(f64, f64)> = (0..5).map(|j| {
            let u = 0.5f64.powi(j);
            (u.ln(), 2.0 * u.ln() + 0.3)
        }).collect();
        let u: f64 = 0.2;
        assert!((interpolate_tail(&table, u.ln()).ln() - (2.0 * u.ln() + 0.3)).abs() < 1e-12);
        let u: f64 = 1e-5;
        assert!((interpolate_tail(&table, u.ln()).ln() - (2.0 * u.ln() + 0.3)).abs() < 1e-9);
    }

    #[test]
    fn exponents_are_deduplicated() {
        assert_eq!(dedup_exponents(vec![0.5, 1.0, 1.0]), vec![0.5, 1.0]);
    }
}
