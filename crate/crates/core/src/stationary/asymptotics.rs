//! Leading-order behavior of the stationary density at each boundary.

use super::{Layout, StationaryDensity};
use crate::linalg::lstsq;
use crate::model::{ModelSpec, CRITICAL_TOL};

/// Which of the four boundary regimes applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticCase {
    /// accessible with jumps: `C q^beta + O(1)`
    Power,
    /// critical with jumps: `(2 lambda kappa / |v'|) ln(1/q)`
    Log,
    /// inaccessible with jumps: limit `2 lambda kappa / |2 mu - v'|`
    Constant,
    /// no jumps into this boundary: `C q^beta`
    PowerNoJump,
}

impl AsymptoticCase {
    pub fn name(self) -> &'static str {
        match self {
            AsymptoticCase::Power => "power",
            AsymptoticCase::Log => "log",
            AsymptoticCase::Constant => "constant",
            AsymptoticCase::PowerNoJump => "power_no_jump",
        }
    }

    /// Regime implied by the model coefficients at boundary `i`.
    pub fn for_boundary(model: &ModelSpec<f64>, i: usize) -> Self {
        let t = model.taylor[i];
        let margin = t.v1 - 2.0 * t.m0;
        if !model.jump_reach[i] {
            AsymptoticCase::PowerNoJump
        } else if margin.abs() < CRITICAL_TOL {
            AsymptoticCase::Log
        } else if margin > 0.0 {
            AsymptoticCase::Power
        } else {
            AsymptoticCase::Constant
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticDescriptor {
    pub case: AsymptoticCase,
    /// `(2 mu(i) - v'(i)) / v'(i)`.
    pub beta: f64,
    /// Exponent recovered by the fit (power cases), NaN otherwise.
    pub fitted_beta: f64,
    /// Fitted leading coefficient: `C`, the log prefactor, or the boundary limit.
    pub coefficient: f64,
    /// Predicted coefficient for the log and constant cases, NaN otherwise.
    pub predicted: f64,
    /// Relative RMS residual of the fit.
    pub fit_residual: f64,
    pub reliable: bool,
}

impl AsymptoticDescriptor {
    pub fn unset() -> Self {
        AsymptoticDescriptor {
            case: AsymptoticCase::PowerNoJump,
            beta: f64::NAN,
            fitted_beta: f64::NAN,
            coefficient: f64::NAN,
            predicted: f64::NAN,
            fit_residual: f64::NAN,
            reliable: false,
        }
    }

    /// Leading-order density at distance `q` from the boundary.
    pub fn leading(&self, q: f64) -> f64 {
        match self.case {
            AsymptoticCase::Power | AsymptoticCase::PowerNoJump => self.coefficient * q.powf(self.fitted_beta),
            AsymptoticCase::Log => self.coefficient * (1.0 / q).ln(),
            AsymptoticCase::Constant => self.coefficient,
        }
    }
}

/// Largest distance to the boundary used by the fits.
pub const FIT_WINDOW: f64 = 1e-3;
/// Relative RMS residual above which a fit is flagged unreliable.
pub const FIT_RESIDUAL_LIMIT: f64 = 1e-4;

fn window(pi: &StationaryDensity, i: usize) -> (Vec<f64>, Vec<f64>) {
    let skip = match pi.layout {
        Layout::Cells { .. } => 2,
        Layout::Panels(_) => 0,
    };
    let mut pts: Vec<(f64, f64)> = (0..pi.len())
        .map(|k| (pi.dist(k, i), pi.values[k]))
        .filter(|&(q, v)| q <= FIT_WINDOW && v > 0.0)
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let pts = &pts[skip.min(pts.len())..];
    (pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
}

fn fit(cols: &dyn Fn(f64) -> Vec<f64>, q: &[f64], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let a: Vec<Vec<f64>> = q.iter().map(|&x| cols(x)).collect();
    let w: Vec<f64> = y.iter().map(|v| 1.0 / v).collect();
    let (c, r) = lstsq(&a, y, &w)?;
    Some((c, r / (q.len() as f64).sqrt()))
}

fn fit_power(q: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let eval = |b: f64| -> f64 {
        fit(&|x: f64| vec![x.powf(b), 1.0, x.powf(b + 1.0), x], q, y).map_or(f64::INFINITY, |r| r.1)
    };
    let mut best = (f64::INFINITY, 0.0);
    let mut b = -0.995;
    while b < 0.0 {
        let r = eval(b);
        if r < best.0 {
            best = (r, b);
        }
        b += 0.01;
    }
    let (mut lo, mut hi) = ((best.1 - 0.01).max(-0.9995), (best.1 + 0.01).min(-1e-6));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if eval(m1) < eval(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let beta = 0.5 * (lo + hi);
    let (c, r) = fit(&|x: f64| vec![x.powf(beta), 1.0, x.powf(beta + 1.0), x], q, y)?;
    Some((beta, c[0], r))
}

fn fit_power_no_jump(q: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let a: Vec<Vec<f64>> = q.iter().map(|&x| vec![1.0, x.ln(), x, x * x]).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (c, r) = lstsq(&a, &ly, &vec![1.0; q.len()])?;
    Some((c[1], c[0].exp(), r / (q.len() as f64).sqrt()))
}

/// Selects the regime at each boundary and fits its leading term against `pi` near the boundary.
pub fn boundary_asymptotics(model: &ModelSpec<f64>, pi: &StationaryDensity) -> [AsymptoticDescriptor; 2] {
    let one = |i: usize| {
        let t = model.taylor[i];
        let beta = (2.0 * t.m0 - t.v1) / t.v1;
        let case = AsymptoticCase::for_boundary(model, i);
        let lk = model.lambda * pi.kappa(i);
        let (q, y) = window(pi, i);
        let mut d = AsymptoticDescriptor { case, beta, ..AsymptoticDescriptor::unset() };
        if q.len() < 6 {
            return d;
        }
        match case {
            AsymptoticCase::Power => {
                if let Some((b, c, r)) = fit_power(&q, &y) {
                    d.fitted_beta = b;
                    d.coefficient = c;
                    d.fit_residual = r;
                }
            }
            AsymptoticCase::PowerNoJump => {
                if let Some((b, c, r)) = fit_power_no_jump(&q, &y) {
                    d.fitted_beta = b;
                    d.coefficient = c;
                    d.fit_residual = r;
                }
            }
            AsymptoticCase::Log => {
                d.predicted = 2.0 * lk / t.v1;
                if let Some((c, r)) = fit(&|x: f64| vec![(1.0 / x).ln(), 1.0, x * x.ln(), x], &q, &y) {
                    d.coefficient = c[0];
                    d.fit_residual = r;
                }
            }
            AsymptoticCase::Constant => {
                d.predicted = 2.0 * lk / (2.0 * t.m0 - t.v1).abs();
                let g = move |x: f64| {
                    if (beta - 1.0).abs() <= 1e-3 {
                        x * x.ln()
                    } else if beta < 2.0 {
                        x.powf(beta)
                    } else {
                        x * x
                    }
                };
                if let Some((c, r)) = fit(&|x: f64| vec![1.0, x, g(x)], &q, &y) {
                    d.coefficient = c[0];
                    d.fit_residual = r;
                }
            }
        }
        d.reliable = d.fit_residual.is_finite() && d.fit_residual < FIT_RESIDUAL_LIMIT;
        d
    };
    [one(0), one(1)]
}
