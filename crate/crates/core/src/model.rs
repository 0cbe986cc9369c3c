//! Forward jump-diffusion models on [0, 1] and their boundary classification.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::real::Real;

/// Pointwise-evaluable coefficient function.
pub type Coef<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Builds a [`Coef`] from a closure.
pub fn coef<T: Real, F: Fn(T) -> T + Send + Sync + 'static>(f: F) -> Coef<T> {
    Arc::new(f)
}

/// Step for central differences of `v` at the endpoints.
pub const FD_STEP: f64 = 1e-6;
/// Margins `|v'(i)| - 2|mu(i)|` this close to zero are flagged as near-critical.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Local expansion of the coefficients at one boundary in the inward distance `q = |p - i|`,
/// after mirroring so that the boundary sits at `q = 0`:
/// `v ~ v1 q + v2 q^2`, `mu ~ m0 + m1 q` (drift pointing inward is positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTaylor<T> {
    pub v1: T,
    pub v2: T,
    pub m0: T,
    pub m1: T,
}

/// Unvalidated coefficient description accepted by [`build_model`].
#[derive(Clone)]
pub struct RawModel<T: Real> {
    pub v: Coef<T>,
    pub mu: Coef<T>,
    pub w0: Coef<T>,
    pub lambda: T,
    pub v_prime: Option<[T; 2]>,
    pub taylor: Option<[BoundaryTaylor<T>; 2]>,
    pub label: String,
}

/// Validated forward model: variance `v`, drift `mu`, jump rate `lambda`,
/// and probability `w0(p)` that a jump from `p` lands at 0.
#[derive(Clone)]
pub struct ModelSpec<T: Real> {
    pub v: Coef<T>,
    pub mu: Coef<T>,
    pub w0: Coef<T>,
    pub lambda: T,
    pub v_prime: [T; 2],
    pub taylor: [BoundaryTaylor<T>; 2],
    /// `lambda * sup w_i > 0` on the validation grid.
    pub jump_reach: [bool; 2],
    pub label: String,
}

impl<T: Real> fmt::Debug for ModelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("label", &self.label)
            .field("lambda", &self.lambda)
            .field("v_prime", &self.v_prime)
            .field("taylor", &self.taylor)
            .field("jump_reach", &self.jump_reach)
            .finish()
    }
}

impl<T: Real> ModelSpec<T> {
    #[inline]
    pub fn v(&self, p: T) -> T {
        (self.v)(p)
    }

    #[inline]
    pub fn mu(&self, p: T) -> T {
        (self.mu)(p)
    }

    #[inline]
    pub fn w0(&self, p: T) -> T {
        (self.w0)(p)
    }

    #[inline]
    pub fn w1(&self, p: T) -> T {
        T::one() - (self.w0)(p)
    }

    /// Probability that a jump from `p` lands at boundary `i`.
    #[inline]
    pub fn w(&self, i: usize, p: T) -> T {
        if i == 0 {
            self.w0(p)
        } else {
            self.w1(p)
        }
    }

    /// Generator applied to a test function: `1/2 v phi'' + mu phi' + lambda sum_i w_i (phi(i) - phi)`.
    pub fn generator(&self, p: T, phi: T, dphi: T, d2phi: T, phi0: T, phi1: T) -> T {
        let half = T::of(0.5);
        half * self.v(p) * d2phi
            + self.mu(p) * dphi
            + self.lambda * (self.w0(p) * (phi0 - phi) + self.w1(p) * (phi1 - phi))
    }

    /// `(v, mu)` at distance `q` from boundary `i`, with the drift sign flipped at boundary 1
    /// so that inward is positive. Very close to 1 the boundary expansion replaces `1 - q`,
    /// which cannot be represented accurately.
    pub fn inward(&self, i: usize, q: T) -> (T, T) {
        if i == 0 {
            (self.v(q), self.mu(q))
        } else if q < T::of(3e-6) {
            let t = self.taylor[1];
            (t.v1 * q + t.v2 * q * q, t.m0 + t.m1 * q)
        } else {
            let p = T::one() - q;
            (self.v(p), -self.mu(p))
        }
    }

    /// Exponent `(2 mu(i) - v'(i)) / v'(i)` of the boundary power law.
    pub fn beta(&self, i: usize) -> T {
        let t = self.taylor[i];
        (T::of(2.0) * t.m0 - t.v1) / t.v1
    }

    /// Same model in another precision.
    pub fn to_precision<U: Real>(&self) -> ModelSpec<U> {
        let (v, mu, w0) = (self.v.clone(), self.mu.clone(), self.w0.clone());
        let cast = |t: BoundaryTaylor<T>| BoundaryTaylor {
            v1: U::of(t.v1.f64()),
            v2: U::of(t.v2.f64()),
            m0: U::of(t.m0.f64()),
            m1: U::of(t.m1.f64()),
        };
        ModelSpec {
            v: coef(move |p: U| U::of(v(T::of(p.f64())).f64())),
            mu: coef(move |p: U| U::of(mu(T::of(p.f64())).f64())),
            w0: coef(move |p: U| U::of(w0(T::of(p.f64())).f64())),
            lambda: U::of(self.lambda.f64()),
            v_prime: [U::of(self.v_prime[0].f64()), U::of(self.v_prime[1].f64())],
            taylor: [cast(self.taylor[0]), cast(self.taylor[1])],
            jump_reach: self.jump_reach,
            label: self.label.clone(),
        }
    }

    /// Model with coefficients given as expressions in `p`.
    pub fn custom(v: &str, mu: &str, w0: &str, lambda: T, params: &BTreeMap<String, f64>) -> Result<Self> {
        let (ve, me, we) = (
            Expr::parse_with(v, params)?,
            Expr::parse_with(mu, params)?,
            Expr::parse_with(w0, params)?,
        );
        build_model(RawModel {
            v: coef(move |p: T| T::of(ve.eval(p.f64()))),
            mu: coef(move |p: T| T::of(me.eval(p.f64()))),
            w0: coef(move |p: T| T::of(we.eval(p.f64()))),
            lambda,
            v_prime: None,
            taylor: None,
            label: format!("custom(v={v}, mu={mu}, w0={w0}, lambda={lambda})"),
        })
    }
}

/// Validation grid: 1001 equispaced points plus 100 Chebyshev-clustered points near each end.
pub fn validation_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    for k in 1..=100 {
        let x = 0.05 * (1.0 - (std::f64::consts::PI * k as f64 / 202.0).cos());
        g.push(x);
        g.push(1.0 - x);
    }
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

fn violation(condition: &str, point: f64) -> Error {
    Error::InvalidModel { condition: condition.to_string(), point }
}

/// Validates a raw model against the standing assumptions on a sampled grid.
pub fn build_model<T: Real>(raw: RawModel<T>) -> Result<ModelSpec<T>> {
    let lam = raw.lambda.f64();
    if !(lam >= 0.0) || !lam.is_finite() {
        return Err(Error::InvalidParameter(format!("jump rate lambda = {lam} must be finite and nonnegative")));
    }
    let v = |p: f64| (raw.v)(T::of(p)).f64();
    let mu = |p: f64| (raw.mu)(T::of(p)).f64();
    let w0 = |p: f64| (raw.w0)(T::of(p)).f64();

    let grid = validation_grid();
    let tol = 1e-12_f64.max(T::epsilon().f64() * 16.0);
    let mut sup_w = [0.0_f64; 2];
    for &p in &grid {
        let (vp, mp, wp) = (v(p), mu(p), w0(p));
        if !vp.is_finite() || !mp.is_finite() || !wp.is_finite() {
            return Err(violation("coefficients finite", p));
        }
        if p > 0.0 && p < 1.0 && vp <= 0.0 {
            return Err(violation("v(p) > 0 on (0,1)", p));
        }
        if wp < -tol || wp > 1.0 + tol {
            return Err(violation("0 <= w0(p) <= 1", p));
        }
        sup_w[0] = sup_w[0].max(wp);
        sup_w[1] = sup_w[1].max(1.0 - wp);
    }
    if v(0.0).abs() > tol {
        return Err(violation("v(0) = 0", 0.0));
    }
    if v(1.0).abs() > tol {
        return Err(violation("v(1) = 0", 1.0));
    }
    if !(mu(0.0) > 0.0) {
        return Err(violation("mu(0) > 0", 0.0));
    }
    if !(mu(1.0) < 0.0) {
        return Err(violation("mu(1) < 0", 1.0));
    }
    let vp = match raw.v_prime {
        Some(d) => [d[0].f64(), d[1].f64()],
        None => {
            let h = FD_STEP;
            [(v(h) - v(-h)) / (2.0 * h), (v(1.0 + h) - v(1.0 - h)) / (2.0 * h)]
        }
    };
    if !(vp[0] > 0.0) {
        return Err(violation("v'(0) > 0", 0.0));
    }
    if !(vp[1] < 0.0) {
        return Err(violation("v'(1) < 0", 1.0));
    }
    let taylor = match raw.taylor {
        Some(t) => t,
        None => {
            let h = 1e-4;
            let d2 = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let d1 = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
            [
                BoundaryTaylor {
                    v1: T::of(vp[0]),
                    v2: T::of(0.5 * d2(&v, 0.0)),
                    m0: T::of(mu(0.0)),
                    m1: T::of(d1(&mu, 0.0)),
                },
                BoundaryTaylor {
                    v1: T::of(-vp[1]),
                    v2: T::of(0.5 * d2(&v, 1.0)),
                    m0: T::of(-mu(1.0)),
                    m1: T::of(d1(&mu, 1.0)),
                },
            ]
        }
    };
    Ok(ModelSpec {
        jump_reach: [lam * sup_w[0] > 0.0, lam * sup_w[1] > 0.0],
        v: raw.v,
        mu: raw.mu,
        w0: raw.w0,
        lambda: raw.lambda,
        v_prime: [T::of(vp[0]), T::of(vp[1])],
        taylor,
        label: raw.label,
    })
}

/// Wright-Fisher diffusion with mutation, selection `s(p)` and bottleneck jumps:
/// `v = p(1-p)`, `mu = mu0 (1-p) - mu1 p + s(p) p (1-p)`, `w1 = w`, `w0 = 1 - w`.
pub fn wright_fisher<T: Real>(mu0: T, mu1: T, s: Coef<T>, lambda: T, w: Coef<T>) -> Result<ModelSpec<T>> {
    if !(mu0 > T::zero()) || !(mu1 > T::zero()) {
        return Err(Error::InvalidParameter(format!("mutation rates must be positive (mu0 = {mu0}, mu1 = {mu1})")));
    }
    let tol = 1e-12;
    if w(T::zero()).f64().abs() > tol || (w(T::one()).f64() - 1.0).abs() > tol {
        return Err(Error::InvalidParameter("jump direction w must satisfy w(0) = 0 and w(1) = 1".into()));
    }
    let grid = validation_grid();
    for pair in grid.windows(2) {
        if w(T::of(pair[1])).f64() < w(T::of(pair[0])).f64() - tol {
            return Err(Error::InvalidParameter(format!("jump direction w is not monotone near p = {}", pair[1])));
        }
    }
    let (s0, s1) = (s(T::zero()), s(T::one()));
    let one = T::one();
    let s_mu = s.clone();
    let w_c = w.clone();
    build_model(RawModel {
        v: coef(move |p: T| p * (one - p)),
        mu: coef(move |p: T| mu0 * (one - p) - mu1 * p + s_mu(p) * p * (one - p)),
        w0: coef(move |p: T| one - w_c(p)),
        lambda,
        v_prime: Some([one, -one]),
        taylor: Some([
            BoundaryTaylor { v1: one, v2: -one, m0: mu0, m1: -(mu0 + mu1) + s0 },
            BoundaryTaylor { v1: one, v2: -one, m0: mu1, m1: -(mu0 + mu1) - s1 },
        ]),
        label: format!("wright_fisher(mu0={mu0}, mu1={mu1}, lambda={lambda})"),
    })
}

/// Neutral Wright-Fisher model with unbiased jumps `w(p) = p`.
pub fn neutral<T: Real>(mu0: T, mu1: T, lambda: T) -> Result<ModelSpec<T>> {
    wright_fisher(mu0, mu1, coef(|_| T::zero()), lambda, coef(|p| p))
}

/// Classification of one boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryInfo {
    /// `2|mu(i)| < |v'(i)|`.
    pub diffusive_accessible: bool,
    /// `lambda * sup w_i > 0`.
    pub jump_reachable: bool,
    /// `|v'(i)| - 2|mu(i)|`.
    pub classification_margin: f64,
    /// Margin within [`CRITICAL_TOL`] of zero.
    pub near_critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryReport {
    pub boundaries: [BoundaryInfo; 2],
}

impl BoundaryReport {
    pub fn get(&self, i: usize) -> &BoundaryInfo {
        &self.boundaries[i]
    }
}

/// Feller-type classification of both boundaries for the diffusive part.
pub fn classify_boundary<T: Real>(model: &ModelSpec<T>) -> BoundaryReport {
    let info = |i: usize| {
        let mu_i = if i == 0 { model.mu(T::zero()) } else { model.mu(T::one()) }.f64();
        let margin = model.v_prime[i].f64().abs() - 2.0 * mu_i.abs();
        BoundaryInfo {
            diffusive_accessible: margin > 0.0,
            jump_reachable: model.jump_reach[i],
            classification_margin: margin,
            near_critical: margin.abs() <= CRITICAL_TOL,
        }
    };
    BoundaryReport { boundaries: [info(0), info(1)] }
}
