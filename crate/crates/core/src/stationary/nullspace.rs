//! Finite-volume generator with exponentially fitted diffusive fluxes, and its stationary vector.

use super::{Method, StationaryDensity};
use crate::error::{Error, Result};
use crate::linalg::thomas;
use crate::model::ModelSpec;
use crate::quad::GaussLegendre;

#[derive(Debug, Clone)]
pub struct NullspaceOptions {
    /// Width of the outermost cell at each boundary.
    pub x_min: f64,
    /// Distance at which the cell grading switches from geometric to uniform.
    pub x_scale: f64,
    /// Shift of the inverse iteration.
    pub shift: f64,
    pub max_iter: usize,
    /// Stop once successive iterates differ by less than this in max norm.
    pub tol: f64,
}

impl Default for NullspaceOptions {
    fn default() -> Self {
        NullspaceOptions { x_min: 1e-12, x_scale: 0.1, shift: -1e-8, max_iter: 50, tol: 1e-15 }
    }
}

/// Default resolution.
pub const DEFAULT_CELLS: usize = 2000;

/// Faces on one side, as distances from the boundary: `0, x_min, ..., 0.5`.
fn side_faces(m: usize, opts: &NullspaceOptions) -> Vec<f64> {
    let (xm, xs) = (opts.x_min, opts.x_scale);
    let k = |x: f64| (x / xm).ln() + (x - xm) / xs;
    let top = k(0.5);
    let mut f = vec![0.0, xm];
    let mut y = xm.ln();
    for j in 1..m - 1 {
        let t = top * j as f64 / (m - 1) as f64;
        for _ in 0..100 {
            let x = y.exp();
            let g = (x / xm).ln() + (x - xm) / xs - t;
            let dy = g / (1.0 + x / xs);
            y -= dy;
            if dy.abs() < 1e-15 {
                break;
            }
        }
        f.push(y.exp());
    }
    f.push(0.5);
    f
}

/// Distance-to-boundary representation of a point: which side, and how far.
#[derive(Debug, Clone, Copy)]
struct Loc {
    side: usize,
    q: f64,
}

impl Loc {
    fn dist_to(self, side: usize) -> f64 {
        if self.side == side {
            self.q
        } else {
            1.0 - self.q
        }
    }
}

struct Fitted<'a> {
    model: &'a ModelSpec<f64>,
    rule: GaussLegendre,
}

impl Fitted<'_> {
    /// `int_{qa}^{qb} 2 mu_in / v dq` in the inward coordinate of `side`, integrated in `ln q`.
    fn drift_integral(&self, side: usize, qa: f64, qb: f64) -> f64 {
        let (la, lb) = (qa.ln(), qb.ln());
        let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
        let mut s = 0.0;
        for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let q = (mid + half * x).exp();
            let (v, mu) = self.model.inward(side, q);
            s += w * 2.0 * mu / v * q;
        }
        s * half
    }

    /// `(Delta A, D)` between two representative points ordered by increasing `p`.
    fn link(&self, a: Loc, b: Loc) -> (f64, f64) {
        let side = if b.dist_to(0) <= 0.5 + 1e-12 { 0 } else { 1 };
        let (qa, qb) = (a.dist_to(side), b.dist_to(side));
        let da = self.drift_integral(side, qa, qb);
        let (la, lb) = (qa.ln(), qb.ln());
        let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
        let mut d = 0.0;
        for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let q = (mid + half * x).exp();
            d += w * (-self.drift_integral(side, qa, q)).exp() * q;
        }
        (da, (d * half).abs())
    }
}

/// Representative point of an outermost cell `[0, x]` under a local power law `q^beta`:
/// the point where the density equals its cell average.
fn outer_point(x: f64, beta: f64) -> f64 {
    if beta.abs() < 1e-9 {
        x / std::f64::consts::E
    } else {
        x * (1.0 + beta).powf(-1.0 / beta)
    }
}

/// Stationary density as the null vector of a finite-volume discretization of the generator.
pub fn solve_stationary_nullspace(model: &ModelSpec<f64>, n_cells: usize) -> Result<StationaryDensity> {
    solve_stationary_nullspace_with(model, n_cells, &NullspaceOptions::default())
}

pub fn solve_stationary_nullspace_with(
    model: &ModelSpec<f64>,
    n_cells: usize,
    opts: &NullspaceOptions,
) -> Result<StationaryDensity> {
    if n_cells < 100 {
        return Err(Error::InvalidParameter(format!("n_cells must be at least 100, got {n_cells}")));
    }
    let ml = n_cells / 2;
    let mr = n_cells - ml;
    let left = side_faces(ml, opts);
    let right = side_faces(mr, opts);

    let mut faces = Vec::with_capacity(n_cells + 1);
    let mut mirror_faces = Vec::with_capacity(n_cells + 1);
    for &q in &left {
        faces.push(q);
        mirror_faces.push(1.0 - q);
    }
    for &q in right.iter().rev().skip(1) {
        faces.push(1.0 - q);
        mirror_faces.push(q);
    }
    let n = n_cells;

    let local_beta = |i: usize| {
        let b = model.beta(i);
        if !model.jump_reach[i] || b < 0.0 {
            b
        } else {
            0.0
        }
    };
    let mut locs = Vec::with_capacity(n);
    let mut widths = Vec::with_capacity(n);
    for j in 0..n {
        let (loc, h) = if j < ml {
            let (a, b) = (left[j], left[j + 1]);
            let q = if j == 0 { outer_point(b, local_beta(0)) } else { 0.5 * (a + b) };
            (Loc { side: 0, q }, b - a)
        } else {
            let r = n - 1 - j;
            let (a, b) = (right[r], right[r + 1]);
            let q = if r == 0 { outer_point(b, local_beta(1)) } else { 0.5 * (a + b) };
            (Loc { side: 1, q }, b - a)
        };
        locs.push(loc);
        widths.push(h);
    }
    let half_v: Vec<f64> = locs.iter().map(|l| 0.5 * model.inward(l.side, l.q).0).collect();

    let fitted = Fitted { model, rule: GaussLegendre::new(8) };
    // rate to the right neighbour, and rate from the right neighbour back
    let mut up = vec![0.0; n];
    let mut down = vec![0.0; n];
    for j in 0..n - 1 {
        let (da, d) = fitted.link(locs[j], locs[j + 1]);
        up[j] = half_v[j] / (widths[j] * d);
        down[j] = (-da).exp() * half_v[j + 1] / (widths[j + 1] * d);
        if !(up[j].is_finite() && down[j].is_finite()) || up[j] <= 0.0 || down[j] <= 0.0 {
            return Err(Error::Internal(format!("degenerate diffusive rate between cells {j} and {}", j + 1)));
        }
    }
    let lambda = model.lambda;
    let p_of = |l: Loc| if l.side == 0 { l.q } else { 1.0 - l.q };
    let a0: Vec<f64> = locs.iter().map(|&l| lambda * model.w0(p_of(l))).collect();
    let a1: Vec<f64> = locs.iter().map(|&l| lambda * model.w1(p_of(l))).collect();

    // transpose of the generator: tridiagonal part plus the two dense jump rows
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for j in 0..n {
        let out_up = if j + 1 < n { up[j] } else { 0.0 };
        let out_down = if j > 0 { down[j - 1] } else { 0.0 };
        diag[j] = -(out_up + out_down + a0[j] + a1[j]);
        if j > 0 {
            sub[j] = up[j - 1];
        }
        if j + 1 < n {
            sup[j] = down[j];
        }
    }
    let apply = |m: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = (0..n)
            .map(|j| {
                let mut s = diag[j] * m[j];
                if j > 0 {
                    s += sub[j] * m[j - 1];
                }
                if j + 1 < n {
                    s += sup[j] * m[j + 1];
                }
                s
            })
            .collect();
        r[0] += a0.iter().zip(m).map(|(a, x)| a * x).sum::<f64>();
        r[n - 1] += a1.iter().zip(m).map(|(a, x)| a * x).sum::<f64>();
        r
    };

    let mut shift = opts.shift;
    let (z0, z1, shifted) = loop {
        let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let mut e1 = vec![0.0; n];
        e1[n - 1] = 1.0;
        match (thomas(&sub, &shifted, &sup, &e0), thomas(&sub, &shifted, &sup, &e1)) {
            (Some(z0), Some(z1)) => break (z0, z1, shifted),
            _ if shift > -1.0 => shift *= 10.0,
            _ => return Err(Error::Singular { stage: "null-space" }),
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let cap = [[1.0 + dot(&a0, &z0), dot(&a0, &z1)], [dot(&a1, &z0), 1.0 + dot(&a1, &z1)]];
    let det = cap[0][0] * cap[1][1] - cap[0][1] * cap[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular { stage: "null-space" });
    }

    let mut m: Vec<f64> = widths.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let y = thomas(&sub, &shifted, &sup, &m).ok_or(Error::Singular { stage: "null-space" })?;
        let (r0, r1) = (dot(&a0, &y), dot(&a1, &y));
        let c0 = (r0 * cap[1][1] - r1 * cap[0][1]) / det;
        let c1 = (cap[0][0] * r1 - cap[1][0] * r0) / det;
        let mut x: Vec<f64> = (0..n).map(|k| y[k] - z0[k] * c0 - z1[k] * c1).collect();
        let s: f64 = x.iter().sum();
        if !s.is_finite() || s == 0.0 {
            return Err(Error::NonConvergence { stage: "null-space", detail: "iterate collapsed".into() });
        }
        for v in &mut x {
            *v /= s;
        }
        let change = x.iter().zip(&m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        m = x;
        if change < opts.tol && iterations >= 2 {
            converged = true;
            break;
        }
    }
    if let Some(k) = m.iter().position(|&x| x < 0.0) {
        return Err(Error::PositivityFloor { point: p_of(locs[k]), value: m[k] });
    }
    let res = apply(&m);
    let scale = (0..n).map(|k| diag[k].abs() * m[k]).fold(0.0, f64::max);
    let residual = res.iter().map(|r| r.abs()).fold(0.0, f64::max) / scale;
    if !converged && residual > 1e-10 {
        return Err(Error::NonConvergence {
            stage: "null-space",
            detail: format!("balance residual {residual:.3e} after {iterations} inverse iterations"),
        });
    }

    let mut d = StationaryDensity::from_cells(faces, mirror_faces, m, Method::NullSpace);
    d.diagnostics.residual = residual;
    d.diagnostics.iterations = iterations;
    d.attach(model);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faces_are_graded_and_end_at_half() {
        let f = side_faces(1000, &NullspaceOptions::default());
        assert_eq!(f.len(), 1001);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 1e-12);
        assert_eq!(*f.last().unwrap(), 0.5);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        let r = f[3] / f[2];
        assert!(r > 1.0 && r < 1.1);
    }

    #[test]
    fn outer_point_matches_cell_average() {
        for &b in &[-0.9, -0.4, 0.5, 2.0] {
            let x = 1e-6;
            let c = outer_point(x, b);
            let avg = x.powf(b) / (1.0 + b);
            assert!((c.powf(b) / avg - 1.0).abs() < 1e-12);
        }
    }
}
