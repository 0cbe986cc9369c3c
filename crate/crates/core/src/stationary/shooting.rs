//! Shooting on the non-local boundary value problem
//! `(v pi / 2)'' - (mu pi)' - lambda pi = 0` with boundary fluxes
//! `mu pi - (v pi / 2)' = lambda kappa0` at 0 and `-lambda kappa1` at 1.
//!
//! Each side starts a short distance `delta` off the boundary from two-term
//! Frobenius expansions and is integrated to 1/2 in the state
//! `(u, J) = (v pi / 2, mu pi - u')`, where `u' = (2 mu / v) u - J` and `J' = -lambda pi`.

use std::sync::Arc;

use super::{Method, StationaryDensity};
use crate::error::{Error, Result};
use crate::linalg::solve2;
use crate::model::{ModelSpec, CRITICAL_TOL};
use crate::ode::{Dopri5, Tolerance};
use crate::quad::{GridParams, PanelGrid};

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    pub tol: f64,
    pub delta: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub grid: GridParams,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { tol: 1e-12, delta: 1e-4, damping: 0.5, max_iter: 200, grid: GridParams::default() }
    }
}

/// Local Frobenius pair at one boundary in the inward distance `q`.
/// `free` has zero boundary flux; `jump` carries flux `j0` at the boundary.
#[derive(Debug, Clone, Copy)]
struct Frobenius {
    beta: f64,
    b1: f64,
    a1: f64,
    log_k: f64,
    d1: f64,
    kind: Kind,
    j0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Regular,
    /// roots 0 and 1: `1 + K q ln q`
    Resonant,
    /// double root 0: `y1 ln q + d1 q`
    Critical,
}

impl Frobenius {
    fn new(v1: f64, v2: f64, m0: f64, m1: f64, lambda: f64) -> Self {
        let beta = (2.0 * m0 - v1) / v1;
        let p1 = 2.0 / v1 * ((2.0 * v2 - m1) - (v1 - m0) * v2 / v1);
        let q0 = 2.0 * (v2 - m1 - lambda) / v1;
        let critical = (v1 - 2.0 * m0).abs() < CRITICAL_TOL;
        if critical {
            let b1 = -q0;
            return Frobenius { beta: 0.0, b1, a1: 0.0, log_k: 0.0, d1: -(2.0 * b1 + p1), kind: Kind::Critical, j0: -0.5 * v1 };
        }
        let b1 = -(p1 * beta + q0) / (1.0 + beta);
        let j0 = m0 - 0.5 * v1;
        if (beta - 1.0).abs() < 1e-6 {
            Frobenius { beta, b1, a1: 0.0, log_k: -q0, d1: 0.0, kind: Kind::Resonant, j0 }
        } else {
            Frobenius { beta, b1, a1: -q0 / (1.0 - beta), log_k: 0.0, d1: 0.0, kind: Kind::Regular, j0 }
        }
    }

    /// (value, integral from 0) of the zero-flux solution.
    fn free(&self, q: f64) -> (f64, f64) {
        let b = self.beta;
        let y = q.powf(b) * (1.0 + self.b1 * q);
        let int = q.powf(b + 1.0) / (b + 1.0) + self.b1 * q.powf(b + 2.0) / (b + 2.0);
        (y, int)
    }

    /// (value, integral from 0) of the flux-carrying solution.
    fn jump(&self, q: f64) -> (f64, f64) {
        let l = q.ln();
        match self.kind {
            Kind::Regular => (1.0 + self.a1 * q, q + 0.5 * self.a1 * q * q),
            Kind::Resonant => (1.0 + self.log_k * q * l, q + self.log_k * (0.5 * q * q * l - 0.25 * q * q)),
            Kind::Critical => {
                let y1 = 1.0 + self.b1 * q;
                let y = y1 * l + self.d1 * q;
                let int = (q * l - q) + self.b1 * (0.5 * q * q * l - 0.25 * q * q) + 0.5 * self.d1 * q * q;
                (y, int)
            }
        }
    }
}

/// Two basis solutions on one half, sampled at the nodes of that half.
struct Side {
    /// node indices, ordered by increasing distance to the boundary
    nodes: Vec<usize>,
    free_pi: Vec<f64>,
    free_j: Vec<f64>,
    jump_pi: Vec<f64>,
    jump_j: Vec<f64>,
    /// (u, J) at the midpoint for the free and jump solutions
    free_mid: [f64; 2],
    jump_mid: [f64; 2],
    j0: f64,
}

fn solve_side(model: &ModelSpec<f64>, i: usize, grid: &PanelGrid, opts: &ShootingOptions) -> Result<Side> {
    let t = model.taylor[i];
    let lambda = model.lambda;
    let fr = Frobenius::new(t.v1, t.v2, t.m0, t.m1, lambda);
    let vh = |q: f64| if i == 0 { model.v(q) } else { model.v(1.0 - q) };
    let mh = |q: f64| if i == 0 { model.mu(q) } else { -model.mu(1.0 - q) };

    let mut nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.dist(k, i) < 0.5).collect();
    nodes.sort_by(|&a, &b| grid.dist(a, i).partial_cmp(&grid.dist(b, i)).unwrap());

    let delta = opts.delta;
    let (fy, fi) = fr.free(delta);
    let (jy, ji) = fr.jump(delta);
    let vd = vh(delta);
    let mut y = [0.5 * vd * fy, -lambda * fi, 0.5 * vd * jy, fr.j0 - lambda * ji];
    let mut rhs = |q: f64, y: &[f64; 4]| {
        let v = vh(q);
        let a = 2.0 * mh(q) / v;
        let l = 2.0 * lambda / v;
        [a * y[0] - y[1], -l * y[0], a * y[2] - y[3], -l * y[2]]
    };
    let tol = Tolerance { rtol: opts.tol, atol: 1e-300, max_steps: 5_000_000 };
    let mut solver = Dopri5::<4>::new(tol, delta * 1e-2);
    let n = nodes.len();
    let (mut free_pi, mut free_j, mut jump_pi, mut jump_j) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut q = delta;
    for (slot, &k) in nodes.iter().enumerate() {
        let qk = grid.dist(k, i);
        if qk <= delta {
            let (fy, fi) = fr.free(qk);
            let (jy, ji) = fr.jump(qk);
            free_pi[slot] = fy;
            free_j[slot] = -lambda * fi;
            jump_pi[slot] = jy;
            jump_j[slot] = fr.j0 - lambda * ji;
            continue;
        }
        solver.advance(&mut rhs, q, &mut y, qk).map_err(|e| match e {
            Error::Integrator { detail, .. } => Error::Integrator { stage: "shooting", detail },
            other => other,
        })?;
        q = qk;
        let v = vh(qk);
        free_pi[slot] = 2.0 * y[0] / v;
        free_j[slot] = y[1];
        jump_pi[slot] = 2.0 * y[2] / v;
        jump_j[slot] = y[3];
    }
    solver.advance(&mut rhs, q, &mut y, 0.5)?;
    Ok(Side {
        nodes,
        free_pi,
        free_j,
        jump_pi,
        jump_j,
        free_mid: [y[0], y[1]],
        jump_mid: [y[2], y[3]],
        j0: fr.j0,
    })
}

/// Nodal density and flux (in the `p` orientation) for boundary fluxes `lambda k0`, `-lambda k1`.
fn combine(lambda: f64, sides: &[Side; 2], k: [f64; 2], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = [lambda * k[0] / sides[0].j0, lambda * k[1] / sides[1].j0];
    let (l, r) = (&sides[0], &sides[1]);
    let coef = if lambda == 0.0 {
        [1.0, l.free_mid[0] / r.free_mid[0]]
    } else {
        // u_L = u_R and J_L = -J_R at the midpoint
        let a = [[l.free_mid[0], -r.free_mid[0]], [l.free_mid[1], r.free_mid[1]]];
        let b = [
            c[1] * r.jump_mid[0] - c[0] * l.jump_mid[0],
            -c[1] * r.jump_mid[1] - c[0] * l.jump_mid[1],
        ];
        solve2(a, b).ok_or(Error::Singular { stage: "shooting midpoint matching" })?
    };
    let mut pi = vec![0.0; n];
    let mut flux = vec![0.0; n];
    for (s, side) in sides.iter().enumerate() {
        let sign = if s == 0 { 1.0 } else { -1.0 };
        for (slot, &k) in side.nodes.iter().enumerate() {
            pi[k] = c[s] * side.jump_pi[slot] + coef[s] * side.free_pi[slot];
            flux[k] = sign * (c[s] * side.jump_j[slot] + coef[s] * side.free_j[slot]);
        }
    }
    Ok((pi, flux))
}

/// Shooting solver with default options and integrator tolerance `tol`.
pub fn solve_stationary_shooting(model: &ModelSpec<f64>, tol: f64) -> Result<StationaryDensity> {
    solve_stationary_shooting_with(model, &ShootingOptions { tol, ..Default::default() })
}

pub fn solve_stationary_shooting_with(model: &ModelSpec<f64>, opts: &ShootingOptions) -> Result<StationaryDensity> {
    if !(opts.tol > 0.0) || !(opts.delta > 0.0 && opts.delta < 0.5) {
        return Err(Error::InvalidParameter("shooting needs tol > 0 and 0 < delta < 1/2".into()));
    }
    let grid = Arc::new(PanelGrid::new(opts.grid));
    let n = grid.len();
    let sides = [solve_side(model, 0, &grid, opts)?, solve_side(model, 1, &grid, opts)?];
    let lambda = model.lambda;

    let integrate = |pi: &[f64], f: &dyn Fn(f64) -> f64| super::panel_integral(&grid, pi, f);

    let (mut pi, mut flux, iterations) = if lambda == 0.0 {
        let (pi, flux) = combine(lambda, &sides, [0.0, 0.0], n)?;
        (pi, flux, 0)
    } else {
        let (p0, f0) = combine(lambda, &sides, [1.0, 0.0], n)?;
        let (p1, f1) = combine(lambda, &sides, [0.0, 1.0], n)?;
        let w0 = |p: f64| model.w0(p);
        let a0 = integrate(&p0, &w0);
        let a1 = integrate(&p1, &w0);
        let mut k0 = 0.5;
        let mut iters = 0;
        loop {
            let out = k0 * a0 + (1.0 - k0) * a1;
            let next = (1.0 - opts.damping) * k0 + opts.damping * out;
            iters += 1;
            if (out - k0).abs() < opts.tol {
                k0 = out;
                break;
            }
            k0 = next;
            if iters >= opts.max_iter {
                return Err(Error::NonConvergence {
                    stage: "shooting kappa fixed point",
                    detail: format!("|kappa_out - kappa_in| = {:.3e} after {iters} iterations", (out - k0).abs()),
                });
            }
        }
        let pi: Vec<f64> = p0.iter().zip(&p1).map(|(a, b)| k0 * a + (1.0 - k0) * b).collect();
        let flux: Vec<f64> = f0.iter().zip(&f1).map(|(a, b)| k0 * a + (1.0 - k0) * b).collect();
        (pi, flux, iters)
    };
    if let Some(k) = pi.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::PositivityFloor { point: grid.nodes[k], value: pi[k] });
    }
    for x in pi.iter_mut().chain(flux.iter_mut()) {
        if !x.is_finite() {
            return Err(Error::Integrator { stage: "shooting", detail: "non-finite density".into() });
        }
    }
    let mut d = StationaryDensity::from_panels(grid.clone(), pi, Some(flux), Method::Shooting);
    d.diagnostics.iterations = iterations;
    d.diagnostics.residual = ode_residual(model, &d, &grid, 2.0 * opts.delta);
    d.attach(model);
    Ok(d)
}

/// Largest relative residual of `u' = (2 mu / v) u - J` and `J' = -lambda pi` at nodes
/// farther than `q_min` from both ends, using spectral differentiation.
fn ode_residual(model: &ModelSpec<f64>, d: &StationaryDensity, grid: &PanelGrid, q_min: f64) -> f64 {
    let flux = match &d.flux {
        Some(f) => f,
        None => return f64::NAN,
    };
    let n = d.len();
    let u: Vec<f64> = (0..n).map(|k| 0.5 * model.v(d.grid[k]) * d.values[k]).collect();
    let du = grid.differentiate(&u);
    let dj = grid.differentiate(flux);
    let mut worst = 0.0_f64;
    for k in 0..n {
        let q = d.grid[k].min(d.mirror[k]);
        if q < q_min {
            continue;
        }
        let mp = model.mu(d.grid[k]) * d.values[k];
        let r1 = (du[k] - (mp - flux[k])).abs() / (du[k].abs() + mp.abs() + flux[k].abs());
        let lp = model.lambda * d.values[k];
        let r2 = if model.lambda > 0.0 { (dj[k] + lp).abs() / (dj[k].abs() + lp) } else { dj[k].abs() };
        worst = worst.max(r1).max(r2);
    }
    worst
}
