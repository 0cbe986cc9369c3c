//! Stationary density of the forward jump-diffusion.
//!
//! Three independent routes are provided: a shooting method on the non-local
//! boundary value problem, the null vector of a finite-volume generator, and
//! the hypergeometric closed form for neutral Wright-Fisher models with
//! unbiased jumps.

use std::sync::Arc;

use crate::model::ModelSpec;
use crate::quad::PanelGrid;

pub mod asymptotics;
pub mod closed_form;
pub mod nullspace;
pub mod shooting;

pub use asymptotics::{boundary_asymptotics, AsymptoticCase, AsymptoticDescriptor};
pub use closed_form::{closed_form_unnormalized, stationary_neutral_closed_form};
pub use nullspace::{solve_stationary_nullspace, solve_stationary_nullspace_with, NullspaceOptions};
pub use shooting::{solve_stationary_shooting, solve_stationary_shooting_with, ShootingOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Shooting,
    NullSpace,
    ClosedForm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Shooting => "shooting",
            Method::NullSpace => "nullspace",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// How nodal values are to be read.
#[derive(Debug, Clone)]
pub enum Layout {
    /// Point values at Gauss-Legendre nodes of a panel grid.
    Panels(Arc<PanelGrid>),
    /// Cell averages; `faces` has one more entry than the cells, `masses` are cell probabilities.
    Cells { faces: Vec<f64>, mirror_faces: Vec<f64>, masses: Vec<f64> },
}

/// Power-law model `k q^gamma` of the density within distance `lo` of a boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub lo: f64,
    pub k: f64,
    pub gamma: f64,
}

impl Tail {
    pub const NONE: Tail = Tail { lo: 0.0, k: 0.0, gamma: 0.0 };

    /// Mass within distance `q <= lo` of the boundary.
    pub fn mass_to(&self, q: f64) -> f64 {
        if self.lo == 0.0 {
            return 0.0;
        }
        let q = q.min(self.lo);
        self.k * q.powf(self.gamma + 1.0) / (self.gamma + 1.0)
    }

    pub fn mass(&self) -> f64 {
        self.mass_to(self.lo)
    }

    /// Mean distance to the boundary under the tail law.
    pub fn mean_point(&self) -> f64 {
        self.lo * (self.gamma + 1.0) / (self.gamma + 2.0)
    }

    fn fit(q: [f64; 2], v: [f64; 2], lo: f64) -> Tail {
        let gamma = if v[0] > 0.0 && v[1] > 0.0 { (v[0] / v[1]).ln() / (q[0] / q[1]).ln() } else { 0.0 };
        let gamma = gamma.max(-0.999);
        Tail { lo, k: v[0] / q[0].powf(gamma), gamma }
    }
}

/// Solver-specific diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Shooting: relative ODE residual. Null space: relative balance residual.
    /// Closed form: largest imaginary residue of the bracket.
    pub residual: f64,
    /// Outer fixed-point or inverse-iteration count.
    pub iterations: usize,
    /// Largest interior |(vpi)'|-scale residual of the flux identity, when available.
    pub flux_residual: f64,
}

/// Stationary density on a grid clustered toward both ends.
#[derive(Debug, Clone)]
pub struct StationaryDensity {
    pub grid: Vec<f64>,
    /// `1 - grid`, accurate near 1.
    pub mirror: Vec<f64>,
    pub values: Vec<f64>,
    /// Quadrature weights matching `grid`.
    pub weights: Vec<f64>,
    pub layout: Layout,
    pub tails: [Tail; 2],
    pub kappa0: f64,
    pub kappa1: f64,
    pub boundary_asymptotics: [AsymptoticDescriptor; 2],
    pub normalization_residual: f64,
    /// Probability flux `mu pi - (v pi / 2)'` at the nodes when the solver provides it.
    pub flux: Option<Vec<f64>>,
    pub method: Method,
    pub diagnostics: Diagnostics,
    panel_totals: Vec<f64>,
}

impl StationaryDensity {
    /// Wraps nodal point values on a panel grid; fits tail models and normalizes.
    pub fn from_panels(grid: Arc<PanelGrid>, mut values: Vec<f64>, mut flux: Option<Vec<f64>>, method: Method) -> Self {
        let tails = panel_tails(&grid, &values);
        let body: f64 = values.iter().zip(&grid.weights).map(|(v, w)| v * w).sum();
        let total = body + tails[0].mass() + tails[1].mass();
        for v in &mut values {
            *v /= total;
        }
        if let Some(f) = flux.as_mut() {
            for x in f.iter_mut() {
                *x /= total;
            }
        }
        let tails = tails.map(|t| Tail { k: t.k / total, ..t });
        let panel_totals = grid.panel_totals(&values);
        StationaryDensity {
            grid: grid.nodes.clone(),
            mirror: grid.mirror.clone(),
            weights: grid.weights.clone(),
            values,
            layout: Layout::Panels(grid),
            tails,
            kappa0: f64::NAN,
            kappa1: f64::NAN,
            boundary_asymptotics: [AsymptoticDescriptor::unset(), AsymptoticDescriptor::unset()],
            normalization_residual: (total - 1.0).abs(),
            flux,
            method,
            diagnostics: Diagnostics::default(),
            panel_totals,
        }
    }

    /// Wraps cell probabilities on a partition of [0, 1].
    pub fn from_cells(faces: Vec<f64>, mirror_faces: Vec<f64>, masses: Vec<f64>, method: Method) -> Self {
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let n = masses.len();
        let mut grid = Vec::with_capacity(n);
        let mut mirror = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (faces[j], faces[j + 1]);
            let (ma, mb) = (mirror_faces[j], mirror_faces[j + 1]);
            let h = if a < 0.5 { b - a } else { ma - mb };
            grid.push(0.5 * (a + b));
            mirror.push(0.5 * (ma + mb));
            weights.push(h);
            values.push(masses[j] / h);
        }
        StationaryDensity {
            grid,
            mirror,
            values,
            weights,
            layout: Layout::Cells { faces, mirror_faces, masses },
            tails: [Tail::NONE, Tail::NONE],
            kappa0: f64::NAN,
            kappa1: f64::NAN,
            boundary_asymptotics: [AsymptoticDescriptor::unset(), AsymptoticDescriptor::unset()],
            normalization_residual: (total - 1.0).abs(),
            flux: None,
            method,
            diagnostics: Diagnostics::default(),
            panel_totals: Vec::new(),
        }
    }

    /// Computes kappa and the boundary descriptors for `model`.
    pub fn attach(&mut self, model: &ModelSpec<f64>) {
        let (k0, k1) = compute_kappa(model, self);
        self.kappa0 = k0;
        self.kappa1 = k1;
        self.boundary_asymptotics = boundary_asymptotics(model, self);
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn kappa(&self, i: usize) -> f64 {
        if i == 0 {
            self.kappa0
        } else {
            self.kappa1
        }
    }

    /// Distance of node `k` to boundary `i`.
    #[inline]
    pub fn dist(&self, k: usize, i: usize) -> f64 {
        if i == 0 {
            self.grid[k]
        } else {
            self.mirror[k]
        }
    }

    /// `int f(p) pi(p) dp`, including tail contributions.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let body: f64 = (0..self.len()).map(|k| self.weights[k] * self.values[k] * f(self.grid[k])).sum();
        let t0 = self.tails[0];
        let t1 = self.tails[1];
        let mut s = body;
        if t0.lo > 0.0 {
            s += t0.mass() * f(t0.mean_point());
        }
        if t1.lo > 0.0 {
            s += t1.mass() * f(1.0 - t1.mean_point());
        }
        s
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|p| p)
    }

    /// Density at `x`, with tail models near the ends.
    pub fn eval(&self, x: f64) -> f64 {
        if x > 0.5 {
            self.eval_dist(1, 1.0 - x)
        } else {
            self.eval_dist(0, x)
        }
    }

    /// Density at distance `q` from boundary `i`.
    pub fn eval_dist(&self, i: usize, q: f64) -> f64 {
        match &self.layout {
            Layout::Panels(g) => {
                if q < g.lo() {
                    let t = self.tails[i];
                    t.k * q.max(1e-300).powf(t.gamma)
                } else {
                    g.interpolate_dist(&self.values, i, q)
                }
            }
            Layout::Cells { faces, mirror_faces, .. } => {
                let n = self.len();
                let j = if i == 0 {
                    faces.partition_point(|&f| f <= q).clamp(1, n) - 1
                } else {
                    mirror_faces.partition_point(|&f| f > q).clamp(1, n) - 1
                };
                self.values[j]
            }
        }
    }

    /// Probability of the points within distance `q` of boundary `i`.
    pub fn mass_near(&self, i: usize, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        match &self.layout {
            Layout::Panels(g) => {
                let t = self.tails[i];
                if q <= g.lo() {
                    return t.mass_to(q);
                }
                t.mass() + g.integral_near(&self.values, &self.panel_totals, i, q)
            }
            Layout::Cells { faces, mirror_faces, masses } => {
                let n = masses.len();
                let mut s = 0.0;
                for k in 0..n {
                    let j = if i == 0 { k } else { n - 1 - k };
                    let (near, far) = if i == 0 { (faces[j], faces[j + 1]) } else { (mirror_faces[j + 1], mirror_faces[j]) };
                    if far <= q {
                        s += masses[j];
                    } else {
                        s += masses[j] * ((q - near) / (far - near)).max(0.0);
                        break;
                    }
                }
                s
            }
        }
    }

    /// Distribution function `int_0^x pi`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if x > 0.5 {
            return 1.0 - self.mass_near(1, 1.0 - x);
        }
        match &self.layout {
            Layout::Panels(g) => {
                let lo = g.lo();
                let t0 = self.tails[0];
                if x <= lo {
                    return t0.mass_to(x);
                }
                if 1.0 - x <= lo {
                    return 1.0 - self.tails[1].mass_to(1.0 - x);
                }
                t0.mass() + g.partial_integral(&self.values, &self.panel_totals, x)
            }
            Layout::Cells { faces, masses, .. } => {
                let j = faces.partition_point(|&f| f <= x).clamp(1, masses.len()) - 1;
                let head: f64 = masses[..j].iter().sum();
                head + masses[j] * (x - faces[j]) / (faces[j + 1] - faces[j])
            }
        }
    }

    /// Probabilities of the intervals of a partition given by increasing `faces` spanning [0, 1].
    pub fn interval_masses(&self, faces: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = faces.iter().map(|&x| self.cdf(x)).collect();
        c.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Relative L1 distance `int |pi - other| / int pi`, resolved on the partition `faces`.
    pub fn relative_l1(&self, other: &StationaryDensity, faces: &[f64]) -> f64 {
        let a = self.interval_masses(faces);
        let b = other.interval_masses(faces);
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        let den: f64 = a.iter().map(|x| x.abs()).sum();
        num / den
    }
}

fn panel_tails(grid: &PanelGrid, values: &[f64]) -> [Tail; 2] {
    let n = grid.len();
    let order = grid.order();
    let lo = grid.lo();
    [
        Tail::fit([grid.nodes[0], grid.nodes[order]], [values[0], values[order]], lo),
        Tail::fit([grid.mirror[n - 1], grid.mirror[n - 1 - order]], [values[n - 1], values[n - 1 - order]], lo),
    ]
}

/// `int f pi` for unnormalized nodal values on a panel grid, tails included.
pub(crate) fn panel_integral(grid: &PanelGrid, values: &[f64], f: &dyn Fn(f64) -> f64) -> f64 {
    let tails = panel_tails(grid, values);
    let body: f64 = (0..grid.len()).map(|k| grid.weights[k] * values[k] * f(grid.nodes[k])).sum();
    body + tails[0].mass() * f(tails[0].mean_point()) + tails[1].mass() * f(1.0 - tails[1].mean_point())
}

/// `kappa_i = int w_i pi`, normalized so that `kappa0 + kappa1 = 1`.
pub fn compute_kappa(model: &ModelSpec<f64>, pi: &StationaryDensity) -> (f64, f64) {
    let a = pi.integrate(|p| model.w0(p));
    let total = pi.total_mass();
    let k0 = (a / total).clamp(0.0, 1.0);
    (k0, 1.0 - k0)
}

/// Fine partition of [0, 1] graded toward both ends, for comparing densities.
pub fn comparison_faces() -> Vec<f64> {
    let mut left: Vec<f64> = vec![0.0];
    let mut x = 1e-12;
    while x < 0.01 {
        left.push(x);
        x *= 1.1;
    }
    let mut y = 0.01;
    while y < 0.5 - 1e-12 {
        left.push(y);
        y += 0.0025;
    }
    let mut faces = left.clone();
    faces.push(0.5);
    for &l in left.iter().rev() {
        faces.push(1.0 - l);
    }
    faces
}
