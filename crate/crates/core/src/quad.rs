//! Gauss-Legendre panels, boundary-graded panel grids, and per-panel spectral operators.

/// Gauss-Legendre rule on [-1, 1] with barycentric weights and spectral operators.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric interpolation weights for `nodes`.
    pub bary: Vec<f64>,
    /// `diff[i][j] = l_j'(x_i)`.
    pub diff: Vec<Vec<f64>>,
    /// `cumint[i][j] = int_{-1}^{x_i} l_j`.
    pub cumint: Vec<Vec<f64>>,
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - nodes[j] * nodes[j]) * weights[j]).sqrt()
            })
            .collect();
        let mut diff = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut d = 0.0;
            for j in 0..n {
                if i != j {
                    diff[i][j] = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    d -= diff[i][j];
                }
            }
            diff[i][i] = d;
        }
        let mut gl = GaussLegendre { nodes, weights, bary, diff, cumint: Vec::new() };
        let mut cumint = vec![vec![0.0; n]; n];
        for (i, row) in cumint.iter_mut().enumerate() {
            let (a, b) = (-1.0, gl.nodes[i]);
            for k in 0..n {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[k];
                let wk = 0.5 * (b - a) * gl.weights[k];
                let basis = gl.basis(x);
                for j in 0..n {
                    row[j] += wk * basis[j];
                }
            }
        }
        gl.cumint = cumint;
        gl
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values at `x` in [-1, 1].
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        if let Some(j) = self.nodes.iter().position(|&t| t == x) {
            out[j] = 1.0;
            return out;
        }
        let mut s = 0.0;
        for j in 0..n {
            out[j] = self.bary[j] / (x - self.nodes[j]);
            s += out[j];
        }
        for o in &mut out {
            *o /= s;
        }
        out
    }

    /// Barycentric interpolation of `values` at `x` in [-1, 1].
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..self.len() {
            let d = x - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let t = self.bary[j] / d;
            num += t * values[j];
            den += t;
        }
        num / den
    }

    /// Integrates `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for k in 0..self.len() {
            s += self.weights[k] * f(c + h * self.nodes[k]);
        }
        s * h
    }
}

/// Contiguous interval carrying `order` Gauss-Legendre nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// `b - a`, taken from whichever coordinate represents the panel exactly.
    pub width: f64,
    /// Exact `1 - a` and `1 - b`.
    pub ma: f64,
    pub mb: f64,
    pub start: usize,
}

impl Panel {
    /// Distance range `(near, far)` of the panel from boundary `i`.
    pub fn dist_range(&self, i: usize) -> (f64, f64) {
        if i == 0 {
            (self.a, self.b)
        } else {
            (self.mb, self.ma)
        }
    }

    /// Reference coordinate in [-1, 1] of the point at distance `q` from boundary `i`.
    #[inline]
    pub fn param(&self, i: usize, q: f64) -> f64 {
        if i == 0 {
            (2.0 * q - self.a - self.b) / self.width
        } else {
            (self.ma + self.mb - 2.0 * q) / self.width
        }
    }
}

/// Composite Gauss-Legendre grid on `[lo, 1 - lo]`: geometric panels toward both
/// ends and uniform panels in the middle. The interval `[0, lo]` and its mirror
/// are left to tail models.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub rule: GaussLegendre,
    pub panels: Vec<Panel>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `1 - node`, computed without cancellation.
    pub mirror: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub order: usize,
    pub ratio: f64,
    pub lo: f64,
    pub junction: f64,
    pub interior_width: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { order: 12, ratio: 1.5, lo: 1e-12, junction: 1.0 / 16.0, interior_width: 1.0 / 32.0 }
    }
}

impl PanelGrid {
    pub fn new(params: GridParams) -> Self {
        let GridParams { order, ratio, lo, junction, interior_width } = params;
        assert!(ratio > 1.0 && lo > 0.0 && junction < 0.5 && lo < junction);
        let levels = ((junction / lo).ln() / ratio.ln()).ceil() as usize;
        // left edges in distance-to-boundary units, increasing
        let mut left: Vec<f64> = (0..=levels).rev().map(|k| junction / ratio.powi(k as i32)).collect();
        left[levels] = junction;
        let n_mid = ((1.0 - 2.0 * junction) / interior_width).round().max(2.0) as usize;
        let h = (1.0 - 2.0 * junction) / n_mid as f64;

        // (a, b, a', b') with a' = 1 - a etc. to keep mirrored coordinates exact
        let mut bounds: Vec<(f64, f64, f64, f64)> = Vec::new();
        for w in left.windows(2) {
            bounds.push((w[0], w[1], 1.0 - w[0], 1.0 - w[1]));
        }
        for k in 0..n_mid {
            let a = junction + h * k as f64;
            let b = junction + h * (k + 1) as f64;
            bounds.push((a, b, 1.0 - a, 1.0 - b));
        }
        for w in left.windows(2).rev() {
            bounds.push((1.0 - w[1], 1.0 - w[0], w[1], w[0]));
        }

        let rule = GaussLegendre::new(order);
        let mut panels = Vec::with_capacity(bounds.len());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut mirror = Vec::new();
        for &(a, b, ma, mb) in &bounds {
            let width = if a < 0.5 { b - a } else { ma - mb };
            panels.push(Panel { a, b, width, ma, mb, start: nodes.len() });
            let (c, hw) = (0.5 * (a + b), 0.5 * width);
            let (mc, mh) = (0.5 * (ma + mb), 0.5 * (ma - mb));
            for k in 0..order {
                let x = rule.nodes[k];
                nodes.push(c + hw * x);
                mirror.push(mc - mh * x);
                weights.push(hw * rule.weights[k]);
            }
        }
        PanelGrid { rule, panels, nodes, weights, mirror }
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Distance of node `k` to boundary `i`.
    #[inline]
    pub fn dist(&self, k: usize, i: usize) -> f64 {
        if i == 0 {
            self.nodes[k]
        } else {
            self.mirror[k]
        }
    }

    pub fn lo(&self) -> f64 {
        self.panels[0].a
    }

    /// Index of the panel containing `x` (clamped to the first/last panel).
    pub fn locate(&self, x: f64) -> usize {
        let idx = self.panels.partition_point(|pn| pn.b <= x);
        idx.min(self.panels.len() - 1)
    }

    /// Interpolates nodal `values` at `x` inside the covered range.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        if x > 0.5 {
            return self.interpolate_dist(values, 1, 1.0 - x);
        }
        let pn = self.panels[self.locate(x)];
        self.rule.interpolate(&values[pn.start..pn.start + self.order()], pn.param(0, x))
    }

    /// Panel containing the point at distance `q` from boundary `i`.
    pub fn locate_dist(&self, i: usize, q: f64) -> usize {
        if i == 0 {
            self.locate(q)
        } else {
            let idx = self.panels.partition_point(|pn| pn.mb > q);
            idx.min(self.panels.len() - 1)
        }
    }

    /// Interpolant at distance `q` from boundary `i`, using exact mirror coordinates near 1.
    pub fn interpolate_dist(&self, values: &[f64], i: usize, q: f64) -> f64 {
        let pn = self.panels[self.locate_dist(i, q)];
        self.rule.interpolate(&values[pn.start..pn.start + self.order()], pn.param(i, q))
    }

    /// `int` of the interpolant over the points within distance `q` of boundary `i`, excluding `[0, lo)`.
    pub fn integral_near(&self, values: &[f64], panel_totals: &[f64], i: usize, q: f64) -> f64 {
        if q <= self.lo() {
            return 0.0;
        }
        let idx = self.locate_dist(i, q);
        let pn = self.panels[idx];
        let head: f64 = if i == 0 { panel_totals[..idx].iter().sum() } else { panel_totals[idx + 1..].iter().sum() };
        let (near, far) = pn.dist_range(i);
        let qe = q.min(far);
        if qe <= near {
            return head;
        }
        let vals = &values[pn.start..pn.start + self.order()];
        let (t0, t1) = (pn.param(i, near), pn.param(i, qe));
        let part = self.rule.integrate(t0.min(t1), t0.max(t1), |t| self.rule.interpolate(vals, t)) * 0.5 * pn.width;
        head + part
    }

    /// Nodal derivative of nodal `values` by panelwise spectral differentiation.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        let n = self.order();
        let mut out = vec![0.0; values.len()];
        for pn in &self.panels {
            let scale = 2.0 / pn.width;
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += self.rule.diff[i][j] * values[pn.start + j];
                }
                out[pn.start + i] = s * scale;
            }
        }
        out
    }

    /// Cumulative integral of nodal `values` from `lo` to each node, plus the total to `1 - lo`.
    pub fn cumulative(&self, values: &[f64]) -> (Vec<f64>, f64) {
        let n = self.order();
        let mut out = vec![0.0; values.len()];
        let mut acc = 0.0;
        for pn in &self.panels {
            let h = 0.5 * pn.width;
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += self.rule.cumint[i][j] * values[pn.start + j];
                }
                out[pn.start + i] = acc + h * s;
            }
            let mut tot = 0.0;
            for j in 0..n {
                tot += self.rule.weights[j] * values[pn.start + j];
            }
            acc += h * tot;
        }
        (out, acc)
    }

    /// Integral of the interpolant of nodal `values` over `[lo, x]`.
    pub fn partial_integral(&self, values: &[f64], panel_totals: &[f64], x: f64) -> f64 {
        let lo = self.lo();
        if x <= lo {
            return 0.0;
        }
        let idx = self.locate(x);
        let pn = self.panels[idx];
        let head: f64 = panel_totals[..idx].iter().sum();
        let xe = x.min(pn.b);
        let n = self.order();
        let vals = &values[pn.start..pn.start + n];
        let part = self.rule.integrate(pn.a, xe, |y| {
            let t = (2.0 * y - pn.a - pn.b) / (pn.b - pn.a);
            self.rule.interpolate(vals, t)
        });
        head + part
    }

    /// Per-panel integrals of nodal `values`.
    pub fn panel_totals(&self, values: &[f64]) -> Vec<f64> {
        self.panels
            .iter()
            .map(|pn| {
                let h = 0.5 * pn.width;
                (0..self.order()).map(|j| self.rule.weights[j] * values[pn.start + j]).sum::<f64>() * h
            })
            .collect()
    }
}
