//! Hypergeometric closed form for neutral Wright-Fisher models with unbiased jumps.

use std::sync::Arc;

use num_complex::Complex64;

use super::{Method, StationaryDensity};
use crate::error::{Error, Result};
use crate::hyp2f1::hyp2f1_pairs;
use crate::model::neutral;
use crate::quad::PanelGrid;

/// Roots of `x^2 - (3 - 2(mu0 + mu1)) x + 2(lambda + 1 - mu0 - mu1)`.
pub fn closed_form_roots(mu0: f64, mu1: f64, lambda: f64) -> (Complex64, Complex64) {
    let s = 3.0 - 2.0 * (mu0 + mu1);
    let p = 2.0 * (lambda + 1.0 - mu0 - mu1);
    let disc = Complex64::new(s * s - 4.0 * p, 0.0).sqrt();
    ((s + disc) / 2.0, (s - disc) / 2.0)
}

/// Unnormalized density at points given as `(p, 1 - p)` pairs, and the largest relative
/// imaginary residue of the bracketed hypergeometric combination.
pub fn closed_form_unnormalized(mu0: f64, mu1: f64, lambda: f64, pts: &[(f64, f64)]) -> Result<(Vec<f64>, f64)> {
    if !(mu0 > 0.0 && mu1 > 0.0 && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "closed form needs mu0, mu1 > 0 and lambda >= 0 (got {mu0}, {mu1}, {lambda})"
        )));
    }
    let (a, b) = closed_form_roots(mu0, mu1, lambda);
    let (a1, b1) = (1.0 - a, 1.0 - b);
    let swapped: Vec<(f64, f64)> = pts.iter().map(|&(p, q)| (q, p)).collect();
    let f0 = hyp2f1_pairs(a1, b1, 2.0 * mu0, pts)?;
    let f1 = hyp2f1_pairs(a1, b1, 2.0 * mu1, &swapped)?;
    let mut residue: f64 = 0.0;
    let values = pts
        .iter()
        .enumerate()
        .map(|(k, &(p, q))| {
            let bracket = mu0 * f0[k] + mu1 * f1[k];
            residue = residue.max(bracket.im.abs() / bracket.re.abs());
            p.powf(2.0 * mu0 - 1.0) * q.powf(2.0 * mu1 - 1.0) * bracket.re
        })
        .collect();
    Ok((values, residue))
}

/// Normalized closed-form density on the nodes of `grid`.
pub fn stationary_neutral_closed_form(mu0: f64, mu1: f64, lambda: f64, grid: Arc<PanelGrid>) -> Result<StationaryDensity> {
    let model = neutral(mu0, mu1, lambda)?;
    let pts: Vec<(f64, f64)> = grid.nodes.iter().zip(&grid.mirror).map(|(&p, &q)| (p, q)).collect();
    let (values, residue) = closed_form_unnormalized(mu0, mu1, lambda, &pts)?;
    if residue > 1e-10 {
        return Err(Error::Internal(format!("closed-form bracket has imaginary residue {residue:.3e}")));
    }
    if let Some(k) = values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::PositivityFloor { point: pts[k].0, value: values[k] });
    }
    let mut d = StationaryDensity::from_panels(grid, values, None, Method::ClosedForm);
    d.diagnostics.residual = residue;
    d.attach(&model);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_reduce_at_zero_rate() {
        let (a, b) = closed_form_roots(0.3, 0.45, 0.0);
        let mut r = [a.re, b.re];
        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((r[0] - 0.5).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
        assert_eq!(a.im, 0.0);
    }

    #[test]
    fn complex_roots_give_real_bracket() {
        let (a, b) = closed_form_roots(0.3, 0.4, 5.0);
        assert!(a.im.abs() > 0.1);
        assert!((a - b.conj()).norm() < 1e-14);
        let pts: Vec<(f64, f64)> = [0.01, 0.3, 0.7, 0.999].iter().map(|&p| (p, 1.0 - p)).collect();
        let (v, res) = closed_form_unnormalized(0.3, 0.4, 5.0, &pts).unwrap();
        assert!(res < 1e-12);
        assert!(v.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn root_order_is_immaterial() {
        let pts: Vec<(f64, f64)> = [0.02, 0.4, 0.9].iter().map(|&p| (p, 1.0 - p)).collect();
        for (mu0, mu1, lambda) in [(0.3, 0.45, 1.0), (0.3, 0.4, 5.0)] {
            let (a, b) = closed_form_roots(mu0, mu1, lambda);
            for c in [2.0 * mu0, 2.0 * mu1] {
                let ab = hyp2f1_pairs(1.0 - a, 1.0 - b, c, &pts).unwrap();
                let ba = hyp2f1_pairs(1.0 - b, 1.0 - a, c, &pts).unwrap();
                for (x, y) in ab.iter().zip(&ba) {
                    assert!((x - y).norm() < 1e-12 * x.norm());
                }
            }
        }
    }
}
