//! Gauss hypergeometric function `2F1(a, b; c; z)` for complex `a, b`, real `c` and real `z < 1`.
//!
//! The power series is summed for `|z| <= 1/2`. Beyond that the hypergeometric
//! equation is integrated in `t = -ln(1 - z)` from `z = 1/2`, which stays
//! well conditioned as `z -> 1` and needs no connection formulas.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerance};

const MAX_TERMS: usize = 20_000;

fn check_c(c: f64) -> Result<()> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::HypergeometricPole { c });
    }
    Ok(())
}

/// Direct power series; valid for `|z| < 1`, intended for `|z| <= 1/2`.
pub fn series(a: Complex64, b: Complex64, c: f64, z: f64) -> Result<Complex64> {
    check_c(c)?;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term = term * (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            small += 1;
            if small >= 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        if term.norm() == 0.0 {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNonConvergence { what: format!("2F1({a}, {b}; {c}; {z})"), terms: MAX_TERMS })
}

/// `2F1(a, b; c; z)`.
pub fn hyp2f1(a: Complex64, b: Complex64, c: f64, z: f64) -> Result<Complex64> {
    Ok(hyp2f1_many(a, b, c, &[z])?[0])
}

/// Real-parameter convenience wrapper.
pub fn hyp2f1_real(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    Ok(hyp2f1(Complex64::new(a, 0.0), Complex64::new(b, 0.0), c, z)?.re)
}

/// Evaluates `2F1(a, b; c; z)` at many points, sharing one continuation sweep for `z > 1/2`.
pub fn hyp2f1_many(a: Complex64, b: Complex64, c: f64, zs: &[f64]) -> Result<Vec<Complex64>> {
    let pts: Vec<(f64, f64)> = zs.iter().map(|&z| (z, 1.0 - z)).collect();
    hyp2f1_pairs(a, b, c, &pts)
}

/// Like [`hyp2f1_many`] with points given as `(z, 1 - z)` so that arguments
/// close to 1 keep full relative accuracy in `1 - z`.
pub fn hyp2f1_pairs(a: Complex64, b: Complex64, c: f64, pts: &[(f64, f64)]) -> Result<Vec<Complex64>> {
    check_c(c)?;
    let mut out = vec![Complex64::new(0.0, 0.0); pts.len()];
    let mut far: Vec<usize> = Vec::new();
    for (k, &(z, w)) in pts.iter().enumerate() {
        if !(w > 0.0) || z < -0.5 || !z.is_finite() {
            return Err(Error::InvalidParameter(format!("2F1 argument z = {z} outside [-1/2, 1)")));
        }
        if z <= 0.5 {
            out[k] = series(a, b, c, z)?;
        } else {
            far.push(k);
        }
    }
    if far.is_empty() {
        return Ok(out);
    }
    far.sort_by(|&i, &j| pts[j].1.partial_cmp(&pts[i].1).unwrap());

    let z0 = 0.5;
    let f0 = series(a, b, c, z0)?;
    let df0 = a * b / c * series(a + 1.0, b + 1.0, c + 1.0, z0)?;
    let ab = a * b;
    let apb = a + b;
    // state (F, G) with G = dF/dt = (1 - z) F'
    let g0 = df0 * (1.0 - z0);
    let mut y = [f0.re, f0.im, g0.re, g0.im];
    let mut rhs = |t: f64, y: &[f64; 4]| {
        let om = (-t).exp();
        let z = 1.0 - om;
        let f = Complex64::new(y[0], y[1]);
        let g = Complex64::new(y[2], y[3]);
        let dg = (ab * om * f - (c - apb * z) * g) / z;
        [g.re, g.im, dg.re, dg.im]
    };
    let mut solver = Dopri5::<4>::new(Tolerance { rtol: 1e-13, atol: 1e-300, max_steps: 2_000_000 }, 1e-2);
    let mut t = -(1.0 - z0).ln();
    for k in far {
        let t1 = -pts[k].1.ln();
        solver.advance(&mut rhs, t, &mut y, t1)?;
        t = t1;
        out[k] = Complex64::new(y[0], y[1]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: Complex64, b: Complex64, c: f64, z: f64) -> Complex64 {
        // independent term-by-term summation with a fixed large count
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 0..200_000 {
            let nf = n as f64;
            term = term * (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
            sum += term;
        }
        sum
    }

    #[test]
    fn trivial_argument() {
        let v = hyp2f1(Complex64::new(0.3, 1.2), Complex64::new(0.3, -1.2), 0.6, 0.0).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn log_identity() {
        // F(1,1;2;z) = -ln(1-z)/z
        let v = hyp2f1_real(1.0, 1.0, 2.0, 0.5).unwrap();
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-14);
        let b = brute(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 2.0, 0.5).re;
        assert!((v - b).abs() < 1e-14);
        for &z in &[0.6, 0.9, 0.999, 1.0 - 1e-9] {
            let v = hyp2f1_real(1.0, 1.0, 2.0, z).unwrap();
            let exact = -(-z).ln_1p() / z;
            assert!(((v - exact) / exact).abs() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn continuation_matches_series_and_euler_transform() {
        let a = Complex64::new(0.7, 1.3);
        let b = a.conj();
        let c = 0.6;
        for &z in &[0.55, 0.75, 0.9] {
            let v = hyp2f1(a, b, c, z).unwrap();
            let s = brute(a, b, c, z);
            assert!((v - s).norm() < 1e-10 * s.norm(), "z={z}: {v} vs {s}");
            // Euler: F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z)
            let e = Complex64::new(1.0 - z, 0.0).powc(c - a - b) * brute(c - a, c - b, c, z);
            assert!((v - e).norm() < 1e-10 * e.norm(), "z={z}");
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_polynomial_case() {
        // a = -2 terminates: F(-2, b; c; z) = 1 - 2bz/c + b(b+1)z^2/(c(c+1))
        let (b, c) = (1.5, 0.4);
        for &z in &[0.3, 0.8, 0.99] {
            let exact = 1.0 - 2.0 * b * z / c + b * (b + 1.0) * z * z / (c * (c + 1.0));
            let v = hyp2f1_real(-2.0, b, c, z).unwrap();
            assert!((v - exact).abs() < 1e-10 * exact.abs().max(1.0), "z={z}");
        }
    }

    #[test]
    fn pole_rejected() {
        assert!(matches!(hyp2f1_real(1.0, 1.0, -2.0, 0.3), Err(Error::HypergeometricPole { .. })));
        assert!(matches!(hyp2f1_real(1.0, 1.0, 0.0, 0.3), Err(Error::HypergeometricPole { .. })));
    }

    #[test]
    fn batch_matches_single() {
        let a = Complex64::new(-0.4, 0.0);
        let b = Complex64::new(1.9, 0.0);
        let zs = [0.95, 0.2, 0.7, 0.5, 0.999999];
        let many = hyp2f1_many(a, b, 0.6, &zs).unwrap();
        for (k, &z) in zs.iter().enumerate() {
            let one = hyp2f1(a, b, 0.6, z).unwrap();
            assert!((many[k] - one).norm() < 1e-11 * one.norm());
        }
    }
}
