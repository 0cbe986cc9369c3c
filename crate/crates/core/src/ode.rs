//! Adaptive Dormand-Prince 5(4) integration for small fixed-size systems.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-12, atol: 1e-300, max_steps: 1_000_000 }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Stateful integrator that carries its step size between calls to [`Dopri5::advance`].
pub struct Dopri5<const N: usize> {
    pub tol: Tolerance,
    pub h: f64,
    pub steps: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(tol: Tolerance, h0: f64) -> Self {
        Dopri5 { tol, h: h0, steps: 0 }
    }

    /// Advances `y` from `t0` to `t1` (either direction).
    pub fn advance<F>(&mut self, f: &mut F, t0: f64, y: &mut [f64; N], t1: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut h = self.h.abs().max(1e-300) * dir;
        let mut k1 = f(t, y);
        while (t1 - t) * dir > 0.0 {
            if self.steps >= self.tol.max_steps {
                return Err(Error::Integrator { stage: "dopri5", detail: format!("step limit at t = {t}") });
            }
            let last = (t + h - t1) * dir >= 0.0;
            let hs = if last { t1 - t } else { h };
            let k2 = f(t + C2 * hs, &axpy(y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &axpy(y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + hs, &axpy(y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let yn = axpy(y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &yn);
            let mut err = 0.0_f64;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(yn[i].abs());
                err = err.max((e / sc).abs());
            }
            self.steps += 1;
            if !err.is_finite() {
                h *= 0.2;
                if h.abs() < 1e-300 {
                    return Err(Error::Integrator { stage: "dopri5", detail: format!("blow-up at t = {t}") });
                }
                continue;
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                *y = yn;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = hs * fac;
                } else {
                    h = h.abs().max((hs * fac).abs()) * dir;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).max(0.1);
            }
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Integrator { stage: "dopri5", detail: format!("non-finite state at t = {t}") });
            }
        }
        self.h = h;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let mut solver = Dopri5::<2>::new(Tolerance::default(), 1e-3);
        let mut y = [1.0, 0.0];
        let mut f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        solver.advance(&mut f, 0.0, &mut y, 10.0).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
        solver.advance(&mut f, 10.0, &mut y, 0.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn order_of_accuracy() {
        // error at fixed loose tolerances shrinks as rtol shrinks
        let run = |rtol: f64| {
            let mut s = Dopri5::<1>::new(Tolerance { rtol, atol: 0.0, max_steps: 100_000 }, 0.1);
            let mut y = [1.0];
            s.advance(&mut |t: f64, y: &[f64; 1]| [y[0] * t.cos()], 0.0, &mut y, 5.0).unwrap();
            (y[0] - 5f64.sin().exp()).abs()
        };
        assert!(run(1e-10) < run(1e-6));
        assert!(run(1e-10) < 1e-8);
    }
}
