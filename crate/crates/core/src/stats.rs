//! Kolmogorov-Smirnov tests and batch-means autocorrelation times.

/// Kolmogorov distribution tail `P(K > t) = 2 sum (-1)^(k-1) exp(-2 k^2 t^2)`.
pub fn kolmogorov_tail(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.3 {
        // the alternating series converges slowly here; use the theta-function form
        let s: f64 = (1..=20)
            .map(|k| {
                let a = (2 * k - 1) as f64;
                (-a * a * std::f64::consts::PI.powi(2) / (8.0 * t * t)).exp()
            })
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size entering the p-value.
    pub n: f64,
}

/// One-sample test of `samples` against the continuous distribution function `cdf`, with the
/// small-sample scaling `sqrt(n) + 0.12 + 0.11 / sqrt(n)`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - k as f64 / n).max((k + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d), n }
}

/// Two-sample test with effective size `n m / (n + m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xb.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sn = ne.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d), n: ne }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Integrated autocorrelation time, in samples, by batch means with `batches` batches:
/// `tau = b Var(batch means) / Var(x)` for batch length `b`. `None` for too-short series.
pub fn batch_means_iat(xs: &[f64], batches: usize) -> Option<f64> {
    let b = xs.len() / batches;
    if batches < 2 || b < 2 {
        return None;
    }
    let v = variance(&xs[..b * batches]);
    if !(v > 0.0) {
        return None;
    }
    let means: Vec<f64> = xs[..b * batches].chunks(b).map(mean).collect();
    Some((b as f64 * variance(&means) / v).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_tail_reference_values() {
        // scipy.special.kolmogorov
        assert!((kolmogorov_tail(1.0) - 0.26999967167735456).abs() < 1e-12);
        assert!((kolmogorov_tail(1.628) - 0.009975522431181053).abs() < 1e-12);
        assert!((kolmogorov_tail(0.5) - 0.9639452436648751).abs() < 1e-10);
        assert!((kolmogorov_tail(0.25) - 0.9999999731761899).abs() < 1e-12);
        assert!((kolmogorov_tail(0.2) - 0.999999999999495).abs() < 1e-12);
    }

    #[test]
    fn uniform_samples_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
        assert!(r.p_value > 0.01, "{r:?}");
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.9).collect();
        assert!(ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).p_value < 1e-6);
        let ys: Vec<f64> = (0..4000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&xs, &ys).p_value > 0.01);
        assert!(ks_two_sample(&shifted, &ys).p_value < 1e-6);
    }

    #[test]
    fn iat_of_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi: f64 = 0.8;
        let mut x = 0.0;
        let xs: Vec<f64> = (0..400_000)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                x = phi * x + z;
                x
            })
            .collect();
        let tau = batch_means_iat(&xs, 50).unwrap();
        let exact = (1.0 + phi) / (1.0 - phi);
        assert!((tau / exact - 1.0).abs() < 0.15, "{tau} vs {exact}");
    }
}
