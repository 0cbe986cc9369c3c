//! Small dense and tridiagonal solvers.

/// Solves a tridiagonal system without pivoting (stable for diagonally dominant matrices).
/// `sub[i]` multiplies `x[i-1]` in row `i`, `sup[i]` multiplies `x[i+1]`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    c[0] = if n > 1 { sup[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Least squares `min ||W (A x - b)||` by Householder QR. Rows of `a` are observations.
/// Returns the coefficients and the weighted residual norm.
pub fn lstsq(a: &[Vec<f64>], b: &[f64], w: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = a.len();
    let n = a.first()?.len();
    if m < n {
        return None;
    }
    let mut r: Vec<Vec<f64>> = a.iter().zip(w).map(|(row, &wi)| row.iter().map(|x| x * wi).collect()).collect();
    let mut y: Vec<f64> = b.iter().zip(w).map(|(x, wi)| x * wi).collect();
    // column scaling for conditioning
    let mut scale = vec![1.0; n];
    for j in 0..n {
        let s = r.iter().map(|row| row[j] * row[j]).sum::<f64>().sqrt();
        if s > 0.0 {
            scale[j] = s;
            for row in r.iter_mut() {
                row[j] /= s;
            }
        }
    }
    for k in 0..n {
        let norm = (k..m).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[i][j]).sum();
            let f = 2.0 * dot / vn;
            for i in k..m {
                r[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * y[i]).sum();
        let f = 2.0 * dot / vn;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = y[k];
        for j in k + 1..n {
            s -= r[k][j] * x[j];
        }
        if r[k][k].abs() < 1e-14 {
            return None;
        }
        x[k] = s / r[k][k];
    }
    let resid = (n..m).map(|i| y[i] * y[i]).sum::<f64>().sqrt();
    for j in 0..n {
        x[j] /= scale[j];
    }
    Some((x, resid))
}

/// Solves a 2x2 system; `None` when singular.
pub fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if det.abs() <= 1e-300 || det.abs() < 1e-15 * scale * scale {
        return None;
    }
    Some([(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves() {
        let sub = [0.0, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i] + if i > 0 { sub[i] * x[i - 1] } else { 0.0 } + if i < 3 { sup[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let got = thomas(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn lstsq_recovers_polynomial() {
        let xs: Vec<f64> = (0..20).map(|k| k as f64 / 19.0).collect();
        let a: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let b: Vec<f64> = xs.iter().map(|&x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let (c, r) = lstsq(&a, &b, &vec![1.0; 20]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
        assert!(r < 1e-12);
    }
}
