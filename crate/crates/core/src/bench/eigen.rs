//! Dense symmetric eigenvalue solvers (eigenvalues only).

use crate::error::{Error, Result};

/// Cyclic Jacobi rotations on a row-major symmetric matrix until the
/// off-diagonal Frobenius norm falls below `tol · ‖A‖_F`. Returns the
/// eigenvalues in ascending order.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize, tol: f64) -> Result<Vec<f64>> {
    crate::error::check_dim(n * n, a.len())?;
    let total: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = off(&a) <= tol * total;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns p and q
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                // rows p and q
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        converged = off(&a) <= tol * total;
    }
    if !converged {
        return Err(Error::InvalidArgument("Jacobi eigenvalue iteration did not converge".into()));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

/// Householder reduction of a row-major symmetric matrix to tridiagonal
/// form. Returns the diagonal and the sub-diagonal (last entry zero).
pub fn tridiagonalize(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let norm = (m..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        d[k] = a[k * n + k];
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[m * n + k];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in m..n {
            v[i] = a[i * n + k];
        }
        v[m] -= alpha;
        let vn = (m..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vn == 0.0 {
            e[k] = x0;
            continue;
        }
        for i in m..n {
            v[i] /= vn;
        }
        // p = A v, K = vᵀ p, q = p − K v on the trailing block
        for i in m..n {
            let row = &a[i * n + m..i * n + n];
            p[i] = row.iter().zip(&v[m..n]).map(|(x, y)| x * y).sum();
        }
        let kk: f64 = (m..n).map(|i| v[i] * p[i]).sum();
        for i in m..n {
            p[i] -= kk * v[i];
        }
        for i in m..n {
            let (vi, qi) = (v[i], p[i]);
            let row = &mut a[i * n + m..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                *x -= 2.0 * (vi * p[m + j] + qi * v[m + j]);
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        d[n - 1] = a[(n - 1) * n + n - 1];
    }
    (d, e)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e` by implicit QL with Wilkinson shifts, ascending.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    crate::error::check_dim(n, e.len())?;
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::InvalidArgument("tridiagonal QL iteration did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(d)
}

/// Size up to which [`symmetric_eigenvalues`] uses Jacobi rotations.
pub const JACOBI_LIMIT: usize = 256;

/// All eigenvalues of a dense symmetric matrix, ascending: cyclic Jacobi for
/// small matrices, Householder tridiagonalization with QL above
/// [`JACOBI_LIMIT`].
pub fn symmetric_eigenvalues(a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if n <= JACOBI_LIMIT {
        jacobi_eigenvalues(a, n, 1e-10)
    } else {
        let (d, e) = tridiagonalize(a, n);
        tridiagonal_eigenvalues(d, e)
    }
}
