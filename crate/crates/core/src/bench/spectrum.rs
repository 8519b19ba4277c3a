use serde::{Deserialize, Serialize};

use super::eigen::{symmetric_eigenvalues, tridiagonal_eigenvalues};
use crate::error::{check_dim, Error, Result};
use crate::krylov::{pcg_split, SolveConfig};
use crate::sparse::{dot, norm2, LowerTriangular, SparseSpd};

/// Largest dimension accepted by the dense method.
pub const DENSE_LIMIT: usize = 1000;
const LANCZOS_TOL: f64 = 1e-4;
const INNER_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Dense,
    Extremal,
}

impl std::str::FromStr for SpectrumMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(SpectrumMethod::Dense),
            "extremal" => Ok(SpectrumMethod::Extremal),
            _ => Err(Error::InvalidArgument(format!(
                "unknown eigenvalue method '{s}' (expected dense|extremal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub method: SpectrumMethod,
    /// Every eigenvalue in ascending order (dense method only).
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// False when an extremal estimate stopped before reaching its target;
    /// the bounds are then the best bracket found.
    pub converged: bool,
}

/// `L⁻¹ A L⁻ᵀ` as a dense row-major matrix, symmetrized.
pub fn preconditioned_dense(a: &SparseSpd, l: Option<&LowerTriangular>) -> Result<Vec<f64>> {
    let n = a.n();
    let Some(l) = l else {
        return Ok(a.to_dense());
    };
    check_dim(n, l.n())?;
    let mut m = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        l.backward_solve_in_place(&mut col);
        a.spmv_into(&col, &mut out);
        l.forward_solve_in_place(&mut out);
        for i in 0..n {
            m[i * n + j] = out[i];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    Ok(m)
}

/// Estimates of the largest eigenvalue by Lanczos with full
/// reorthogonalization. Returns `(estimate, converged)`; Ritz values never
/// exceed the true value.
pub fn lanczos_max(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]) -> Result<()>,
    max_steps: usize,
    tol: f64,
) -> Result<(f64, bool)> {
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    // deterministic, generic start vector
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 113) as f64 / 113.0).collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|v| *v /= s);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut w = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    let steps = max_steps.min(n).max(1);
    for j in 0..steps {
        apply(&basis[j], &mut w)?;
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        for _ in 0..2 {
            for qi in &basis {
                let c = dot(&w, qi);
                w.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm2(&w);
        let mut e = beta.clone();
        e.push(0.0);
        let theta = *tridiagonal_eigenvalues(alpha.clone(), e)?.last().expect("nonempty");
        if !theta.is_finite() {
            return Err(Error::DivergedForward { stage: "lanczos" });
        }
        history.push(theta);
        // invariant subspace found: the Ritz value is exact
        if b <= 1e-14 * theta.abs().max(1.0) {
            return Ok((theta, true));
        }
        let k = history.len();
        if k >= 4 && (0..3).all(|d| (history[k - 1 - d] - history[k - 2 - d]).abs() <= tol * 1e-3 * theta.abs()) {
            return Ok((theta, true));
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Ok((*history.last().expect("at least one step"), history.len() == n))
}

/// Eigenvalue analysis of `A` or of the split-preconditioned operator
/// `L⁻¹ A L⁻ᵀ`.
pub fn spectrum(a: &SparseSpd, l: Option<&LowerTriangular>, method: SpectrumMethod) -> Result<SpectrumReport> {
    let n = a.n();
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    if let Some(l) = l {
        check_dim(n, l.n())?;
    }
    match method {
        SpectrumMethod::Dense => {
            if n > DENSE_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "dense spectrum is limited to n <= {DENSE_LIMIT}, got {n}"
                )));
            }
            let eig = symmetric_eigenvalues(preconditioned_dense(a, l)?, n)?;
            let (lo, hi) = (eig[0], eig[n - 1]);
            Ok(SpectrumReport {
                method,
                kappa: kappa_of(lo, hi),
                lambda_min: lo,
                lambda_max: hi,
                eigenvalues: eig,
                converged: true,
            })
        }
        SpectrumMethod::Extremal => {
            let identity;
            let l = match l {
                Some(l) => l,
                None => {
                    identity = LowerTriangular::identity(n);
                    &identity
                }
            };
            let steps = 300;
            let (hi, ok_hi) = lanczos_max(n, |v, out| apply_operator(a, l, v, out), steps, LANCZOS_TOL)?;
            // λ_min(M) = 1 / λ_max(M⁻¹) with M⁻¹ = Lᵀ A⁻¹ L
            let inner = SolveConfig {
                rtol: INNER_RTOL,
                max_iters: Some(20 * n),
                record_history: false,
            };
            let lt = l.csr().transpose();
            let (inv, ok_lo) = lanczos_max(
                n,
                |v, out| {
                    let lv = l.mul_vec(v)?;
                    let r = pcg_split(a, &lv, l, &inner)?;
                    if !r.converged {
                        return Err(Error::DivergedForward { stage: "inner solve" });
                    }
                    lt.spmv_into(&r.x, out);
                    Ok(())
                },
                steps,
                LANCZOS_TOL,
            )?;
            let lo = 1.0 / inv;
            Ok(SpectrumReport {
                method,
                eigenvalues: Vec::new(),
                kappa: kappa_of(lo, hi),
                lambda_min: lo,
                lambda_max: hi,
                converged: ok_hi && ok_lo,
            })
        }
    }
}

#[derive(Debug, Serialize)]
struct SpectrumRow<'a> {
    label: &'a str,
    method: SpectrumMethod,
    quantity: &'static str,
    index: Option<usize>,
    value: f64,
}

/// Tidy CSV with one row per eigenvalue (dense) followed by `lambda_min`,
/// `lambda_max` and `kappa`. `label` names the analyzed operator.
pub fn write_spectrum_csv(reports: &[(&str, &SpectrumReport)], path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if reports.is_empty() {
        w.write_record(["label", "method", "quantity", "index", "value"])?;
    }
    for &(label, r) in reports {
        let row = |quantity, index, value| SpectrumRow {
            label,
            method: r.method,
            quantity,
            index,
            value,
        };
        for (i, &v) in r.eigenvalues.iter().enumerate() {
            w.serialize(row("eigenvalue", Some(i), v))?;
        }
        w.serialize(row("lambda_min", None, r.lambda_min))?;
        w.serialize(row("lambda_max", None, r.lambda_max))?;
        w.serialize(row("kappa", None, r.kappa))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn kappa_of(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        (hi / lo).max(1.0)
    } else {
        f64::INFINITY
    }
}

/// `out = L⁻¹ A L⁻ᵀ v`.
pub fn apply_operator(a: &SparseSpd, l: &LowerTriangular, v: &[f64], out: &mut [f64]) -> Result<()> {
    let mut t = v.to_vec();
    l.backward_solve_in_place(&mut t);
    a.spmv_into(&t, out);
    l.forward_solve_in_place(out);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_kappa() {
        let a = SparseSpd::from_diagonal(&[1.0, 10.0]);
        let r = spectrum(&a, None, SpectrumMethod::Dense).unwrap();
        assert_eq!(r.kappa, 10.0);
        assert_eq!(r.eigenvalues, vec![1.0, 10.0]);
        let r = spectrum(&a, None, SpectrumMethod::Extremal).unwrap();
        assert!((r.kappa - 10.0).abs() < 1e-9);
    }

    #[test]
    fn exact_factor_gives_unit_kappa() {
        let a = SparseSpd::from_dense(3, &[4.0, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0]).unwrap();
        // dense Cholesky
        let d = a.to_dense();
        let mut l = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                l[i * 3 + j] = if i == j { (d[i * 3 + i] - s).sqrt() } else { (d[i * 3 + j] - s) / l[j * 3 + j] };
            }
        }
        let l = LowerTriangular::from_dense(3, &l).unwrap();
        let r = spectrum(&a, Some(&l), SpectrumMethod::Dense).unwrap();
        assert!((r.kappa - 1.0).abs() < 1e-8);
        let r = spectrum(&a, Some(&l), SpectrumMethod::Extremal).unwrap();
        assert!((r.kappa - 1.0).abs() < 1e-8);
    }

    #[test]
    fn csv_rows() {
        let a = SparseSpd::from_diagonal(&[1.0, 4.0]);
        let r = spectrum(&a, None, SpectrumMethod::Dense).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("spectrum.csv");
        write_spectrum_csv(&[("none", &r)], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "label,method,quantity,index,value");
        assert_eq!(lines[1], "none,dense,eigenvalue,0,1.0");
        assert_eq!(lines[5], "none,dense,kappa,,4.0");
    }

    #[test]
    fn dense_limit_enforced() {
        let a = SparseSpd::identity(DENSE_LIMIT + 1);
        assert!(spectrum(&a, None, SpectrumMethod::Dense).is_err());
    }
}
