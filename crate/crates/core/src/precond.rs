//! Classical split preconditioners: identity, Jacobi and no-fill incomplete
//! Cholesky. Every preconditioner is expressed as a lower-triangular factor
//! so that a single solver path serves all of them.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{Csr, LowerTriangular, SparseSpd};

#[derive(Debug, Clone)]
pub struct PrecondResult {
    pub l: LowerTriangular,
    /// Seconds spent building the factor.
    pub p_time: f64,
    /// `1 − nnz(L)/n²`.
    pub sparsity: f64,
}

impl PrecondResult {
    pub(crate) fn new(l: LowerTriangular, p_time: f64) -> Self {
        let sparsity = l.sparsity();
        Self { l, p_time, sparsity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    None,
    Jacobi,
    Ic0,
    NeuralIf,
}

impl PrecondKind {
    pub const ALL: [PrecondKind; 4] = [
        PrecondKind::None,
        PrecondKind::Jacobi,
        PrecondKind::Ic0,
        PrecondKind::NeuralIf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrecondKind::None => "none",
            PrecondKind::Jacobi => "jacobi",
            PrecondKind::Ic0 => "ic0",
            PrecondKind::NeuralIf => "neuralif",
        }
    }
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrecondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrecondKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown preconditioner '{s}' (expected none|jacobi|ic0|neuralif)"
                ))
            })
    }
}

pub fn identity(n: usize) -> PrecondResult {
    let start = Instant::now();
    let l = LowerTriangular::identity(n);
    PrecondResult::new(l, start.elapsed().as_secs_f64())
}

/// `L = diag(√a_ii)`, so that `L Lᵀ = diag(A)`.
pub fn jacobi(a: &SparseSpd) -> Result<PrecondResult> {
    let start = Instant::now();
    let diag = a.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(Error::NotSpd { row, value });
    }
    let roots: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
    let l = LowerTriangular::from_diagonal(&roots)?;
    Ok(PrecondResult::new(l, start.elapsed().as_secs_f64()))
}

/// No-fill incomplete Cholesky on the lower-triangle pattern of `a`.
///
/// Row-oriented (up-looking): row `i` of `L` is computed from the already
/// finished rows `j < i`. Entries outside the pattern are dropped, never
/// stored. A non-positive pivot aborts with [`Error::Ic0Breakdown`]; no
/// shift or retry is attempted.
pub fn ic0(a: &SparseSpd) -> Result<PrecondResult> {
    let start = Instant::now();
    let l = ic0_factor(a)?;
    Ok(PrecondResult::new(l, start.elapsed().as_secs_f64()))
}

pub(crate) fn ic0_factor(a: &SparseSpd) -> Result<LowerTriangular> {
    let lower = a.lower_triangle();
    let n = lower.n();
    let row_ptr = lower.row_ptr();
    let col_idx = lower.col_idx();
    let mut values = lower.values().to_vec();

    // work[k] holds L_ik for the row being factored; marker says which row owns it
    let mut work = vec![0.0; n];
    let mut marker = vec![usize::MAX; n];

    for i in 0..n {
        let (lo, diag) = (row_ptr[i], row_ptr[i + 1] - 1);
        debug_assert_eq!(col_idx[diag], i);
        for p in lo..=diag {
            marker[col_idx[p]] = i;
            work[col_idx[p]] = values[p];
        }
        let mut sum_sq = 0.0;
        for p in lo..diag {
            let j = col_idx[p];
            // L_ij = (A_ij − Σ_{k<j} L_ik L_jk) / L_jj
            let (jlo, jdiag) = (row_ptr[j], row_ptr[j + 1] - 1);
            let mut s = work[j];
            for q in jlo..jdiag {
                let k = col_idx[q];
                if marker[k] == i {
                    s -= work[k] * values[q];
                }
            }
            let l_ij = s / values[jdiag];
            work[j] = l_ij;
            values[p] = l_ij;
            sum_sq += l_ij * l_ij;
        }
        let pivot = work[i] - sum_sq;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Ic0Breakdown { column: i, pivot });
        }
        values[diag] = pivot.sqrt();
    }
    LowerTriangular::from_csr(Csr::from_raw(
        n,
        row_ptr.to_vec(),
        col_idx.to_vec(),
        values,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for k in PrecondKind::ALL {
            assert_eq!(k.name().parse::<PrecondKind>().unwrap(), k);
        }
        assert!("ilu".parse::<PrecondKind>().is_err());
    }

    #[test]
    fn identity_factor() {
        assert_eq!(identity(1).l.to_dense(), vec![1.0]);
        assert_eq!(identity(3).l, LowerTriangular::identity(3));
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(&SparseSpd::identity(2)).unwrap().l, LowerTriangular::identity(2));
        let r = jacobi(&SparseSpd::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(r.l.to_dense(), vec![2.0, 0.0, 0.0, 3.0]);
        let a = SparseSpd::from_dense(2, &[4.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(jacobi(&a).unwrap().l.to_dense(), vec![2.0, 0.0, 0.0, 5f64.sqrt()]);
        assert_eq!(r.sparsity, 0.5);
    }

    #[test]
    fn jacobi_rejects_nonpositive_diagonal() {
        let a = SparseSpd::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(jacobi(&a), Err(Error::NotSpd { row: 1, .. })));
    }

    #[test]
    fn ic0_examples() {
        let a = SparseSpd::from_dense(2, &[4.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(ic0(&a).unwrap().l.to_dense(), vec![2.0, 0.0, 1.0, 2.0]);
        let d = SparseSpd::from_diagonal(&[4.0, 9.0]);
        assert_eq!(ic0(&d).unwrap().l.to_dense(), vec![2.0, 0.0, 0.0, 3.0]);
    }

    /// Kershaw's matrix: SPD, yet the no-fill factorization meets a negative
    /// pivot in the last column.
    #[test]
    fn ic0_breakdown_on_kershaw_matrix() {
        #[rustfmt::skip]
        let k = [
            3.0, -2.0, 0.0, 2.0,
            -2.0, 3.0, -2.0, 0.0,
            0.0, -2.0, 3.0, -2.0,
            2.0, 0.0, -2.0, 3.0,
        ];
        let a = SparseSpd::from_dense(4, &k).unwrap();
        match ic0(&a) {
            Err(Error::Ic0Breakdown { column, pivot }) => {
                assert_eq!(column, 3);
                assert!(pivot < 0.0);
            }
            other => panic!("expected breakdown, got {other:?}"),
        }
    }

    /// For n = 3 the only droppable fill entry is (2,1); dropping it can only
    /// enlarge the last pivot, so no 3×3 SPD matrix breaks IC(0). Brute force
    /// over small integer matrices with a zero at (2,1) confirms it.
    #[test]
    fn no_three_by_three_breakdown_exists() {
        let range = -3i32..=3;
        for d0 in 1..=4 {
            for d1 in 1..=4 {
                for d2 in 1..=4 {
                    for a10 in range.clone() {
                        for a20 in range.clone() {
                            let m = [
                                d0 as f64, a10 as f64, a20 as f64,
                                a10 as f64, d1 as f64, 0.0,
                                a20 as f64, 0.0, d2 as f64,
                            ];
                            if !is_spd_3x3(&m) {
                                continue;
                            }
                            let a = SparseSpd::from_dense(3, &m).unwrap();
                            assert!(ic0(&a).is_ok(), "unexpected breakdown for {m:?}");
                        }
                    }
                }
            }
        }
    }

    // Sylvester's criterion.
    fn is_spd_3x3(m: &[f64; 9]) -> bool {
        let m1 = m[0];
        let m2 = m[0] * m[4] - m[1] * m[3];
        let m3 = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]);
        m1 > 0.0 && m2 > 0.0 && m3 > 0.0
    }
}
