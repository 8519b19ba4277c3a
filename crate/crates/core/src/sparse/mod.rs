//! Sparse storage and kernels: symmetric problem matrices, lower-triangular
//! factors, products, triangular solves and Matrix Market I/O.

mod csr;
pub mod io;

pub use csr::Csr;

use crate::error::{check_dim, Error, Result};

/// Symmetric positive-definite matrix with both triangles stored.
///
/// Construction checks exact structural and numerical symmetry and that every
/// diagonal entry is stored. Positive definiteness itself is not verified; a
/// violation surfaces later as a solver breakdown or factorization failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    csr: Csr,
}

impl SparseSpd {
    pub fn from_csr(csr: Csr) -> Result<Self> {
        let n = csr.n();
        for i in 0..n {
            if csr.find(i, i).is_none() {
                return Err(Error::InvalidStructure(format!(
                    "diagonal entry ({i}, {i}) is not stored"
                )));
            }
            let (cols, vals) = csr.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j > i {
                    match csr.get(j, i) {
                        Some(w) if w == v => {}
                        Some(w) => {
                            return Err(Error::InvalidStructure(format!(
                                "entries ({i}, {j}) = {v} and ({j}, {i}) = {w} differ"
                            )))
                        }
                        None => {
                            return Err(Error::InvalidStructure(format!(
                                "entry ({i}, {j}) has no mirror ({j}, {i})"
                            )))
                        }
                    }
                } else if j < i && csr.find(j, i).is_none() {
                    return Err(Error::InvalidStructure(format!(
                        "entry ({i}, {j}) has no mirror ({j}, {i})"
                    )));
                }
            }
        }
        Ok(Self { csr })
    }

    /// Builds from lower-triangle coordinates (`col <= row`), mirroring
    /// off-diagonal entries. Duplicates are summed.
    pub fn from_lower_triplets<I>(n: usize, lower: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries = Vec::new();
        for (i, j, v) in lower {
            if j > i {
                return Err(Error::InvalidStructure(format!(
                    "entry ({i}, {j}) is above the diagonal"
                )));
            }
            entries.push((i, j, v));
            if i != j {
                entries.push((j, i, v));
            }
        }
        Self::from_csr(Csr::from_triplets(n, entries)?)
    }

    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        Self::from_csr(Csr::from_dense(n, dense)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            csr: Csr::identity(n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            csr: Csr::diagonal_matrix(diag),
        }
    }

    pub fn n(&self) -> usize {
        self.csr.n()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn csr(&self) -> &Csr {
        &self.csr
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.csr.get(i, j)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.csr.diagonal()
    }

    /// Fraction of the n² positions that are not stored.
    pub fn sparsity(&self) -> f64 {
        let n = self.n() as f64;
        1.0 - self.nnz() as f64 / (n * n)
    }

    pub fn lower_triangle(&self) -> Csr {
        self.csr.lower_triangle()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), x.len())?;
        let mut y = vec![0.0; self.n()];
        self.csr.spmv_into(x, &mut y);
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        self.csr.spmv_into(x, y)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.csr.to_dense()
    }

    /// Symmetric permutation `B = P A Pᵀ` with `B[perm[i], perm[j]] = A[i, j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_dim(self.n(), perm.len())?;
        let entries = self.csr.iter().map(|(i, j, v)| (perm[i], perm[j], v));
        Self::from_csr(Csr::from_triplets(self.n(), entries)?)
    }
}

/// Lower-triangular factor with strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    csr: Csr,
}

impl LowerTriangular {
    pub fn from_csr(csr: Csr) -> Result<Self> {
        for i in 0..csr.n() {
            let (cols, vals) = csr.row(i);
            if cols.iter().any(|&j| j > i) {
                return Err(Error::InvalidStructure(format!(
                    "row {i} has an entry above the diagonal"
                )));
            }
            // columns are sorted, so the diagonal is the last entry of the row
            match cols.last() {
                Some(&j) if j == i => {
                    let d = *vals.last().unwrap();
                    if !(d > 0.0 && d.is_finite()) {
                        return Err(Error::IllFormedFactor { row: i, value: d });
                    }
                }
                _ => return Err(Error::IllFormedFactor { row: i, value: 0.0 }),
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidStructure(format!(
                    "row {i} has a non-finite entry"
                )));
            }
        }
        Ok(Self { csr })
    }

    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        Self::from_csr(Csr::from_dense(n, dense)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            csr: Csr::identity(n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_csr(Csr::diagonal_matrix(diag))
    }

    pub fn n(&self) -> usize {
        self.csr.n()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn csr(&self) -> &Csr {
        &self.csr
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.csr.get(i, j)
    }

    pub fn sparsity(&self) -> f64 {
        let n = self.n() as f64;
        1.0 - self.nnz() as f64 / (n * n)
    }

    /// Solves `L y = b`.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), b.len())?;
        let mut y = b.to_vec();
        self.forward_solve_in_place(&mut y);
        Ok(y)
    }

    /// Solves `Lᵀ y = b`.
    pub fn backward_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), b.len())?;
        let mut y = b.to_vec();
        self.backward_solve_in_place(&mut y);
        Ok(y)
    }

    pub fn forward_solve_in_place(&self, y: &mut [f64]) {
        let (row_ptr, col_idx, values) = (self.csr.row_ptr(), self.csr.col_idx(), self.csr.values());
        for i in 0..self.n() {
            let (lo, diag) = (row_ptr[i], row_ptr[i + 1] - 1);
            let mut s = y[i];
            for k in lo..diag {
                s -= values[k] * y[col_idx[k]];
            }
            y[i] = s / values[diag];
        }
    }

    pub fn backward_solve_in_place(&self, y: &mut [f64]) {
        let (row_ptr, col_idx, values) = (self.csr.row_ptr(), self.csr.col_idx(), self.csr.values());
        // row i of L is column i of Lᵀ: finalize y_i, then eliminate it upward
        for i in (0..self.n()).rev() {
            let (lo, diag) = (row_ptr[i], row_ptr[i + 1] - 1);
            let yi = y[i] / values[diag];
            y[i] = yi;
            for k in lo..diag {
                y[col_idx[k]] -= values[k] * yi;
            }
        }
    }

    /// `y = L x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), x.len())?;
        let mut y = vec![0.0; self.n()];
        self.csr.spmv_into(x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.csr.to_dense()
    }
}

/// Full symmetric product `L Lᵀ`, including fill outside the pattern of `L`.
pub fn lower_times_lower_transpose(l: &LowerTriangular) -> SparseSpd {
    let product = l
        .csr()
        .matmul(&l.csr().transpose())
        .expect("square operands of equal size");
    // (i,j) and (j,i) accumulate identical products in identical order, and
    // positive diagonals of L keep every diagonal entry stored.
    SparseSpd { csr: product }
}

/// `‖P − A‖_F` over the union of both sparsity patterns.
pub fn frobenius_distance(p: &SparseSpd, a: &SparseSpd) -> Result<f64> {
    check_dim(a.n(), p.n())?;
    Ok(union_diff_sq(p.csr(), a.csr()).sqrt())
}

fn union_diff_sq(p: &Csr, a: &Csr) -> f64 {
    let mut total = 0.0;
    for i in 0..p.n() {
        let (pc, pv) = p.row(i);
        let (ac, av) = a.row(i);
        let (mut x, mut y) = (0, 0);
        while x < pc.len() || y < ac.len() {
            let d = match (pc.get(x), ac.get(y)) {
                (Some(&cp), Some(&ca)) if cp == ca => {
                    x += 1;
                    y += 1;
                    pv[x - 1] - av[y - 1]
                }
                (Some(&cp), Some(&ca)) if cp < ca => {
                    x += 1;
                    pv[x - 1]
                }
                (Some(_), None) => {
                    x += 1;
                    pv[x - 1]
                }
                _ => {
                    y += 1;
                    -av[y - 1]
                }
            };
            total += d * d;
        }
    }
    total
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, d: &[f64]) -> SparseSpd {
        SparseSpd::from_dense(n, d).unwrap()
    }

    fn lower(n: usize, d: &[f64]) -> LowerTriangular {
        LowerTriangular::from_dense(n, d).unwrap()
    }

    #[test]
    fn spmv_examples() {
        assert_eq!(SparseSpd::identity(2).spmv(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        assert_eq!(spd(2, &[1.0, 2.0, 2.0, 3.0]).spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 5.0]);
        assert_eq!(
            SparseSpd::from_diagonal(&[4.0, 9.0]).spmv(&[1.0, 2.0]).unwrap(),
            vec![4.0, 18.0]
        );
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let err = SparseSpd::identity(3).spmv(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn triangular_solve_examples() {
        let l = lower(2, &[2.0, 0.0, 1.0, 1.0]);
        assert_eq!(l.forward_solve(&[2.0, 3.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(l.backward_solve(&[4.0, 2.0]).unwrap(), vec![1.0, 2.0]);

        let d = LowerTriangular::from_diagonal(&[2.0, 3.0]).unwrap();
        assert_eq!(d.forward_solve(&[4.0, 9.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(d.backward_solve(&[4.0, 9.0]).unwrap(), vec![2.0, 3.0]);

        let b = [0.25, -7.0, 3.5];
        let id = LowerTriangular::identity(3);
        assert_eq!(id.forward_solve(&b).unwrap(), b.to_vec());
        assert_eq!(id.backward_solve(&b).unwrap(), b.to_vec());
    }

    #[test]
    fn factor_rejects_bad_diagonal() {
        assert!(matches!(
            LowerTriangular::from_diagonal(&[1.0, 0.0]),
            Err(Error::IllFormedFactor { row: 1, .. })
        ));
        assert!(matches!(
            LowerTriangular::from_diagonal(&[-2.0]),
            Err(Error::IllFormedFactor { row: 0, .. })
        ));
        // missing diagonal in row 1
        let csr = Csr::from_triplets(2, [(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(LowerTriangular::from_csr(csr), Err(Error::IllFormedFactor { row: 1, .. })));
        // entry above the diagonal
        let csr = Csr::from_triplets(2, [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(LowerTriangular::from_csr(csr).is_err());
    }

    #[test]
    fn spd_rejects_asymmetry_and_missing_diagonal() {
        assert!(SparseSpd::from_dense(2, &[1.0, 2.0, 2.5, 3.0]).is_err());
        let csr = Csr::from_triplets(2, [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(SparseSpd::from_csr(csr).is_err());
        let csr = Csr::from_triplets(2, [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(SparseSpd::from_csr(csr).is_err());
    }

    #[test]
    fn product_examples() {
        assert_eq!(lower_times_lower_transpose(&LowerTriangular::identity(3)), SparseSpd::identity(3));
        let p = lower_times_lower_transpose(&lower(2, &[2.0, 0.0, 1.0, 2.0]));
        assert_eq!(p.to_dense(), vec![4.0, 2.0, 2.0, 5.0]);
        let p = lower_times_lower_transpose(&LowerTriangular::from_diagonal(&[2.0, 3.0]).unwrap());
        assert_eq!(p, SparseSpd::from_diagonal(&[4.0, 9.0]));
    }

    #[test]
    fn product_includes_fill() {
        // arrow pattern: rows 1 and 2 both couple to column 0, so (2,1) fills in
        let l = lower(3, &[1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let p = lower_times_lower_transpose(&l);
        assert_eq!(p.get(2, 1), Some(6.0));
        assert_eq!(p.get(1, 2), Some(6.0));
    }

    #[test]
    fn frobenius_examples() {
        let a = spd(2, &[4.0, 2.0, 2.0, 5.0]);
        assert_eq!(frobenius_distance(&a, &a).unwrap(), 0.0);
        let d = SparseSpd::from_diagonal(&[4.0, 9.0]);
        assert_eq!(frobenius_distance(&SparseSpd::identity(2), &d).unwrap(), 73f64.sqrt());
        let a2 = SparseSpd::from_diagonal(&[4.0, 5.0]);
        assert_eq!(frobenius_distance(&a, &a2).unwrap(), 8f64.sqrt());
        assert!(frobenius_distance(&a, &SparseSpd::identity(3)).is_err());
    }

    #[test]
    fn permutation_moves_entries() {
        let a = spd(3, &[4.0, 1.0, 0.0, 1.0, 5.0, 2.0, 0.0, 2.0, 6.0]);
        let b = a.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(b.get(2, 2), Some(4.0));
        assert_eq!(b.get(2, 0), Some(1.0));
        assert_eq!(b.get(0, 1), Some(2.0));
    }
}
