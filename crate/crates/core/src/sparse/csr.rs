use crate::error::{check_dim, Error, Result};

/// Square sparse matrix in compressed sparse row layout.
///
/// Column indices are strictly increasing within each row. No structural
/// properties beyond that are assumed; [`SparseSpd`](super::SparseSpd) and
/// [`LowerTriangular`](super::LowerTriangular) layer their invariants on top.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn from_raw(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidStructure(
                "row_ptr does not span col_idx/values".into(),
            ));
        }
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure(format!(
                    "row_ptr decreases at row {i}"
                )));
            }
            let cols = &col_idx[lo..hi];
            if cols.iter().any(|&c| c >= n) {
                return Err(Error::InvalidStructure(format!(
                    "column index out of range in row {i}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "columns of row {i} are not strictly increasing"
                )));
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from coordinate entries; duplicates are summed.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(Error::InvalidStructure(format!(
                "entry ({i}, {j}) out of range for n = {n}"
            )));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds from a row-major dense array, keeping nonzeros and the full diagonal.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        check_dim(n * n, dense.len())?;
        let entries = (0..n).flat_map(|i| {
            (0..n).filter_map(move |j| {
                let v = dense[i * n + j];
                (v != 0.0 || i == j).then_some((i, j, v))
            })
        });
        Self::from_triplets(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        self.col_idx[lo..self.row_ptr[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.find(i, j).map(|k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .collect()
    }

    /// Iterates all stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> Csr {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        Csr {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Entries with column <= row.
    pub fn lower_triangle(&self) -> Csr {
        self.filter(|i, j| j <= i)
    }

    fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> Csr {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if keep(i, j) {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self * other` by row-wise Gustavson accumulation.
    ///
    /// Every structurally reachable entry is stored, including exact zeros
    /// produced by cancellation. Within each output entry the terms are summed
    /// in increasing order of the inner index.
    pub fn matmul(&self, other: &Csr) -> Result<Csr> {
        check_dim(self.n, other.n)?;
        let n = self.n;
        let mut acc = vec![0.0; n];
        let mut marker = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();

        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (&k, &a_ik) in cols.iter().zip(vals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &b_kj) in bcols.iter().zip(bvals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = a_ik * b_kj;
                        touched.push(j);
                    } else {
                        acc[j] += a_ik * b_kj;
                    }
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Csr {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `y = self * x` without allocation.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut s = 0.0;
            for (&j, &v) in self.col_idx[range.clone()].iter().zip(&self.values[range]) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for (i, j, v) in self.iter() {
            d[i * self.n + j] = v;
        }
        d
    }

    #[cfg(test)]
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Csr {
        debug_assert_eq!(values.len(), self.nnz());
        Csr {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        }
    }

    /// True when both matrices store exactly the same positions.
    pub fn same_pattern(&self, other: &Csr) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = Csr::from_triplets(2, [(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.row_ptr(), &[0, 2, 3]);
        assert_eq!(m.col_idx(), &[0, 1, 0]);
        assert_eq!(m.values(), &[1.0, 2.0, 4.0]);
    }

    #[test]
    fn raw_rejects_unsorted_columns() {
        assert!(Csr::from_raw(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(Csr::from_raw(2, vec![0, 1, 1], vec![2], vec![1.0]).is_err());
    }

    #[test]
    fn transpose_twice_is_identity() {
        let m = Csr::from_triplets(3, [(0, 2, 1.0), (1, 0, 2.0), (2, 1, 3.0), (2, 2, 4.0)]).unwrap();
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().get(2, 0), Some(1.0));
    }

    #[test]
    fn matmul_small() {
        // [[1,2],[0,3]] * [[4,0],[5,6]] = [[14,12],[15,18]]
        let a = Csr::from_dense(2, &[1.0, 2.0, 0.0, 3.0]).unwrap();
        let b = Csr::from_dense(2, &[4.0, 0.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().to_dense(), vec![14.0, 12.0, 15.0, 18.0]);
    }
}
