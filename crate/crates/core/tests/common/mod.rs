#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use neuralif::datagen::{orient2d, Mesh2D};
use neuralif::model::{forward_factor, ModelParams};
use neuralif::sparse::{LowerTriangular, SparseSpd};
use neuralif::train::{loss, sample_gradient, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sparse SPD matrix: random symmetric off-diagonal pattern with density
/// `density`, made diagonally dominant by `shift`.
pub fn sparse_spd(n: usize, density: f64, shift: f64, seed: u64) -> SparseSpd {
    let mut r = rng(seed);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            if r.random_bool(density) {
                let v: f64 = r.random_range(-1.0..1.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| d[i * n + j].abs()).sum();
        d[i * n + i] = s + shift + r.random_range(0.0..1.0);
    }
    SparseSpd::from_dense(n, &d).unwrap()
}

/// Dense SPD matrix `B Bᵀ + n I` with every entry nonzero.
pub fn dense_spd(n: usize, seed: u64) -> SparseSpd {
    let mut r = rng(seed);
    let b = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let a = &b * b.transpose() + DMatrix::identity(n, n) * n as f64;
    SparseSpd::from_dense(n, &row_major(&a)).unwrap()
}

pub fn random_lower(n: usize, density: f64, seed: u64) -> LowerTriangular {
    let mut r = rng(seed);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            if r.random_bool(density) {
                d[i * n + j] = r.random_range(-1.0..1.0);
            }
        }
        d[i * n + i] = r.random_range(0.5..2.0);
    }
    LowerTriangular::from_dense(n, &d).unwrap()
}

pub fn to_na(n: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, row_major)
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect()
}

pub fn spd_na(a: &SparseSpd) -> DMatrix<f64> {
    to_na(a.n(), &a.to_dense())
}

pub fn lower_na(l: &LowerTriangular) -> DMatrix<f64> {
    to_na(l.n(), &l.to_dense())
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn dense_solve(a: &SparseSpd, b: &[f64]) -> Vec<f64> {
    let chol = spd_na(a).cholesky().expect("SPD");
    chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec()
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().as_slice().to_vec();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Eigenvalues of `L⁻¹ A L⁻ᵀ` from a dense oracle.
pub fn preconditioned_eigenvalues(a: &SparseSpd, l: &LowerTriangular) -> Vec<f64> {
    let an = spd_na(a);
    let linv = lower_na(l).try_inverse().expect("invertible");
    let m = &linv * an * linv.transpose();
    eigenvalues((&m + m.transpose()) * 0.5)
}

pub fn a_norm(a: &SparseSpd, v: &[f64]) -> f64 {
    let av = a.spmv(v).unwrap();
    v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense assembly: a full n×n matrix per element, summed entry by entry.
pub fn dense_stiffness(mesh: &Mesh2D) -> Vec<f64> {
    let n = mesh.vertices.len();
    let mut k = vec![0.0; n * n];
    for tri in &mesh.triangles {
        let p = tri.map(|v| mesh.vertices[v]);
        let area = 0.5 * orient2d(p[0], p[1], p[2]);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            grads[i] = [(p[j][1] - p[l][1]) / (2.0 * area), (p[l][0] - p[j][0]) / (2.0 * area)];
        }
        let mut local = vec![0.0; n * n];
        for a in 0..3 {
            for b in 0..3 {
                local[tri[a] * n + tri[b]] = area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
            }
        }
        for (x, y) in k.iter_mut().zip(&local) {
            *x += y;
        }
    }
    k
}

/// Relative mismatch between the analytic directional derivative of the
/// loss and a central difference along a random direction.
pub fn directional_check(params: &ModelParams, a: &SparseSpd, seed: u64) -> f64 {
    let sample = Sample::new(a.clone());
    let (_, grad) = sample_gradient(params, &sample).unwrap();
    let theta = params.to_flat();
    let mut r = rng(seed);
    let v: Vec<f64> = (0..theta.len()).map(|_| r.random_range(-1.0..1.0)).collect();
    let eps = 1e-6;
    let eval = |s: f64| {
        let mut p = params.clone();
        let t: Vec<f64> = theta.iter().zip(&v).map(|(x, d)| x + s * d).collect();
        p.set_flat(&t).unwrap();
        loss(&forward_factor(&p, &sample.graph).unwrap(), a).unwrap()
    };
    let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
    let analytic: f64 = grad.iter().zip(&v).map(|(g, d)| g * d).sum();
    (fd - analytic).abs() / analytic.abs().max(1e-8)
}
