//! Linear (P1) finite elements for `−∇²u = f` with Dirichlet data.

use super::delaunay::Point;
use super::mesh::Mesh2D;
use crate::error::{Error, Result};
use crate::sparse::{Csr, SparseSpd};

/// Element stiffness `area · ∇φ_i · ∇φ_j` of a counter-clockwise triangle.
pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    // ∇φ_i = (y_j − y_k, x_k − x_j) / (2 area) with (i, j, k) cyclic
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [p[j][1] - p[k][1], p[k][0] - p[j][0]];
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) / (2.0 * area2);
        }
    }
    k
}

/// Global stiffness matrix before boundary conditions, with entries that
/// cancel to exactly zero off the diagonal removed.
pub fn assemble_stiffness(mesh: &Mesh2D) -> Result<Csr> {
    let n = mesh.vertices.len();
    let mut entries = Vec::with_capacity(9 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let k = element_stiffness(tri.map(|v| mesh.vertices[v]));
        for a in 0..3 {
            for b in 0..3 {
                entries.push((tri[a], tri[b], k[a][b]));
            }
        }
    }
    let full = Csr::from_triplets(n, entries)?;
    let kept: Vec<_> = full.iter().filter(|&(i, j, v)| i == j || v != 0.0).collect();
    Csr::from_triplets(n, kept)
}

/// Reduced system over interior vertices, plus the map from its unknowns
/// back to mesh vertices.
#[derive(Debug, Clone)]
pub struct PoissonSystem {
    pub a: SparseSpd,
    pub b: Vec<f64>,
    pub interior: Vec<usize>,
}

/// Assembles the stiffness matrix and one-point-quadrature load
/// `f(centroid) · area / 3`, then eliminates boundary vertices carrying
/// the Dirichlet values `u_d`.
pub fn assemble_poisson(
    mesh: &Mesh2D,
    f: impl Fn(Point) -> f64,
    u_d: impl Fn(Point) -> f64,
) -> Result<PoissonSystem> {
    let n = mesh.vertices.len();
    let k = assemble_stiffness(mesh)?;
    let mut load = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let share = f(mesh.centroid(t)) * mesh.triangle_area(t) / 3.0;
        for &v in tri {
            load[v] += share;
        }
    }

    let mut is_boundary = vec![false; n];
    mesh.boundary_vertices.iter().for_each(|&v| is_boundary[v] = true);
    let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();
    if interior.is_empty() {
        return Err(Error::EmptySystem);
    }
    let mut index = vec![usize::MAX; n];
    for (r, &v) in interior.iter().enumerate() {
        index[v] = r;
    }
    let boundary_values: Vec<f64> = (0..n)
        .map(|v| if is_boundary[v] { u_d(mesh.vertices[v]) } else { 0.0 })
        .collect();

    let mut entries = Vec::new();
    let mut b = vec![0.0; interior.len()];
    for (r, &v) in interior.iter().enumerate() {
        b[r] = load[v];
        let (cols, vals) = k.row(v);
        for (&c, &x) in cols.iter().zip(vals) {
            if is_boundary[c] {
                b[r] -= x * boundary_values[c];
            } else {
                entries.push((r, index[c], x));
            }
        }
    }
    let a = SparseSpd::from_csr(Csr::from_triplets(interior.len(), entries)?)?;
    Ok(PoissonSystem { a, b, interior })
}
