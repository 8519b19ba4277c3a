//! Random 2-D domains and their triangulations.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::delaunay::{orient2d, Point, Triangulation};
use crate::error::{Error, Result};

const MAX_RESAMPLES: usize = 20;
const MAX_SPLIT_ROUNDS: usize = 16;
const OUTER_SIGMA: f64 = 1.0;
const INNER_SIGMA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted indices of vertices on an edge owned by a single triangle.
    pub boundary_vertices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFamily {
    Convex,
    ConvexWithHole,
    Polytope,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 3] = [MeshFamily::Convex, MeshFamily::ConvexWithHole, MeshFamily::Polytope];

    pub fn min_points(self) -> usize {
        match self {
            MeshFamily::ConvexWithHole => 6,
            _ => 3,
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh2D {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * orient2d(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                *counts.entry(edge_key(t[i], t[(i + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Edges owned by exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .edge_counts()
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(e, _)| e)
            .collect();
        edges.sort_unstable();
        edges
    }

    fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Self {
        let mut mesh = Self {
            vertices,
            triangles,
            boundary_vertices: Vec::new(),
        };
        let mut bv: Vec<usize> = mesh.boundary_edges().into_iter().flat_map(|(a, b)| [a, b]).collect();
        bv.sort_unstable();
        bv.dedup();
        mesh.boundary_vertices = bv;
        mesh
    }

    /// Checks orientation, non-degeneracy, manifold edges and the boundary
    /// vertex set.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        let scale = bbox_extent(&self.vertices).max(f64::MIN_POSITIVE);
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateGeometry(format!("triangle {t} has invalid vertices")));
            }
            if !(self.triangle_area(t) > 1e-14 * scale * scale) {
                return Err(Error::DegenerateGeometry(format!(
                    "triangle {t} is degenerate or clockwise (area {})",
                    self.triangle_area(t)
                )));
            }
        }
        if let Some((e, c)) = self.edge_counts().into_iter().find(|&(_, c)| c > 2) {
            return Err(Error::DegenerateGeometry(format!("edge {e:?} is shared by {c} triangles")));
        }
        let mut used = vec![false; n];
        self.triangles.iter().flatten().for_each(|&v| used[v] = true);
        if used.iter().any(|u| !u) {
            return Err(Error::DegenerateGeometry("mesh has unused vertices".into()));
        }
        let expected = Self::from_parts(self.vertices.clone(), self.triangles.clone()).boundary_vertices;
        if expected != self.boundary_vertices {
            return Err(Error::DegenerateGeometry("boundary vertex set is inconsistent".into()));
        }
        Ok(())
    }
}

fn bbox(points: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn bbox_extent(points: &[Point]) -> f64 {
    let (lo, hi) = bbox(points);
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

/// Signed area, positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn polygon_centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let cross = p[0] * q[1] - q[0] * p[1];
        a2 += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [cx / (3.0 * a2), cy / (3.0 * a2)]
}

/// Even-odd rule.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Counter-clockwise convex hull without collinear points (monotone chain).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient2d(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient2d(a, b, c);
    let o2 = orient2d(a, b, d);
    let o3 = orient2d(c, d, a);
    let o4 = orient2d(c, d, b);
    (o1 * o2 <= 0.0) && (o3 * o4 <= 0.0)
}

pub fn is_simple_polygon(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            // skip edges sharing a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn subdivide(poly: &[Point], h: f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let pieces = if h.is_finite() { (len / h).ceil().max(1.0) as usize } else { 1 };
        for k in 0..pieces {
            let t = k as f64 / pieces as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Uniform grid over the plane bucketing points and segments.
struct Grid {
    cell: f64,
    points: HashMap<(i64, i64), Vec<Point>>,
    segments: HashMap<(i64, i64), Vec<(Point, Point)>>,
}

impl Grid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            points: HashMap::new(),
            segments: HashMap::new(),
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    fn add_point(&mut self, p: Point) {
        let k = self.key(p);
        self.points.entry(k).or_default().push(p);
    }

    fn add_segment(&mut self, a: Point, b: Point) {
        let (ka, kb) = (self.key(a), self.key(b));
        for x in ka.0.min(kb.0)..=ka.0.max(kb.0) {
            for y in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                self.segments.entry((x, y)).or_default().push((a, b));
            }
        }
    }

    /// True when no stored point or segment lies within `r ≤ cell` of `p`.
    fn is_clear(&self, p: Point, r: f64) -> bool {
        let (kx, ky) = self.key(p);
        for x in kx - 1..=kx + 1 {
            for y in ky - 1..=ky + 1 {
                if let Some(ps) = self.points.get(&(x, y)) {
                    if ps.iter().any(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) < r * r) {
                        return false;
                    }
                }
                if let Some(ss) = self.segments.get(&(x, y)) {
                    if ss.iter().any(|&(a, b)| distance_to_segment(p, a, b) < r) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn ccw(mut poly: Vec<Point>) -> Vec<Point> {
    if polygon_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

/// Triangulates a polygonal domain, optionally with one polygonal hole.
///
/// With `target_vertices == 0` only the polygon corners are used. Otherwise
/// the boundary is subdivided to the spacing of a uniform mesh with about
/// `target_vertices` vertices and the interior is filled by rejection
/// sampling with a minimum spacing of half that length.
pub fn mesh_domain(
    outer: &[Point],
    hole: Option<&[Point]>,
    target_vertices: usize,
    rng: &mut impl Rng,
) -> Result<Mesh2D> {
    if outer.len() < 3 {
        return Err(Error::DegenerateGeometry("outer polygon needs at least 3 corners".into()));
    }
    let outer = ccw(outer.to_vec());
    let hole = hole.map(|h| ccw(h.to_vec()));
    let mut area = polygon_area(&outer);
    if let Some(h) = &hole {
        area -= polygon_area(h);
    }
    if !(area > 0.0) {
        return Err(Error::DegenerateGeometry("domain has no area".into()));
    }
    let h = if target_vertices > 0 {
        (2.0 * area / (3f64.sqrt() * target_vertices as f64)).sqrt()
    } else {
        f64::INFINITY
    };

    // boundary chains and their segments
    let mut points: Vec<Point> = Vec::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for chain in std::iter::once(&outer).chain(hole.as_ref()) {
        let sub = subdivide(chain, h);
        let base = points.len();
        let m = sub.len();
        for k in 0..m {
            segments.push((base + k, base + (k + 1) % m));
        }
        points.extend(sub);
    }
    let n_boundary = points.len();

    if target_vertices > n_boundary {
        let spacing = 0.5 * h;
        let mut grid = Grid::new(h);
        for &p in &points {
            grid.add_point(p);
        }
        for &(a, b) in &segments {
            grid.add_segment(points[a], points[b]);
        }
        let (lo, hi) = bbox(&outer);
        let wanted = target_vertices - n_boundary;
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < wanted && attempts < 200 * target_vertices {
            attempts += 1;
            let p = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
            if !point_in_polygon(p, &outer) || hole.as_ref().is_some_and(|h| point_in_polygon(p, h)) {
                continue;
            }
            if !grid.is_clear(p, spacing) {
                continue;
            }
            grid.add_point(p);
            points.push(p);
            accepted += 1;
        }
        if accepted < wanted {
            log::debug!("interior sampling placed {accepted} of {wanted} points");
        }
    }

    // spatially coherent numbering: row-wise snake over a coarse grid
    let (lo, hi) = bbox(&points);
    let rows = ((points.len() as f64).sqrt().ceil() as usize).max(1);
    let band = ((hi[1] - lo[1]) / rows as f64).max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..points.len()).collect();
    let row_of = |p: &Point| (((p[1] - lo[1]) / band) as usize).min(rows - 1);
    order.sort_by(|&i, &j| {
        let (pi, pj) = (&points[i], &points[j]);
        let (ri, rj) = (row_of(pi), row_of(pj));
        ri.cmp(&rj).then_with(|| {
            let c = pi[0].partial_cmp(&pj[0]).expect("finite");
            if ri % 2 == 0 {
                c
            } else {
                c.reverse()
            }
        })
    });
    let mut rank = vec![0; points.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let (blo, bhi) = bbox(&points);
    let mut tri = Triangulation::new(blo, bhi);
    for &i in &order {
        if tri.insert(points[i]) != rank[i] {
            return Err(Error::DegenerateGeometry("duplicate sample point".into()));
        }
    }
    let mut segments: Vec<(usize, usize)> = segments.iter().map(|&(a, b)| (rank[a], rank[b])).collect();

    // recover missing boundary segments by midpoint splitting
    let mut rounds = 0;
    loop {
        let edges = tri.edge_set();
        let missing: Vec<usize> = (0..segments.len())
            .filter(|&s| !edges.contains(&edge_key(segments[s].0, segments[s].1)))
            .collect();
        if missing.is_empty() {
            break;
        }
        rounds += 1;
        if rounds > MAX_SPLIT_ROUNDS {
            return Err(Error::DegenerateGeometry(format!(
                "{} boundary segments could not be recovered",
                missing.len()
            )));
        }
        let mut next = Vec::with_capacity(segments.len() + missing.len());
        let missing: HashSet<usize> = missing.into_iter().collect();
        for (s, &(a, b)) in segments.iter().enumerate() {
            if missing.contains(&s) {
                let (pa, pb) = (tri.point(a), tri.point(b));
                let m = tri.insert([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                next.push((a, m));
                next.push((m, b));
            } else {
                next.push((a, b));
            }
        }
        segments = next;
    }

    let holes: Vec<Point> = hole.iter().map(|h| polygon_centroid(h)).collect();
    let triangles = tri.carve(&segments, &holes);
    if triangles.is_empty() {
        return Err(Error::DegenerateGeometry("no triangles inside the domain".into()));
    }

    // drop vertices not used by any kept triangle
    let mut remap = vec![usize::MAX; tri.num_points()];
    let mut vertices = Vec::new();
    let mut sorted_used: Vec<usize> = triangles.iter().flatten().copied().collect();
    sorted_used.sort_unstable();
    sorted_used.dedup();
    for v in sorted_used {
        remap[v] = vertices.len();
        vertices.push(tri.point(v));
    }
    let triangles = triangles.into_iter().map(|t| t.map(|v| remap[v])).collect();
    let mesh = Mesh2D::from_parts(vertices, triangles);
    mesh.validate()?;
    Ok(mesh)
}

fn normal_points(count: usize, sigma: f64, rng: &mut impl Rng) -> Vec<Point> {
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    (0..count).map(|_| [normal.sample(rng), normal.sample(rng)]).collect()
}

fn sample_outline(family: MeshFamily, n_points: usize, rng: &mut impl Rng) -> Result<(Vec<Point>, Option<Vec<Point>>)> {
    let degenerate = |what: &str| Err(Error::DegenerateGeometry(what.into()));
    match family {
        MeshFamily::Convex => {
            let hull = convex_hull(&normal_points(n_points, OUTER_SIGMA, rng));
            if hull.len() < 3 || polygon_area(&hull) < 1e-6 {
                return degenerate("collinear sample");
            }
            Ok((hull, None))
        }
        MeshFamily::ConvexWithHole => {
            let n_inner = n_points / 2;
            let outer = convex_hull(&normal_points(n_points - n_inner, OUTER_SIGMA, rng));
            let inner = convex_hull(&normal_points(n_inner, INNER_SIGMA, rng));
            if outer.len() < 3 || inner.len() < 3 || polygon_area(&outer) < 1e-6 || polygon_area(&inner) < 1e-8 {
                return degenerate("collinear sample");
            }
            // the hole must sit strictly inside with some clearance
            let clearance = 0.05 * polygon_area(&outer).sqrt();
            let n = outer.len();
            let inside = inner.iter().all(|&p| {
                point_in_polygon(p, &outer)
                    && (0..n).all(|i| distance_to_segment(p, outer[i], outer[(i + 1) % n]) > clearance)
            });
            if !inside {
                return degenerate("hole is not inside the outer hull");
            }
            Ok((outer, Some(inner)))
        }
        MeshFamily::Polytope => {
            let pts = normal_points(n_points, OUTER_SIGMA, rng);
            let c = [
                pts.iter().map(|p| p[0]).sum::<f64>() / n_points as f64,
                pts.iter().map(|p| p[1]).sum::<f64>() / n_points as f64,
            ];
            let mut poly = pts;
            poly.sort_by(|a, b| {
                let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
                let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
                ta.partial_cmp(&tb).expect("finite angles")
            });
            if !is_simple_polygon(&poly) || polygon_area(&poly).abs() < 1e-6 {
                return degenerate("polygon is not simple");
            }
            Ok((poly, None))
        }
    }
}

/// Samples a domain of the given family and meshes it with about
/// `target_vertices` vertices (0 disables refinement).
///
/// Degenerate samples are redrawn up to 20 times.
pub fn sample_mesh(family: MeshFamily, n_points: usize, target_vertices: usize, seed: u64) -> Result<Mesh2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_mesh_with(family, n_points, target_vertices, &mut rng)
}

pub(crate) fn sample_mesh_with(
    family: MeshFamily,
    n_points: usize,
    target_vertices: usize,
    rng: &mut impl Rng,
) -> Result<Mesh2D> {
    if n_points < family.min_points() {
        return Err(Error::InvalidArgument(format!(
            "{family:?} meshes need at least {} points, got {n_points}",
            family.min_points()
        )));
    }
    let mut last = None;
    for _ in 0..=MAX_RESAMPLES {
        let attempt = sample_outline(family, n_points, rng)
            .and_then(|(outer, hole)| mesh_domain(&outer, hole.as_deref(), target_vertices, rng));
        match attempt {
            Ok(mesh) => return Ok(mesh),
            Err(Error::DegenerateGeometry(msg)) => {
                log::debug!("resampling {family:?} mesh: {msg}");
                last = Some(msg);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateGeometry(format!(
        "gave up after {MAX_RESAMPLES} resamples: {}",
        last.unwrap_or_default()
    )))
}

/// Structured `(k+1) × (k+1)` grid on the unit square, each cell split
/// along the same diagonal.
pub fn unit_square_grid(k: usize) -> Mesh2D {
    let m = k + 1;
    let vertices = (0..m)
        .flat_map(|j| (0..m).map(move |i| [i as f64 / k as f64, j as f64 / k as f64]))
        .collect();
    let mut triangles = Vec::with_capacity(2 * k * k);
    for j in 0..k {
        for i in 0..k {
            let v = j * m + i;
            triangles.push([v, v + 1, v + m + 1]);
            triangles.push([v, v + m + 1, v + m]);
        }
    }
    Mesh2D::from_parts(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn single_triangle_without_refinement() {
        let m = mesh_domain(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], None, 0, &mut rng()).unwrap();
        assert_eq!(m.triangles.len(), 1);
        assert_eq!(m.boundary_vertices, vec![0, 1, 2]);
    }

    #[test]
    fn unit_square_two_triangles() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let m = mesh_domain(&sq, None, 0, &mut rng()).unwrap();
        assert_eq!(m.triangles.len(), 2);
        assert_eq!(m.boundary_vertices.len(), 4);
        assert!((m.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn concentric_squares_leave_hole_empty() {
        let outer = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let inner = [[-0.3, -0.3], [0.3, -0.3], [0.3, 0.3], [-0.3, 0.3]];
        let m = mesh_domain(&outer, Some(&inner), 400, &mut rng()).unwrap();
        m.validate().unwrap();
        for t in 0..m.triangles.len() {
            let c = m.centroid(t);
            assert!(!(c[0].abs() < 0.3 && c[1].abs() < 0.3), "centroid {c:?} in hole");
        }
        assert!((m.area() - (4.0 - 0.36)).abs() < 1e-9);
    }

    #[test]
    fn families_produce_valid_meshes() {
        for (k, family) in MeshFamily::ALL.into_iter().enumerate() {
            for seed in 0..4 {
                let m = sample_mesh(family, 12, 300, 10 * k as u64 + seed).unwrap();
                m.validate().unwrap();
                assert!(m.vertices.len() > 100, "{family:?}: {} vertices", m.vertices.len());
            }
        }
    }

    #[test]
    fn structured_grid() {
        let m = unit_square_grid(3);
        m.validate().unwrap();
        assert_eq!(m.triangles.len(), 18);
        assert_eq!(m.boundary_vertices.len(), 12);
    }

    #[test]
    fn hull_and_polygon_helpers() {
        let hull = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.2], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0]]);
        assert_eq!(hull.len(), 4);
        assert!(polygon_area(&hull) > 0.0);
        assert!(point_in_polygon([0.5, 0.5], &hull));
        assert!(!point_in_polygon([1.5, 0.5], &hull));
        assert!(!is_simple_polygon(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]));
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(matches!(
            sample_mesh(MeshFamily::ConvexWithHole, 5, 0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
