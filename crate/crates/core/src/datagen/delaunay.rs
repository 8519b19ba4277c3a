//! Incremental Bowyer–Watson triangulation with triangle adjacency and
//! walking point location.

use std::collections::HashMap;

pub type Point = [f64; 2];

/// `(b − a) × (c − a)`: positive when `a, b, c` turn counter-clockwise.
#[inline]
pub fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `a, b, c`.
#[inline]
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `nb[i]` is the triangle across the edge opposite `v[i]`.
    nb: [Option<usize>; 3],
    alive: bool,
}

/// Delaunay triangulation of a growing point set, enclosed by a large
/// auxiliary triangle that is dropped by [`Triangulation::finish`] and
/// [`Triangulation::carve`].
#[derive(Debug, Clone)]
pub struct Triangulation {
    points: Vec<Point>,
    tris: Vec<Tri>,
    last: usize,
    /// Indices of the three auxiliary vertices.
    aux: [usize; 3],
}

impl Triangulation {
    /// Starts an empty triangulation able to hold points inside `[lo, hi]`.
    pub fn new(lo: Point, hi: Point) -> Self {
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        let r = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12) * 1e3;
        let points = vec![
            [cx - 2.0 * r, cy - r],
            [cx + 2.0 * r, cy - r],
            [cx, cy + 2.0 * r],
        ];
        Self {
            points,
            tris: vec![Tri {
                v: [0, 1, 2],
                nb: [None; 3],
                alive: true,
            }],
            last: 0,
            aux: [0, 1, 2],
        }
    }

    /// Inserted points are numbered from 0 in insertion order; the auxiliary
    /// vertices are stored first internally and hidden by the offset.
    const OFFSET: usize = 3;

    pub fn num_points(&self) -> usize {
        self.points.len() - Self::OFFSET
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i + Self::OFFSET]
    }

    fn locate(&self, p: Point) -> usize {
        let mut t = self.last;
        if !self.tris[t].alive {
            t = self.tris.iter().rposition(|t| t.alive).expect("a live triangle");
        }
        // visibility walk; bounded to guard against cycling on degenerate input
        for _ in 0..4 * self.tris.len() + 16 {
            let tri = &self.tris[t];
            let mut moved = false;
            for i in 0..3 {
                let a = self.points[tri.v[(i + 1) % 3]];
                let b = self.points[tri.v[(i + 2) % 3]];
                if orient2d(a, b, p) < 0.0 {
                    if let Some(n) = tri.nb[i] {
                        t = n;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                return t;
            }
        }
        // fall back to a linear scan
        (0..self.tris.len())
            .find(|&t| {
                let tri = &self.tris[t];
                tri.alive
                    && (0..3).all(|i| {
                        orient2d(
                            self.points[tri.v[(i + 1) % 3]],
                            self.points[tri.v[(i + 2) % 3]],
                            p,
                        ) >= 0.0
                    })
            })
            .unwrap_or(t)
    }

    /// Tie rule: a point exactly on a circumcircle does not invalidate the
    /// triangle, so cocircular configurations keep the earlier diagonal.
    fn in_circumcircle(&self, t: usize, p: Point) -> bool {
        let v = self.tris[t].v;
        incircle(self.points[v[0]], self.points[v[1]], self.points[v[2]], p) > 0.0
    }

    /// Inserts a point and returns its index. Exact duplicates of existing
    /// points are not inserted; the index of the existing point is returned.
    pub fn insert(&mut self, p: Point) -> usize {
        let start = self.locate(p);
        for &v in &self.tris[start].v {
            if self.points[v] == p {
                return v - Self::OFFSET;
            }
        }
        let id = self.points.len();
        self.points.push(p);

        // cavity: triangles whose circumcircle holds p, grown from the
        // containing triangle through adjacency
        let mut bad = vec![start];
        let mut in_bad = HashMap::new();
        in_bad.insert(start, true);
        let mut k = 0;
        while k < bad.len() {
            let t = bad[k];
            k += 1;
            for n in self.tris[t].nb.into_iter().flatten() {
                if in_bad.contains_key(&n) {
                    continue;
                }
                let inside = self.in_circumcircle(n, p);
                in_bad.insert(n, inside);
                if inside {
                    bad.push(n);
                }
            }
        }

        // re-triangulate the cavity boundary as a fan around p
        let mut starts: HashMap<usize, usize> = HashMap::new();
        let mut ends: HashMap<usize, usize> = HashMap::new();
        let mut created = Vec::new();
        for &t in &bad {
            let tri = self.tris[t];
            for i in 0..3 {
                let outer = tri.nb[i];
                if outer.is_some_and(|o| in_bad.get(&o) == Some(&true)) {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                let new = self.tris.len();
                self.tris.push(Tri {
                    v: [a, b, id],
                    nb: [None, None, outer],
                    alive: true,
                });
                if let Some(o) = outer {
                    let slot = self.tris[o].nb.iter().position(|&x| x == Some(t)).expect("mutual adjacency");
                    self.tris[o].nb[slot] = Some(new);
                }
                starts.insert(a, new);
                ends.insert(b, new);
                created.push(new);
            }
        }
        for &t in &bad {
            self.tris[t].alive = false;
        }
        for &t in &created {
            let [a, b, _] = self.tris[t].v;
            // edge (b, p) opposite a continues with the fan triangle starting at b
            self.tris[t].nb[0] = starts.get(&b).copied();
            // edge (p, a) opposite b continues with the one ending at a
            self.tris[t].nb[1] = ends.get(&a).copied();
        }
        self.last = *created.last().expect("cavity is never empty");
        id - Self::OFFSET
    }

    fn live(&self) -> impl Iterator<Item = (usize, &Tri)> {
        self.tris.iter().enumerate().filter(|(_, t)| t.alive)
    }

    /// All edges as ordered pairs `(min, max)` of inserted point indices.
    pub fn edge_set(&self) -> std::collections::HashSet<(usize, usize)> {
        let mut set = std::collections::HashSet::new();
        for (_, t) in self.live() {
            for i in 0..3 {
                let (a, b) = (t.v[i], t.v[(i + 1) % 3]);
                if a >= Self::OFFSET && b >= Self::OFFSET {
                    let (a, b) = (a - Self::OFFSET, b - Self::OFFSET);
                    set.insert((a.min(b), a.max(b)));
                }
            }
        }
        set
    }

    /// Partitions the triangles into regions separated by `segments`.
    ///
    /// Triangles reachable from the auxiliary hull without crossing a
    /// segment are exterior; those reachable from a triangle containing one
    /// of `holes` are removed as well. The remaining triangles are returned
    /// with inserted-point indices.
    pub fn carve(&self, segments: &[(usize, usize)], holes: &[Point]) -> Vec<[usize; 3]> {
        let seg: std::collections::HashSet<(usize, usize)> = segments
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a + Self::OFFSET, b + Self::OFFSET);
                (a.min(b), a.max(b))
            })
            .collect();
        let mut removed = vec![false; self.tris.len()];
        let mut stack: Vec<usize> = self
            .live()
            .filter(|(_, t)| t.v.iter().any(|v| self.aux.contains(v)))
            .map(|(i, _)| i)
            .collect();
        for &h in holes {
            stack.push(self.locate(h));
        }
        while let Some(t) = stack.pop() {
            if removed[t] {
                continue;
            }
            removed[t] = true;
            let tri = &self.tris[t];
            for i in 0..3 {
                let (a, b) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                if seg.contains(&(a.min(b), a.max(b))) {
                    continue;
                }
                if let Some(n) = tri.nb[i] {
                    if !removed[n] {
                        stack.push(n);
                    }
                }
            }
        }
        self.live()
            .filter(|(i, _)| !removed[*i])
            .map(|(_, t)| t.v.map(|v| v - Self::OFFSET))
            .collect()
    }

    /// All triangles not touching the auxiliary vertices.
    pub fn finish(&self) -> Vec<[usize; 3]> {
        self.live()
            .filter(|(_, t)| t.v.iter().all(|v| !self.aux.contains(v)))
            .map(|(_, t)| t.v.map(|v| v - Self::OFFSET))
            .collect()
    }
}
