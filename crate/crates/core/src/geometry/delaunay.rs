//! Bowyer-Watson Delaunay triangulation in the plane.
//!
//! The hull is handled with ghost triangles (a hull edge joined to a vertex at
//! infinity) instead of a finite super-triangle, and all orientation and
//! in-circle decisions use adaptive exact predicates. Co-circular points are
//! never treated as conflicting, which resolves ties by insertion (index)
//! order.

use std::collections::{HashMap, HashSet};

use robust::{incircle, orient2d, Coord};

use crate::error::GeometryError;
use crate::geometry::PlanarPointSet;
use crate::graph::Graph;
use crate::triangles::{SourceMask, Triangle};

const GHOST: usize = usize::MAX;

/// Delaunay triangulation of `points`: the planar graph of its edges and the
/// list of its (finite) faces, tagged with the Delaunay source bit.
///
/// Exact duplicate points are separated by a deterministic per-index offset
/// of `1e-9 * index` (in coordinates normalised to the unit box) before
/// triangulating, so every input point owns a vertex.
pub fn delaunay(points: &PlanarPointSet) -> Result<(Graph, Vec<Triangle>), GeometryError> {
    let n = points.len();
    if n < 3 {
        return Err(GeometryError::TooFewPoints { needed: 3, got: n });
    }
    let pts = prepare(points.points());
    let mut mesh = Mesh::new(pts)?;
    for p in 0..n {
        if !mesh.inserted[p] {
            mesh.insert(p);
        }
    }
    let mut faces: Vec<Triangle> = mesh
        .tris
        .iter()
        .zip(&mesh.alive)
        .filter(|(t, &alive)| alive && t[2] != GHOST)
        .map(|(t, _)| {
            Triangle::new(t[0], t[1], t[2], SourceMask::DELAUNAY)
                .expect("faces have distinct vertices")
        })
        .collect();
    faces.sort_unstable();
    let graph = Graph::from_pairs(n, faces.iter().flat_map(|t| t.edges()))
        .expect("face vertices are in range");
    Ok((graph, faces))
}

/// Normalises to the unit box and separates exact duplicates.
fn prepare(raw: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in raw {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    let mut pts: Vec<[f64; 2]> = raw
        .iter()
        .map(|p| [(p[0] - lo[0]) * scale, (p[1] - lo[1]) * scale])
        .collect();
    let mut round = 0u32;
    loop {
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| {
            pts[a][0]
                .total_cmp(&pts[b][0])
                .then(pts[a][1].total_cmp(&pts[b][1]))
                .then(a.cmp(&b))
        });
        let mut moved = false;
        for w in order.windows(2) {
            let (keep, dup) = (w[0], w[1]);
            if pts[keep] == pts[dup] {
                let eps = 1e-9 * dup as f64 * f64::from(round + 1);
                let angle = dup as f64 * 2.399_963_229_728_653;
                pts[dup][0] += eps * angle.cos();
                pts[dup][1] += eps * angle.sin();
                moved = true;
            }
        }
        if !moved {
            return pts;
        }
        round += 1;
    }
}

struct Mesh {
    pts: Vec<[f64; 2]>,
    inserted: Vec<bool>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    edge_owner: HashMap<(usize, usize), usize>,
    last: usize,
}

impl Mesh {
    fn new(pts: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        let n = pts.len();
        let a = 0;
        let b = (1..n)
            .find(|&i| pts[i] != pts[a])
            .ok_or(GeometryError::Collinear { n })?;
        let c = (1..n)
            .find(|&i| i != b && orient(&pts, a, b, i) != 0.0)
            .ok_or(GeometryError::Collinear { n })?;
        let (b, c) = if orient(&pts, a, b, c) > 0.0 {
            (b, c)
        } else {
            (c, b)
        };
        let mut mesh = Self {
            inserted: vec![false; n],
            pts,
            tris: Vec::new(),
            alive: Vec::new(),
            edge_owner: HashMap::new(),
            last: 0,
        };
        for v in [a, b, c] {
            mesh.inserted[v] = true;
        }
        mesh.add([a, b, c]);
        mesh.add([b, a, GHOST]);
        mesh.add([c, b, GHOST]);
        mesh.add([a, c, GHOST]);
        Ok(mesh)
    }

    fn add(&mut self, tri: [usize; 3]) -> usize {
        let id = self.tris.len();
        for e in edges_of(tri) {
            self.edge_owner.insert(e, id);
        }
        self.tris.push(tri);
        self.alive.push(true);
        self.last = id;
        id
    }

    fn remove(&mut self, id: usize) {
        self.alive[id] = false;
        for e in edges_of(self.tris[id]) {
            if self.edge_owner.get(&e) == Some(&id) {
                self.edge_owner.remove(&e);
            }
        }
    }

    fn insert(&mut self, p: usize) {
        let seed = self.locate(p);
        // grow the conflict region from the located triangle
        let mut cavity = vec![seed];
        let mut in_cavity = HashSet::from([seed]);
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for (u, v) in edges_of(self.tris[t]) {
                if let Some(&nb) = self.edge_owner.get(&(v, u)) {
                    if !in_cavity.contains(&nb) && self.conflicts(nb, p) {
                        in_cavity.insert(nb);
                        cavity.push(nb);
                    }
                }
            }
        }
        let mut boundary = Vec::new();
        for &t in &cavity {
            for (u, v) in edges_of(self.tris[t]) {
                let twin_inside = self
                    .edge_owner
                    .get(&(v, u))
                    .is_some_and(|nb| in_cavity.contains(nb));
                if !twin_inside {
                    boundary.push((u, v));
                }
            }
        }
        for &t in &cavity {
            self.remove(t);
        }
        for (u, v) in boundary {
            let tri = if u == GHOST {
                [v, p, GHOST]
            } else if v == GHOST {
                [p, u, GHOST]
            } else {
                [u, v, p]
            };
            self.add(tri);
        }
        self.inserted[p] = true;
    }

    /// A triangle in conflict with `p`, found by a visibility walk from the
    /// most recent triangle (with an exhaustive scan as fallback).
    fn locate(&self, p: usize) -> usize {
        let mut t = self.last;
        if !self.alive[t] {
            t = self
                .alive
                .iter()
                .rposition(|&a| a)
                .expect("mesh is never empty");
        }
        let limit = 4 * self.tris.len() + 16;
        for _ in 0..limit {
            let tri = self.tris[t];
            if tri[2] == GHOST {
                if self.conflicts(t, p) {
                    return t;
                }
                // step back inside across the hull edge
                match self.edge_owner.get(&(tri[1], tri[0])) {
                    Some(&nb) => {
                        t = nb;
                        continue;
                    }
                    None => break,
                }
            }
            let mut moved = false;
            for (u, v) in edges_of(tri) {
                if orient(&self.pts, u, v, p) < 0.0 {
                    if let Some(&nb) = self.edge_owner.get(&(v, u)) {
                        t = nb;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                if self.conflicts(t, p) {
                    return t;
                }
                break;
            }
        }
        (0..self.tris.len())
            .find(|&t| self.alive[t] && self.conflicts(t, p))
            .expect("every new point conflicts with some triangle")
    }

    fn conflicts(&self, t: usize, p: usize) -> bool {
        let [a, b, c] = self.tris[t];
        if c == GHOST {
            let o = orient(&self.pts, a, b, p);
            if o > 0.0 {
                return true;
            }
            if o < 0.0 {
                return false;
            }
            // collinear with the hull edge: conflict only strictly inside it
            let (pa, pb, pp) = (self.pts[a], self.pts[b], self.pts[p]);
            let dot = (pp[0] - pa[0]) * (pb[0] - pa[0]) + (pp[1] - pa[1]) * (pb[1] - pa[1]);
            let len = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
            return dot > 0.0 && dot < len;
        }
        incircle(
            coord(&self.pts, a),
            coord(&self.pts, b),
            coord(&self.pts, c),
            coord(&self.pts, p),
        ) > 0.0
    }
}

fn edges_of(t: [usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

fn coord(pts: &[[f64; 2]], i: usize) -> Coord<f64> {
    Coord {
        x: pts[i][0],
        y: pts[i][1],
    }
}

fn orient(pts: &[[f64; 2]], a: usize, b: usize, c: usize) -> f64 {
    orient2d(coord(pts, a), coord(pts, b), coord(pts, c))
}
