use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::GraphError;
use crate::graph::Graph;
use crate::triangles::triangle_count_per_edge;

/// Above this node count the iterative solver is used.
pub const DENSE_LIMIT: usize = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResistanceSolver {
    /// Dense pseudoinverse up to [`DENSE_LIMIT`] nodes, conjugate gradient
    /// above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// Effective resistance `(e_u - e_v)ᵀ L⁺ (e_u - e_v)` on the combinatorial
/// Laplacian, treating every edge as a unit resistor. Pairs in different
/// components get `f64::INFINITY`; `R(u, u) = 0`.
pub fn effective_resistance(g: &Graph, pairs: &[(usize, usize)]) -> Result<Vec<f64>, GraphError> {
    effective_resistance_with(g, pairs, ResistanceSolver::Auto)
}

pub fn effective_resistance_with(
    g: &Graph,
    pairs: &[(usize, usize)],
    solver: ResistanceSolver,
) -> Result<Vec<f64>, GraphError> {
    let n = g.n();
    if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(GraphError::InvalidNode { node: u.max(v), n });
    }
    let labels = g.components();
    let dense = match solver {
        ResistanceSolver::Auto => n <= DENSE_LIMIT,
        ResistanceSolver::Dense => true,
        ResistanceSolver::Iterative => false,
    };
    let mut pinv_cache: HashMap<usize, ComponentPinv> = HashMap::new();
    let mut out = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        if u == v {
            out.push(0.0);
        } else if labels[u] != labels[v] {
            out.push(f64::INFINITY);
        } else if dense {
            let comp = pinv_cache
                .entry(labels[u])
                .or_insert_with(|| ComponentPinv::new(g, &labels, labels[u]));
            out.push(comp.resistance(u, v));
        } else {
            out.push(cg_resistance(g, u, v));
        }
    }
    Ok(out)
}

/// Resistance of every edge, in [`Graph::edges`] order.
pub fn resistance_per_edge(g: &Graph) -> Vec<((usize, usize), f64)> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let r = effective_resistance(g, &edges).expect("edge endpoints are valid");
    edges.into_iter().zip(r).collect()
}

/// Pseudoinverse of one component's Laplacian, `(L + J/k)⁻¹ - J/k`.
struct ComponentPinv {
    local: HashMap<usize, usize>,
    pinv: DMatrix<f64>,
}

impl ComponentPinv {
    fn new(g: &Graph, labels: &[usize], label: usize) -> Self {
        let nodes: Vec<usize> = (0..g.n()).filter(|&i| labels[i] == label).collect();
        let (sub, _) = g.induced_subgraph(&nodes);
        let k = nodes.len();
        let shift = 1.0 / k as f64;
        let mut m = sub.laplacian();
        m.add_scalar_mut(shift);
        let inv = m
            .cholesky()
            .expect("shifted Laplacian of a connected component is positive definite")
            .inverse();
        let mut pinv = inv;
        pinv.add_scalar_mut(-shift);
        Self {
            local: nodes.into_iter().enumerate().map(|(i, v)| (v, i)).collect(),
            pinv,
        }
    }

    fn resistance(&self, u: usize, v: usize) -> f64 {
        let (a, b) = (self.local[&u], self.local[&v]);
        self.pinv[(a, a)] + self.pinv[(b, b)] - 2.0 * self.pinv[(a, b)]
    }
}

/// Jacobi-preconditioned conjugate gradient on `L x = e_u - e_v`.
fn cg_resistance(g: &Graph, u: usize, v: usize) -> f64 {
    let n = g.n();
    let lap = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            y[i] = g.degree(i) as f64 * x[i] - g.neighbors(i).iter().map(|&j| x[j]).sum::<f64>();
        }
    };
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / g.degree(i).max(1) as f64).collect();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    r[u] = 1.0;
    r[v] = -1.0;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let tol = 1e-26;
    for _ in 0..(10 * n).max(100) {
        lap(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr: f64 = r.iter().map(|a| a * a).sum();
        if rr < tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x[u] - x[v]
}

/// An edge whose resistance exceeds `2 / (t + 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub edge: (usize, usize),
    pub triangles: usize,
    pub resistance: f64,
    pub bound: f64,
}

/// Checks `R(u, v) <= 2 / (t(u, v) + 2)` on every edge (tolerance 1e-9).
/// The bound always holds, so a non-empty result signals a numerical bug.
pub fn resistance_triangle_bound_check(g: &Graph) -> Vec<BoundViolation> {
    let resistances = resistance_per_edge(g);
    triangle_count_per_edge(g)
        .into_iter()
        .zip(resistances)
        .filter_map(|((edge, t), (_, r))| {
            let bound = 2.0 / (t as f64 + 2.0);
            (r > bound + 1e-9).then_some(BoundViolation {
                edge,
                triangles: t,
                resistance: r,
                bound,
            })
        })
        .collect()
}
