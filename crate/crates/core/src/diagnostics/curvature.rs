use crate::error::GraphError;
use crate::graph::Graph;

/// Motif counts entering the balanced Forman curvature of one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeMotifs {
    /// Triangles containing the edge.
    pub triangles: usize,
    /// Neighbours of `u` (not `v`, not adjacent to `v`) on a chordless
    /// 4-cycle through the edge.
    pub squares_u: usize,
    pub squares_v: usize,
    /// Largest number of such 4-cycles passing through a single node.
    pub max_squares_through_node: usize,
}

/// Motif counts for the edge `(u, v)` by enumeration over the 2-hop
/// neighbourhood.
pub fn edge_motifs(g: &Graph, u: usize, v: usize) -> Result<EdgeMotifs, GraphError> {
    if u == v || !g.has_edge(u, v) {
        return Err(GraphError::MissingEdge { u, v });
    }
    let triangles = g.neighbors(u).iter().filter(|&&k| g.has_edge(k, v)).count();
    let (squares_u, max_u) = one_sided_squares(g, u, v);
    let (squares_v, max_v) = one_sided_squares(g, v, u);
    Ok(EdgeMotifs {
        triangles,
        squares_u,
        squares_v,
        max_squares_through_node: max_u.max(max_v),
    })
}

/// Counts `k ∈ N(a) \ N(b), k != b` having some `w ∈ N(k) ∩ N(b)`,
/// `w ∉ N(a)`, `w != a`, and the maximum number of such `w` over `k`.
fn one_sided_squares(g: &Graph, a: usize, b: usize) -> (usize, usize) {
    let mut count = 0;
    let mut max_cycles = 0;
    for &k in g.neighbors(a) {
        if k == b || g.has_edge(k, b) {
            continue;
        }
        let cycles = g
            .neighbors(k)
            .iter()
            .filter(|&&w| w != a && g.has_edge(w, b) && !g.has_edge(w, a))
            .count();
        if cycles > 0 {
            count += 1;
            max_cycles = max_cycles.max(cycles);
        }
    }
    (count, max_cycles)
}

/// Balanced Forman curvature of the edge `(u, v)`:
///
/// `2/d_u + 2/d_v - 2 + 2t/max(d_u,d_v) + t/min(d_u,d_v)
///  + (γ_u + γ_v) / (Γ_max · max(d_u,d_v))`,
///
/// where the 4-cycle term is 0 whenever no chordless 4-cycle exists.
pub fn balanced_forman_curvature(g: &Graph, u: usize, v: usize) -> Result<f64, GraphError> {
    let motifs = edge_motifs(g, u, v)?;
    let (du, dv) = (g.degree(u) as f64, g.degree(v) as f64);
    let (dmax, dmin) = (du.max(dv), du.min(dv));
    let t = motifs.triangles as f64;
    let mut c = 2.0 / du + 2.0 / dv - 2.0 + 2.0 * t / dmax + t / dmin;
    let squares = motifs.squares_u + motifs.squares_v;
    if squares > 0 {
        c += squares as f64 / (motifs.max_squares_through_node as f64 * dmax);
    }
    Ok(c)
}

/// Curvature of every edge, in [`Graph::edges`] order.
pub fn curvature_per_edge(g: &Graph) -> Vec<((usize, usize), f64)> {
    g.edges()
        .map(|(u, v)| {
            (
                (u, v),
                balanced_forman_curvature(g, u, v).expect("edge exists"),
            )
        })
        .collect()
}
