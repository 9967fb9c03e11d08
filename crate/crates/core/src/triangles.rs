//! Triangle enumeration and the merged candidate set drawn from several
//! graph views.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::index::sample;

use crate::error::GraphError;
use crate::graph::Graph;
use crate::rng::Rng;

/// Default cap on the number of candidate triangles.
pub const DEFAULT_CANDIDATE_CAP: usize = 500_000;

/// Bit set over the views a triangle was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SourceMask(u8);

impl SourceMask {
    pub const ORIGINAL: Self = Self(1);
    pub const KNN: Self = Self(2);
    pub const DELAUNAY: Self = Self(4);
    pub const ALL: Self = Self(7);

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits & !7 == 0).then_some(Self(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Node triple `i < j < k` tagged with the views it came from.
///
/// Ordering and equality consider the nodes first, then the source mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triangle {
    nodes: [usize; 3],
    source: SourceMask,
}

impl Triangle {
    /// Canonicalizes the node order; `None` if nodes repeat or the source is
    /// empty.
    pub fn new(a: usize, b: usize, c: usize, source: SourceMask) -> Option<Self> {
        let mut nodes = [a, b, c];
        nodes.sort_unstable();
        (nodes[0] < nodes[1] && nodes[1] < nodes[2] && !source.is_empty())
            .then_some(Self { nodes, source })
    }

    pub fn nodes(&self) -> [usize; 3] {
        self.nodes
    }

    pub fn source(&self) -> SourceMask {
        self.source
    }

    /// The three edges `(i,j), (j,k), (i,k)`.
    pub fn edges(&self) -> [(usize, usize); 3] {
        let [i, j, k] = self.nodes;
        [(i, j), (j, k), (i, k)]
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.contains(&node)
    }
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k] = self.nodes;
        write!(f, "{i} {j} {k} {}", self.source.0)
    }
}

/// All triangles of `g`, each once, in canonical lexicographic order.
///
/// Edges are oriented from the lower- to the higher-ranked endpoint (rank =
/// degree, then index) and triangles are found by intersecting out-neighbour
/// lists, which bounds the work by the graph's arboricity.
pub fn enumerate_triangles(g: &Graph, source: SourceMask) -> Vec<Triangle> {
    let n = g.n();
    let rank = |u: usize| (g.degree(u), u);
    let out: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&v| rank(u) < rank(v))
                .collect()
        })
        .collect();
    let mut tris = Vec::new();
    for u in 0..n {
        for &v in &out[u] {
            for_each_common(&out[u], &out[v], |w| {
                tris.push(
                    Triangle::new(u, v, w, source).expect("oriented triangle has distinct nodes"),
                );
            });
        }
    }
    tris.sort_unstable();
    tris
}

/// `t(u, v) = |N(u) ∩ N(v)|` for every edge of `g`, in [`Graph::edges`] order.
pub fn triangle_count_per_edge(g: &Graph) -> Vec<((usize, usize), usize)> {
    g.edges()
        .map(|(u, v)| {
            let mut count = 0;
            for_each_common(g.neighbors(u), g.neighbors(v), |_| count += 1);
            ((u, v), count)
        })
        .collect()
}

/// Number of triangles containing the edge `(u, v)`.
pub fn triangles_on_edge(g: &Graph, u: usize, v: usize) -> Result<usize, GraphError> {
    if !g.has_edge(u, v) {
        return Err(GraphError::MissingEdge { u, v });
    }
    let mut count = 0;
    for_each_common(g.neighbors(u), g.neighbors(v), |_| count += 1);
    Ok(count)
}

fn for_each_common(a: &[usize], b: &[usize], mut f: impl FnMut(usize)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Deduplicated candidate triangles with node incidence and per-edge counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTriangleSet {
    n: usize,
    triangles: Vec<Triangle>,
    incidence: Vec<Vec<usize>>,
    edge_counts: BTreeMap<(usize, usize), usize>,
}

impl CandidateTriangleSet {
    /// Merges triangle lists over `n` nodes: the same triple from several
    /// sources appears once with the source bits OR-ed.
    pub fn from_triangles<I>(n: usize, triangles: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Triangle>,
    {
        let mut merged: BTreeMap<[usize; 3], SourceMask> = BTreeMap::new();
        for t in triangles {
            let [_, _, k] = t.nodes();
            if k >= n {
                return Err(GraphError::InvalidNode { node: k, n });
            }
            let slot = merged.entry(t.nodes()).or_default();
            *slot = slot.union(t.source());
        }
        let triangles: Vec<Triangle> = merged
            .into_iter()
            .map(|(nodes, source)| Triangle { nodes, source })
            .collect();
        Ok(Self::index(n, triangles))
    }

    fn index(n: usize, triangles: Vec<Triangle>) -> Self {
        let mut incidence = vec![Vec::new(); n];
        let mut edge_counts = BTreeMap::new();
        for (idx, t) in triangles.iter().enumerate() {
            for v in t.nodes() {
                incidence[v].push(idx);
            }
            for e in t.edges() {
                *edge_counts.entry(e).or_insert(0) += 1;
            }
        }
        Self {
            n,
            triangles,
            incidence,
            edge_counts,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Indices of the candidates containing `node`.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.incidence[node]
    }

    /// Number of candidates containing the edge `(u, v)`, `u < v`.
    pub fn edge_count(&self, u: usize, v: usize) -> usize {
        self.edge_counts
            .get(&(u.min(v), u.max(v)))
            .copied()
            .unwrap_or(0)
    }

    pub fn edge_counts(&self) -> &BTreeMap<(usize, usize), usize> {
        &self.edge_counts
    }

    /// Candidates whose source intersects `views`.
    pub fn restricted_to(&self, views: SourceMask) -> Self {
        let kept = self
            .triangles
            .iter()
            .copied()
            .filter(|t| t.source().intersects(views))
            .collect();
        Self::index(self.n, kept)
    }

    /// Uniform subsample without replacement to at most `max` triangles,
    /// keeping canonical order.
    pub fn capped(&self, max: usize, rng: &mut Rng) -> Self {
        if self.len() <= max {
            return self.clone();
        }
        let mut keep = sample(rng, self.len(), max).into_vec();
        keep.sort_unstable();
        let kept = keep.into_iter().map(|i| self.triangles[i]).collect();
        Self::index(self.n, kept)
    }

    /// Union of the edges of the triangles selected by `mask`.
    pub fn union_graph(&self, mask: impl Fn(usize) -> bool) -> Graph {
        let pairs = self
            .triangles
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask(i))
            .flat_map(|(_, t)| t.edges());
        Graph::from_pairs(self.n, pairs).expect("candidate nodes are in range")
    }

    /// One `i j k source_mask` line per candidate.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.triangles {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(n: usize, reader: R) -> Result<Self, GraphError> {
        let mut tris = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let parse_err = |reason: String| GraphError::Parse {
                line: idx + 1,
                reason,
            };
            let line = line.map_err(|e| parse_err(e.to_string()))?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<usize> = body
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| parse_err(format!("invalid field {t:?}")))
                })
                .collect::<Result<_, _>>()?;
            let [i, j, k, mask] = fields[..] else {
                return Err(parse_err(format!(
                    "expected 4 fields, got {}",
                    fields.len()
                )));
            };
            let source = u8::try_from(mask)
                .ok()
                .and_then(SourceMask::from_bits)
                .ok_or_else(|| parse_err(format!("invalid source mask {mask}")))?;
            let t = Triangle::new(i, j, k, source)
                .ok_or_else(|| parse_err("degenerate triangle".into()))?;
            tris.push(t);
        }
        Self::from_triangles(n, tris)
    }
}

/// Candidate set from the three views: triangles of the original graph, of
/// the k-NN graph, and the Delaunay faces.
pub fn build_candidates(
    g_orig: &Graph,
    g_knn: &Graph,
    tris_delaunay: &[Triangle],
) -> Result<CandidateTriangleSet, GraphError> {
    let n = g_orig.n().max(g_knn.n());
    let all = enumerate_triangles(g_orig, SourceMask::ORIGINAL)
        .into_iter()
        .chain(enumerate_triangles(g_knn, SourceMask::KNN))
        .chain(tris_delaunay.iter().copied());
    CandidateTriangleSet::from_triangles(n, all)
}
