//! Undirected simple graphs in compressed adjacency form.
//!
//! A [`Graph`] is immutable once built: rewiring always produces a new value.
//! Nodes are dense indices `0..n`; any external identifiers are mapped by the
//! data loaders before a graph is constructed.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::GraphError;

/// Canonical undirected edge list: pairs `(u, v)` with `u < v`, sorted and
/// deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    pairs: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Canonicalizes arbitrary pairs: orients `u < v`, drops self-loops and
    /// merges duplicates.
    pub fn new<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Largest endpoint plus one, or 0 for an empty list.
    pub fn min_node_count(&self) -> usize {
        self.pairs.iter().map(|&(_, v)| v + 1).max().unwrap_or(0)
    }

    /// Parses the `u<TAB>v` text format. Blank lines and `#` comments are
    /// skipped; any whitespace is accepted as separator.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| GraphError::Parse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut fields = body.split_whitespace();
            let mut next = |name: &str| -> Result<usize, GraphError> {
                let tok = fields.next().ok_or_else(|| GraphError::Parse {
                    line: idx + 1,
                    reason: format!("missing {name} endpoint"),
                })?;
                tok.parse().map_err(|_| GraphError::Parse {
                    line: idx + 1,
                    reason: format!("invalid node id {tok:?}"),
                })
            };
            let u = next("first")?;
            let v = next("second")?;
            pairs.push((u, v));
        }
        Ok(Self::new(pairs))
    }

    /// Writes one `u<TAB>v` line per edge, in canonical order.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &(u, v) in &self.pairs {
            writeln!(out, "{u}\t{v}")?;
        }
        Ok(())
    }
}

impl FromIterator<(usize, usize)> for EdgeList {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        Self::new(iter)
    }
}

/// Hop distance that may be infinite on disconnected graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

/// Immutable undirected simple graph (CSR adjacency, sorted neighbor lists).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph on `n` nodes. Self-loops are dropped and duplicates
    /// merged; every endpoint must lie in `0..n`.
    pub fn new(n: usize, edges: &EdgeList) -> Result<Self, GraphError> {
        if let Some(&(u, v)) = edges.pairs().iter().find(|&&(_, v)| v >= n) {
            return Err(GraphError::NodeOutOfRange { u, v, n });
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in edges.pairs() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in edges.pairs() {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Self { offsets, neighbors })
    }

    /// Convenience constructor from raw pairs.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(n, &EdgeList::new(pairs))
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::from_pairs(n, pairs).expect("complete graph endpoints are in range")
    }

    pub fn path(n: usize) -> Self {
        Self::from_pairs(n, (1..n).map(|v| (v - 1, v))).expect("path endpoints are in range")
    }

    pub fn cycle(n: usize) -> Self {
        let pairs = (0..n).map(|v| (v, (v + 1) % n));
        Self::from_pairs(n, pairs).expect("cycle endpoints are in range")
    }

    /// Star with one center (node 0) and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_pairs(leaves + 1, (1..=leaves).map(|v| (0, v)))
            .expect("star endpoints are in range")
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Sum of degrees over `nodes`.
    pub fn volume(&self, nodes: &[usize]) -> Result<usize, GraphError> {
        let n = self.n();
        nodes.iter().try_fold(0, |acc, &i| {
            if i >= n {
                Err(GraphError::InvalidNode { node: i, n })
            } else {
                Ok(acc + self.degree(i))
            }
        })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    pub fn edge_list(&self) -> EdgeList {
        EdgeList {
            pairs: self.edges().collect(),
        }
    }

    /// Hop distances from `source`; `None` marks unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn eccentricity(&self, i: usize) -> Result<Distance, GraphError> {
        if i >= self.n() {
            return Err(GraphError::InvalidNode {
                node: i,
                n: self.n(),
            });
        }
        let dist = self.bfs_distances(i);
        Ok(dist
            .iter()
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
            .map_or(Distance::Infinite, Distance::Finite))
    }

    /// Exact diameter via BFS from every node. Disconnected graphs report
    /// [`Distance::Infinite`]; the empty graph has diameter 0.
    pub fn diameter(&self) -> Distance {
        let mut best = 0;
        for i in 0..self.n() {
            match self.eccentricity(i).expect("node index in range") {
                Distance::Finite(e) => best = best.max(e),
                Distance::Infinite => return Distance::Infinite,
            }
        }
        Distance::Finite(best)
    }

    /// Connected-component label per node, labels numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |c| c + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Subgraph induced by `nodes` (relabelled in the given order) together
    /// with the map from new to original ids.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> (Graph, Vec<usize>) {
        let mut index = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let pairs = nodes.iter().enumerate().flat_map(|(new_u, &u)| {
            let index = &index;
            self.neighbors(u)
                .iter()
                .filter(move |&&v| index[v] != usize::MAX)
                .map(move |&v| (new_u, index[v]))
        });
        let g = Graph::from_pairs(nodes.len(), pairs).expect("relabelled endpoints are in range");
        (g, nodes.to_vec())
    }

    /// Node sets of each connected component, largest first (ties by smallest
    /// member).
    pub fn component_sets(&self) -> Vec<Vec<usize>> {
        let labels = self.components();
        let count = labels.iter().max().map_or(0, |c| c + 1);
        let mut sets = vec![Vec::new(); count];
        for (i, &c) in labels.iter().enumerate() {
            sets[c].push(i);
        }
        sets.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        sets
    }

    /// Dense adjacency matrix.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for (u, v) in self.edges() {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Combinatorial Laplacian `D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency_matrix();
        for i in 0..self.n() {
            l[(i, i)] = self.degree(i) as f64;
        }
        l
    }

    /// Normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
    ///
    /// Isolated nodes get `D^{-1/2} = 0`, so their whole row and column
    /// (diagonal included) is zero.
    pub fn normalized_laplacian(&self) -> DMatrix<f64> {
        let n = self.n();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| match self.degree(i) {
                0 => 0.0,
                d => 1.0 / (d as f64).sqrt(),
            })
            .collect();
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            if self.degree(i) > 0 {
                l[(i, i)] = 1.0;
            }
        }
        for (u, v) in self.edges() {
            let w = -inv_sqrt[u] * inv_sqrt[v];
            l[(u, v)] = w;
            l[(v, u)] = w;
        }
        l
    }
}
