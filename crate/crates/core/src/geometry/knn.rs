use std::cmp::Ordering;

use crate::error::GeometryError;
use crate::geometry::FeatureMatrix;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(x_i, x_j)`; a zero row is at distance 1 from everything.
    Cosine,
}

impl Metric {
    fn distances_from(self, x: &FeatureMatrix, norms: &[f64], i: usize) -> Vec<f64> {
        let n = x.rows();
        match self {
            Metric::Euclidean => (0..n).map(|j| x.squared_distance(i, j)).collect(),
            Metric::Cosine => (0..n)
                .map(|j| {
                    if norms[i] == 0.0 || norms[j] == 0.0 {
                        return 1.0;
                    }
                    let dot: f64 = (0..x.dim()).map(|c| x.get(i, c) * x.get(j, c)).sum();
                    1.0 - dot / (norms[i] * norms[j])
                })
                .collect(),
        }
    }
}

/// The `k` nearest neighbours of every node (excluding itself), ties broken
/// by smaller node index.
pub fn nearest_neighbors(
    x: &FeatureMatrix,
    k: usize,
    metric: Metric,
) -> Result<Vec<Vec<usize>>, GeometryError> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(GeometryError::InvalidK { k, n });
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| {
            (0..x.dim())
                .map(|c| x.get(i, c).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let dist = metric.distances_from(x, &norms, i);
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let key = |a: &usize, b: &usize| {
                dist[*a]
                    .partial_cmp(&dist[*b])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(b))
            };
            order.select_nth_unstable_by(k - 1, key);
            order.truncate(k);
            order.sort_by(key);
            order
        })
        .collect())
}

/// Union-symmetrized k-NN graph: `(i, j)` is an edge iff `j` is among the
/// `k` nearest neighbours of `i` or vice versa.
pub fn knn_graph(x: &FeatureMatrix, k: usize, metric: Metric) -> Result<Graph, GeometryError> {
    let lists = nearest_neighbors(x, k, metric)?;
    let pairs = lists
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i, j)));
    Ok(Graph::from_pairs(x.rows(), pairs).expect("neighbour ids are in range"))
}
