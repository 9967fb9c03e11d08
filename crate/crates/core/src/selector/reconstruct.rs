use crate::error::GraphError;
use crate::graph::Graph;
use crate::triangles::CandidateTriangleSet;

/// Keep-probability at or above which a triangle is selected.
pub const THRESHOLD: f64 = 0.5;

/// Eval-mode selection and the graph it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState {
    pub probabilities: Vec<f64>,
    pub selected: Vec<bool>,
    pub graph: Graph,
}

impl SelectionState {
    pub fn new(t: &CandidateTriangleSet, probabilities: Vec<f64>) -> Result<Self, GraphError> {
        let (graph, _) = reconstruct_graph(t, &probabilities)?;
        let selected = probabilities.iter().map(|&p| p >= THRESHOLD).collect();
        Ok(Self {
            probabilities,
            selected,
            graph,
        })
    }

    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn is_empty(&self) -> bool {
        self.selected_count() == 0
    }
}

/// Union of the edges of every candidate with `p >= 0.5`. The flag is set
/// when no triangle was selected (the graph then has no edges).
pub fn reconstruct_graph(t: &CandidateTriangleSet, p: &[f64]) -> Result<(Graph, bool), GraphError> {
    if p.len() != t.len() {
        return Err(GraphError::LengthMismatch {
            expected: t.len(),
            got: p.len(),
        });
    }
    let g = t.union_graph(|i| p[i] >= THRESHOLD);
    let empty = !p.iter().any(|&v| v >= THRESHOLD);
    Ok((g, empty))
}
