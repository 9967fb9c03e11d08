use std::fmt::Write as _;

use crate::error::GraphError;
use crate::graph::{Distance, Graph};
use crate::triangles::triangle_count_per_edge;

use super::cheeger::{cheeger_bounds, CheegerBounds};
use super::curvature::curvature_per_edge;
use super::resistance::resistance_per_edge;

/// Default grid of top-p fractions.
pub const DEFAULT_P_GRID: [f64; 12] = [
    0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 1.00,
];

/// Mean edge resistance among the `⌈p·m⌉` highest-resistance edges, for each
/// `p` in `ps`. Graphs without edges yield NaN means.
pub fn top_p_resistance_curve(g: &Graph, ps: &[f64]) -> Result<Vec<(f64, f64)>, GraphError> {
    let mut r: Vec<f64> = resistance_per_edge(g).into_iter().map(|(_, r)| r).collect();
    curve_from_resistances(&mut r, ps)
}

pub(crate) fn curve_from_resistances(
    r: &mut [f64],
    ps: &[f64],
) -> Result<Vec<(f64, f64)>, GraphError> {
    if ps.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(GraphError::Degenerate("top-p fractions must lie in (0, 1]"));
    }
    r.sort_by(|a, b| b.total_cmp(a));
    let m = r.len();
    Ok(ps
        .iter()
        .map(|&p| {
            if m == 0 {
                return (p, f64::NAN);
            }
            let count = ((p * m as f64).ceil() as usize).clamp(1, m);
            (p, r[..count].iter().sum::<f64>() / count as f64)
        })
        .collect())
}

/// One row of the per-edge table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDiagnostics {
    pub edge: (usize, usize),
    pub triangles: usize,
    pub curvature: f64,
    pub resistance: f64,
}

/// Structural summary of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub lambda2: f64,
    pub diameter: Distance,
    pub cheeger: CheegerBounds,
    pub per_edge: Vec<EdgeDiagnostics>,
    pub top_p_curve: Vec<(f64, f64)>,
}

impl DiagnosticsReport {
    pub fn compute(name: &str, g: &Graph, ps: &[f64]) -> Result<Self, GraphError> {
        let curvature = curvature_per_edge(g);
        let resistance = resistance_per_edge(g);
        let triangles = triangle_count_per_edge(g);
        let per_edge: Vec<EdgeDiagnostics> = curvature
            .into_iter()
            .zip(resistance)
            .zip(triangles)
            .map(
                |(((edge, curvature), (_, resistance)), (_, triangles))| EdgeDiagnostics {
                    edge,
                    triangles,
                    curvature,
                    resistance,
                },
            )
            .collect();
        let mut r: Vec<f64> = per_edge.iter().map(|e| e.resistance).collect();
        let top_p_curve = curve_from_resistances(&mut r, ps)?;
        let cheeger = cheeger_bounds(g);
        Ok(Self {
            name: name.to_string(),
            nodes: g.n(),
            edges: g.m(),
            components: g.component_count(),
            lambda2: cheeger.lambda2,
            diameter: g.diameter(),
            cheeger,
            per_edge,
            top_p_curve,
        })
    }

    pub fn mean_curvature(&self) -> f64 {
        mean(self.per_edge.iter().map(|e| e.curvature))
    }

    pub fn min_curvature(&self) -> f64 {
        self.per_edge
            .iter()
            .map(|e| e.curvature)
            .fold(f64::NAN, f64::min)
    }

    pub fn mean_resistance(&self) -> f64 {
        mean(self.per_edge.iter().map(|e| e.resistance))
    }

    pub fn max_resistance(&self) -> f64 {
        self.per_edge
            .iter()
            .map(|e| e.resistance)
            .fold(f64::NAN, f64::max)
    }

    /// Key-value summary followed by the curve and the per-edge table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let exact = self
            .cheeger
            .exact
            .map_or_else(|| "n/a".to_string(), |h| h.to_string());
        let _ = writeln!(s, "[graph]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "nodes = {}", self.nodes);
        let _ = writeln!(s, "edges = {}", self.edges);
        let _ = writeln!(s, "components = {}", self.components);
        let _ = writeln!(s, "lambda2 = {}", self.lambda2);
        let _ = writeln!(s, "diameter = {}", self.diameter);
        let _ = writeln!(s, "cheeger_lower = {}", self.cheeger.lower);
        let _ = writeln!(s, "cheeger_upper = {}", self.cheeger.upper);
        let _ = writeln!(s, "cheeger_exact = {exact}");
        let _ = writeln!(s, "mean_curvature = {}", self.mean_curvature());
        let _ = writeln!(s, "min_curvature = {}", self.min_curvature());
        let _ = writeln!(s, "mean_resistance = {}", self.mean_resistance());
        let _ = writeln!(s, "max_resistance = {}", self.max_resistance());
        let _ = writeln!(s, "[curve]");
        let _ = writeln!(s, "p\tmean_resistance");
        for (p, r) in &self.top_p_curve {
            let _ = writeln!(s, "{p}\t{r}");
        }
        let _ = writeln!(s, "[edges]");
        let _ = writeln!(s, "u\tv\ttriangles\tcurvature\tresistance");
        for e in &self.per_edge {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                e.edge.0, e.edge.1, e.triangles, e.curvature, e.resistance
            );
        }
        s
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}
