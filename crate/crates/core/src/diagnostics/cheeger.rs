use crate::error::GraphError;
use crate::graph::{Distance, Graph};

use super::spectral::spectral_gap;

/// Largest graph for which the Cheeger constant is computed exhaustively.
pub const EXACT_LIMIT: usize = 14;

/// Cheeger constant by exhaustive search over node subsets:
/// `h(G) = min_S |∂S| / min(vol S, vol V∖S)` over proper nonempty `S`.
///
/// Disconnected graphs have `h = 0`. Returns `None` for graphs with fewer
/// than two nodes or without edges.
pub fn cheeger_constant(g: &Graph) -> Result<Option<f64>, GraphError> {
    let n = g.n();
    if n > EXACT_LIMIT {
        return Err(GraphError::TooLarge {
            what: "exact Cheeger constant",
            n,
            max: EXACT_LIMIT,
        });
    }
    if n < 2 || g.m() == 0 {
        return Ok(None);
    }
    if !g.is_connected() {
        return Ok(Some(0.0));
    }
    let deg = g.degrees();
    let total: usize = deg.iter().sum();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut best = f64::INFINITY;
    // fixing node n-1 outside S covers every cut once
    for mask in 1u32..(1u32 << (n - 1)) {
        let vol: usize = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| deg[i]).sum();
        let boundary = edges
            .iter()
            .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
            .count();
        let denom = vol.min(total - vol);
        if denom > 0 {
            best = best.min(boundary as f64 / denom as f64);
        }
    }
    Ok(Some(best))
}

/// Bounds on `h(G)` obtained by inverting `h²/2 <= λ2 <= 2h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheegerBounds {
    pub lambda2: f64,
    /// `λ2 / 2`
    pub lower: f64,
    /// `sqrt(2 λ2)`
    pub upper: f64,
    /// Exhaustive value when `n <= EXACT_LIMIT`.
    pub exact: Option<f64>,
}

impl CheegerBounds {
    /// Whether the exact value (if any) lies inside the bounds, with slack `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.exact
            .is_none_or(|h| self.lower <= h + tol && h <= self.upper + tol)
    }
}

pub fn cheeger_bounds(g: &Graph) -> CheegerBounds {
    let lambda2 = spectral_gap(g);
    let exact = if g.n() <= EXACT_LIMIT {
        cheeger_constant(g).expect("size checked")
    } else {
        None
    };
    CheegerBounds {
        lambda2,
        lower: lambda2 / 2.0,
        upper: (2.0 * lambda2).sqrt(),
        exact,
    }
}

/// Diameter bound `diam(G) <= 2 ln vol(V) / ln(1 + h/d_min)` evaluated with
/// the exact Cheeger constant, together with its rearrangement as an upper
/// bound on `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterBoundReport {
    pub diameter: usize,
    pub cheeger: f64,
    pub min_degree: usize,
    pub volume: usize,
    /// `2 ln vol / ln(1 + h/d_min)`
    pub diameter_bound: f64,
    /// `d_min (vol^{2/diam} - 1)`, an upper bound on `h`.
    pub cheeger_ceiling: f64,
    /// `diam <= diameter_bound` and `h <= cheeger_ceiling` (tolerance 1e-9).
    pub holds: bool,
    /// Whether `h >= d_min (vol^{2/diam} - 1)` happens to hold as well. This
    /// reversed inequality is not implied by the diameter bound.
    pub reversed_holds: bool,
}

pub fn diameter_bound_check(g: &Graph) -> Result<DiameterBoundReport, GraphError> {
    let comps = g.component_count();
    if comps > 1 {
        return Err(GraphError::Disconnected { components: comps });
    }
    let h = cheeger_constant(g)?.ok_or(GraphError::Degenerate(
        "diameter bound needs at least one edge",
    ))?;
    let Distance::Finite(diameter) = g.diameter() else {
        unreachable!("connected graph has finite diameter")
    };
    let deg = g.degrees();
    let min_degree = *deg.iter().min().expect("n >= 2");
    let volume: usize = deg.iter().sum();
    let vol = volume as f64;
    let dmin = min_degree as f64;
    let diameter_bound = 2.0 * vol.ln() / (1.0 + h / dmin).ln();
    let cheeger_ceiling = dmin * (vol.powf(2.0 / diameter as f64) - 1.0);
    let holds = diameter as f64 <= diameter_bound + 1e-9 && h <= cheeger_ceiling + 1e-9;
    Ok(DiameterBoundReport {
        diameter,
        cheeger: h,
        min_degree,
        volume,
        diameter_bound,
        cheeger_ceiling,
        holds,
        reversed_holds: h >= cheeger_ceiling - 1e-9,
    })
}
