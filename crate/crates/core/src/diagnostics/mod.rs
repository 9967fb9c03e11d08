//! Structural diagnostics: balanced Forman curvature, effective resistance,
//! spectral gap, Cheeger and diameter bounds, and the top-p resistance curve.

mod cheeger;
mod curvature;
mod report;
mod resistance;
mod spectral;

pub use cheeger::{
    cheeger_bounds, cheeger_constant, diameter_bound_check, CheegerBounds, DiameterBoundReport,
    EXACT_LIMIT,
};
pub use curvature::{balanced_forman_curvature, curvature_per_edge, edge_motifs, EdgeMotifs};
pub use report::{top_p_resistance_curve, DiagnosticsReport, EdgeDiagnostics, DEFAULT_P_GRID};
pub use resistance::{
    effective_resistance, effective_resistance_with, resistance_per_edge,
    resistance_triangle_bound_check, BoundViolation, ResistanceSolver,
};
pub use spectral::{normalized_spectrum, spectral_gap, spectral_gap_with, EigenSolver};
