//! Differentiable triangle selection: triangle encoder, Gumbel-softmax
//! relaxation, the three selector losses, graph reconstruction and the
//! alternating selector / GCN training loop.

mod gumbel;
mod losses;
mod model;
mod reconstruct;
mod step;
mod trigon;

pub use gumbel::{gumbel_select, sample_gumbel, selection_probabilities};
pub use losses::{
    incidence_matrix, loss_contrastive, loss_participation, loss_structural, perimeters,
    triangle_targets,
};
pub use model::{triangle_inputs, BoundSelector, SelectorModel};
pub use reconstruct::{reconstruct_graph, SelectionState, THRESHOLD};
pub use step::{
    eval_selection, init_class_targets, selector_loss, selector_step, LossBreakdown, LossWeights,
    SelectorGraph, TriangleBatch,
};
pub use trigon::{
    delaunay_view, run_trigon, run_trigon_observed, static_views, EpochView, SelectorConfig,
    TraceRow, TrigonConfig, TrigonOutcome,
};
