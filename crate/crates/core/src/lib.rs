//! Differentiable triangle-based graph rewiring for node classification.
//!
//! Candidate triangles are gathered from three views of a node-attributed
//! graph (its own topology, a feature-space k-NN graph and a Delaunay
//! triangulation of learned embeddings). A small MLP scores every triangle,
//! a Gumbel-softmax relaxation turns the scores into selection
//! probabilities, and the rewired graph is the union of the selected
//! triangles' edges. Selection and a GCN classifier are trained in
//! alternation.
//!
//! The crate also carries the structural diagnostics used to compare
//! rewirings: balanced Forman curvature, effective resistance, the spectral
//! gap of the normalized Laplacian, Cheeger bounds and the diameter.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod gnn;
pub mod graph;
pub mod pipeline;
pub mod rng;
pub mod selector;
pub mod triangles;

pub use error::{Error, Result};
pub use geometry::FeatureMatrix;
pub use graph::{Distance, EdgeList, Graph};
pub use triangles::{CandidateTriangleSet, SourceMask, Triangle};
