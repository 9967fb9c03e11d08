//! Feature-derived candidate views: k-NN graphs over node features and the
//! Delaunay triangulation of (projected) embeddings.

mod delaunay;
mod features;
mod knn;
mod projection;

pub use delaunay::delaunay;
pub use features::FeatureMatrix;
pub use knn::{knn_graph, nearest_neighbors, Metric};
pub use projection::{project_2d, PlanarPointSet};
