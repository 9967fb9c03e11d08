//! Datasets: directory loading and saving, seeded splits and synthetic
//! generators.

mod dataset;
mod split;
mod synth;

pub use dataset::{
    edge_homophily, load_dataset, Dataset, EDGES_FILE, FEATURES_FILE, LABELS_FILE, SPLIT_FILE,
};
pub use split::{make_split, Part, Split};
pub use synth::{
    block_of, sbm_graph, synth_sbm, synth_two_moons, MoonsConfig, SbmConfig, MAX_ATTEMPTS,
};
