//! Reverse-mode automatic differentiation over dense `f64` matrices, with a
//! CSR sparse product, AdamW and a small binary checkpoint format.

mod checkpoint;
mod layers;
mod optim;
mod tape;

pub use checkpoint::{read_checkpoint, write_checkpoint, MAGIC, VERSION};
pub use layers::{glorot, BoundMlp, Linear, Mlp};
pub use optim::AdamW;
pub use tape::{sigmoid, Tape, Var};

pub use nalgebra::DMatrix;
pub use nalgebra_sparse::CsrMatrix;
