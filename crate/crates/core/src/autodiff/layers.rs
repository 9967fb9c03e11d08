use nalgebra::DMatrix;
use rand::Rng as _;

use super::tape::{Tape, Var};
use crate::error::AutodiffError;
use crate::rng::Rng;

/// Glorot-uniform `rows x cols` matrix.
pub fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    let a = (6.0 / (rows + cols).max(1) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-a..=a))
}

/// Affine layer `x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: DMatrix<f64>,
    pub bias: DMatrix<f64>,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut Rng) -> Self {
        Self {
            weight: glorot(input, output, rng),
            bias: DMatrix::zeros(1, output),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            weight: DMatrix::identity(dim, dim),
            bias: DMatrix::zeros(1, dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// Stack of [`Linear`] layers with ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    /// Apply ReLU after the last layer as well.
    pub activate_output: bool,
}

impl Mlp {
    /// `dims = [in, hidden..., out]`.
    pub fn new(dims: &[usize], activate_output: bool, rng: &mut Rng) -> Self {
        assert!(dims.len() >= 2, "an MLP needs input and output dimensions");
        let layers = dims
            .windows(2)
            .map(|w| Linear::new(w[0], w[1], rng))
            .collect();
        Self {
            layers,
            activate_output,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").output_dim()
    }

    /// Registers the weights as differentiable leaves.
    pub fn bind(&self, tape: &mut Tape) -> BoundMlp {
        let vars = self
            .layers
            .iter()
            .map(|l| (tape.param(l.weight.clone()), tape.param(l.bias.clone())))
            .collect();
        BoundMlp {
            vars,
            activate_output: self.activate_output,
        }
    }

    pub fn params(&self) -> Vec<&DMatrix<f64>> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &DMatrix<f64>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("{prefix}.w{i}"), &l.weight),
                    (format!("{prefix}.b{i}"), &l.bias),
                ]
            })
            .collect()
    }
}

/// An [`Mlp`] whose weights live on a tape.
#[derive(Debug, Clone)]
pub struct BoundMlp {
    vars: Vec<(Var, Var)>,
    activate_output: bool,
}

impl BoundMlp {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var, AutodiffError> {
        let mut h = x;
        let last = self.vars.len() - 1;
        for (i, &(w, b)) in self.vars.iter().enumerate() {
            let z = tape.matmul(h, w)?;
            h = tape.add_row(z, b)?;
            if i < last || self.activate_output {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    /// Weight and bias handles in the order of [`Mlp::params`].
    pub fn vars(&self) -> Vec<Var> {
        self.vars.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}
