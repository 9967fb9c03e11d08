use nalgebra::DMatrix;

use crate::autodiff::{BoundMlp, Mlp, Tape, Var};
use crate::error::AutodiffError;
use crate::rng::Rng;
use crate::triangles::CandidateTriangleSet;

/// Triangle encoder, selection head, temperature and per-class
/// participation targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorModel {
    /// Maps `[x_i | x_j | x_k]` (width `3d`) to a triangle embedding.
    pub encoder: Mlp,
    /// Maps an embedding to two selection logits (drop, keep).
    pub head: Mlp,
    pub tau: f64,
    /// Target number of incident triangles per class, `C x 1`.
    pub pi: DMatrix<f64>,
}

impl SelectorModel {
    pub fn new(
        feature_dim: usize,
        hidden: usize,
        embed_dim: usize,
        classes: usize,
        tau: f64,
        rng: &mut Rng,
    ) -> Self {
        assert!(tau > 0.0, "temperature must be positive");
        Self {
            encoder: Mlp::new(&[3 * feature_dim, hidden, embed_dim], true, rng),
            head: Mlp::new(&[embed_dim, 2], false, rng),
            tau,
            pi: DMatrix::zeros(classes, 1),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.input_dim() / 3
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundSelector {
        BoundSelector {
            encoder: self.encoder.bind(tape),
            head: self.head.bind(tape),
            pi: tape.param(self.pi.clone()),
        }
    }

    /// Encoder, head and `pi`, in the order of [`BoundSelector::vars`].
    pub fn params_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        let mut out = self.encoder.params_mut();
        out.extend(self.head.params_mut());
        out.push(&mut self.pi);
        out
    }

    pub fn named_params(&self) -> Vec<(String, &DMatrix<f64>)> {
        let mut out = self.encoder.named_params("encoder");
        out.extend(self.head.named_params("head"));
        out.push(("pi".to_string(), &self.pi));
        out
    }

    /// Eval-mode triangle embeddings, one row per candidate.
    pub fn encode_triangles(
        &self,
        x: &DMatrix<f64>,
        t: &CandidateTriangleSet,
    ) -> Result<DMatrix<f64>, AutodiffError> {
        let mut tape = Tape::new();
        let z = tape.constant(triangle_inputs(x, t));
        let bound = self.bind(&mut tape);
        let e = bound.encode(&mut tape, z)?;
        Ok(tape.value(e).clone())
    }

    /// Eval-mode logits `|T| x 2`.
    pub fn logits(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>, AutodiffError> {
        let mut tape = Tape::new();
        let z = tape.constant(z.clone());
        let bound = self.bind(&mut tape);
        let s = bound.logits(&mut tape, z)?;
        Ok(tape.value(s).clone())
    }
}

/// A [`SelectorModel`] whose parameters live on a tape.
#[derive(Debug, Clone)]
pub struct BoundSelector {
    pub encoder: BoundMlp,
    pub head: BoundMlp,
    pub pi: Var,
}

impl BoundSelector {
    pub fn encode(&self, tape: &mut Tape, z: Var) -> Result<Var, AutodiffError> {
        self.encoder.forward(tape, z)
    }

    pub fn logits(&self, tape: &mut Tape, z: Var) -> Result<Var, AutodiffError> {
        let e = self.encode(tape, z)?;
        self.head.forward(tape, e)
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.encoder.vars();
        v.extend(self.head.vars());
        v.push(self.pi);
        v
    }
}

/// Row `t` is `[x_i | x_j | x_k]` for the `t`-th candidate `(i, j, k)`.
pub fn triangle_inputs(x: &DMatrix<f64>, t: &CandidateTriangleSet) -> DMatrix<f64> {
    let d = x.ncols();
    let mut z = DMatrix::zeros(t.len(), 3 * d);
    for (r, tri) in t.triangles().iter().enumerate() {
        for (slot, &node) in tri.nodes().iter().enumerate() {
            for c in 0..d {
                z[(r, slot * d + c)] = x[(node, c)];
            }
        }
    }
    z
}
