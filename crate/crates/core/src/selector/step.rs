use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use crate::autodiff::{AdamW, Tape, Var};
use crate::data::{Part, Split};
use crate::error::{Result, SelectorError};
use crate::rng::Rng;
use crate::triangles::CandidateTriangleSet;

use super::gumbel::{gumbel_select, selection_probabilities};
use super::losses::{
    incidence_matrix, loss_contrastive, loss_participation, loss_structural, perimeters,
    triangle_targets,
};
use super::model::{triangle_inputs, BoundSelector, SelectorModel};
use super::reconstruct::SelectionState;

/// Multipliers of the three selector losses. Zero disables a term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub contrastive: f64,
    pub structural: f64,
    pub participation: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            contrastive: 1.0,
            structural: 1.0,
            participation: 1.0,
        }
    }
}

/// Everything about a candidate set that stays fixed between refreshes.
#[derive(Debug, Clone)]
pub struct TriangleBatch {
    pub candidates: CandidateTriangleSet,
    /// Encoder inputs `[x_i | x_j | x_k]`.
    pub inputs: DMatrix<f64>,
    pub targets: Vec<f64>,
    pub perimeters: Vec<f64>,
    /// Training nodes by candidate incidence.
    pub incidence: Arc<CsrMatrix<f64>>,
    pub train_labels: Vec<usize>,
}

impl TriangleBatch {
    /// `encoder_x` feeds the encoder, `geometry_x` the perimeters.
    pub fn new(
        candidates: CandidateTriangleSet,
        encoder_x: &DMatrix<f64>,
        geometry_x: &DMatrix<f64>,
        labels: &[usize],
        split: &Split,
    ) -> Result<Self, SelectorError> {
        if candidates.is_empty() {
            return Err(SelectorError::EmptyCandidates);
        }
        let train_mask = split.mask(labels.len(), Part::Train);
        Ok(Self {
            inputs: triangle_inputs(encoder_x, &candidates),
            targets: triangle_targets(&candidates, labels, &train_mask),
            perimeters: perimeters(&candidates, geometry_x),
            incidence: Arc::new(incidence_matrix(&candidates, &split.train)),
            train_labels: split.train.iter().map(|&u| labels[u]).collect(),
            candidates,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Values of the three losses and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub contrastive: f64,
    pub structural: f64,
    pub participation: f64,
    pub total: f64,
}

/// A recorded selector forward pass.
pub struct SelectorGraph {
    pub tape: Tape,
    pub bound: BoundSelector,
    pub probabilities: Var,
    pub contrastive: Var,
    pub structural: Var,
    pub participation: Var,
    pub total: Var,
}

impl SelectorGraph {
    pub fn breakdown(&self) -> LossBreakdown {
        LossBreakdown {
            contrastive: self.tape.scalar(self.contrastive),
            structural: self.tape.scalar(self.structural),
            participation: self.tape.scalar(self.participation),
            total: self.tape.scalar(self.total),
        }
    }
}

/// Records the composite selector loss. `noise` switches on train-mode
/// Gumbel perturbation.
pub fn selector_loss(
    model: &SelectorModel,
    batch: &TriangleBatch,
    weights: LossWeights,
    noise: Option<&mut Rng>,
) -> Result<SelectorGraph> {
    let mut tape = Tape::new();
    let z = tape.constant(batch.inputs.clone());
    let bound = model.bind(&mut tape);
    let logits = bound.logits(&mut tape, z)?;
    let p = gumbel_select(&mut tape, logits, model.tau, noise)?;
    let contrastive = loss_contrastive(&mut tape, p, &batch.targets)?;
    let structural = loss_structural(&mut tape, p, &batch.perimeters)?;
    let participation = loss_participation(
        &mut tape,
        p,
        &batch.incidence,
        bound.pi,
        &batch.train_labels,
    )?;
    let a = tape.scalar_mul(contrastive, weights.contrastive);
    let b = tape.scalar_mul(structural, weights.structural);
    let c = tape.scalar_mul(participation, weights.participation);
    let ab = tape.add(a, b)?;
    let total = tape.add(ab, c)?;
    Ok(SelectorGraph {
        tape,
        bound,
        probabilities: p,
        contrastive,
        structural,
        participation,
        total,
    })
}

/// Deterministic selection from the current parameters.
pub fn eval_selection(model: &SelectorModel, batch: &TriangleBatch) -> Result<SelectionState> {
    let logits = model.logits(&batch.inputs)?;
    let p = selection_probabilities(&logits, model.tau);
    Ok(SelectionState::new(&batch.candidates, p)?)
}

/// One optimizer step on encoder, head and `pi`, followed by an eval-mode
/// selection with the updated parameters.
pub fn selector_step(
    model: &mut SelectorModel,
    opt: &mut AdamW,
    batch: &TriangleBatch,
    weights: LossWeights,
    noise: &mut Rng,
) -> Result<(LossBreakdown, SelectionState)> {
    let mut graph = selector_loss(model, batch, weights, Some(noise))?;
    let losses = graph.breakdown();
    graph.tape.backward(graph.total)?;
    let vars = graph.bound.vars();
    let grads: Vec<Option<&DMatrix<f64>>> = vars.iter().map(|&v| graph.tape.grad(v)).collect();
    opt.step(&mut model.params_mut(), &grads)?;
    let state = eval_selection(model, batch)?;
    Ok((losses, state))
}

/// Sets each class target to the mean soft participation of that class's
/// training nodes under the current eval-mode selection.
pub fn init_class_targets(model: &mut SelectorModel, batch: &TriangleBatch) -> Result<()> {
    let logits = model.logits(&batch.inputs)?;
    let p = DMatrix::from_vec(batch.len(), 1, selection_probabilities(&logits, model.tau));
    let mut counts = DMatrix::zeros(batch.incidence.nrows(), 1);
    nalgebra_sparse::ops::serial::spmm_csr_dense(
        0.0,
        &mut counts,
        1.0,
        nalgebra_sparse::ops::Op::NoOp(batch.incidence.as_ref()),
        nalgebra_sparse::ops::Op::NoOp(&p),
    );
    let classes = model.pi.nrows();
    let mut sum = vec![0.0; classes];
    let mut num = vec![0usize; classes];
    for (r, &c) in batch.train_labels.iter().enumerate() {
        sum[c] += counts[(r, 0)];
        num[c] += 1;
    }
    for c in 0..classes {
        model.pi[(c, 0)] = if num[c] > 0 {
            sum[c] / num[c] as f64
        } else {
            0.0
        };
    }
    Ok(())
}
