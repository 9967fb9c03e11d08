use nalgebra::DMatrix;
use rand::Rng as _;

use crate::autodiff::{sigmoid, Tape, Var};
use crate::error::AutodiffError;
use crate::rng::Rng;

/// One standard Gumbel draw, `-ln(-ln U)`.
pub fn sample_gumbel(rng: &mut Rng) -> f64 {
    // open interval keeps both logarithms finite
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    -(-u.ln()).ln()
}

/// Keep-probabilities `p = softmax((s + G) / tau)[1]` as a `|T| x 1` column.
///
/// With `noise` the Gumbel perturbation is drawn from it (train mode);
/// without, `G = 0` and `p = sigmoid((s1 - s0) / tau)`.
pub fn gumbel_select(
    tape: &mut Tape,
    logits: Var,
    tau: f64,
    noise: Option<&mut Rng>,
) -> Result<Var, AutodiffError> {
    let (rows, cols) = tape.shape(logits);
    if cols != 2 {
        return Err(AutodiffError::ShapeMismatch {
            op: "gumbel_select",
            left: (rows, cols),
            right: (rows, 2),
        });
    }
    let contrast = tape.constant(DMatrix::from_column_slice(2, 1, &[-1.0, 1.0]));
    let mut diff = tape.matmul(logits, contrast)?;
    if let Some(rng) = noise {
        let g = DMatrix::from_fn(rows, 1, |_, _| {
            let g0 = sample_gumbel(rng);
            let g1 = sample_gumbel(rng);
            g1 - g0
        });
        let g = tape.constant(g);
        diff = tape.add(diff, g)?;
    }
    let scaled = tape.scalar_mul(diff, 1.0 / tau);
    Ok(tape.sigmoid(scaled))
}

/// Deterministic eval-mode probabilities from a `|T| x 2` logit matrix.
pub fn selection_probabilities(logits: &DMatrix<f64>, tau: f64) -> Vec<f64> {
    logits
        .row_iter()
        .map(|r| sigmoid((r[1] - r[0]) / tau))
        .collect()
}
