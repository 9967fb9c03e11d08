use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::autodiff::{Tape, Var};
use crate::error::AutodiffError;
use crate::triangles::CandidateTriangleSet;

use super::reconstruct::THRESHOLD;

/// `y = 1` when at least two of the triangle's nodes are training nodes with
/// the same label. Labels outside the training set are never consulted.
pub fn triangle_targets(
    t: &CandidateTriangleSet,
    labels: &[usize],
    train_mask: &[bool],
) -> Vec<f64> {
    t.triangles()
        .iter()
        .map(|tri| {
            let seen: Vec<usize> = tri
                .nodes()
                .into_iter()
                .filter(|&u| train_mask[u])
                .map(|u| labels[u])
                .collect();
            let agree = (0..seen.len()).any(|a| (a + 1..seen.len()).any(|b| seen[a] == seen[b]));
            if agree {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// `|x_i - x_j| + |x_j - x_k| + |x_k - x_i|` per candidate.
pub fn perimeters(t: &CandidateTriangleSet, x: &DMatrix<f64>) -> Vec<f64> {
    let dist = |a: usize, b: usize| (x.row(a) - x.row(b)).norm();
    t.triangles()
        .iter()
        .map(|tri| {
            let [i, j, k] = tri.nodes();
            dist(i, j) + dist(j, k) + dist(k, i)
        })
        .collect()
}

/// `|nodes| x |T|` 0/1 matrix; entry `(r, t)` is set when triangle `t`
/// contains `nodes[r]`.
pub fn incidence_matrix(t: &CandidateTriangleSet, nodes: &[usize]) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(nodes.len(), t.len());
    for (r, &u) in nodes.iter().enumerate() {
        for &ti in t.incident(u) {
            coo.push(r, ti, 1.0);
        }
    }
    CsrMatrix::from(&coo)
}

fn column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

/// Mean over candidates of `(1 - y) p^2 + y max(0, 1 - p)^2`.
pub fn loss_contrastive(tape: &mut Tape, p: Var, targets: &[f64]) -> Result<Var, AutodiffError> {
    let n = targets.len();
    let y = tape.constant(column(targets));
    let not_y = tape.constant(column(&targets.iter().map(|y| 1.0 - y).collect::<Vec<_>>()));
    let ones = tape.constant(DMatrix::from_element(n, 1, 1.0));
    let p2 = tape.square(p);
    let neg = tape.mul(not_y, p2)?;
    let gap = tape.sub(ones, p)?;
    let hinge = tape.relu(gap);
    let hinge2 = tape.square(hinge);
    let pos = tape.mul(y, hinge2)?;
    let both = tape.add(neg, pos)?;
    Ok(tape.mean(both))
}

/// Mean perimeter of the selected triangles (`p >= 0.5`), each weighted by
/// its keep-probability: `sum p_t P_t / sum p_t` over selected `t`. Equals
/// the plain mean when the selected probabilities are equal and is 0 when
/// nothing is selected.
pub fn loss_structural(tape: &mut Tape, p: Var, perimeters: &[f64]) -> Result<Var, AutodiffError> {
    let mask: Vec<f64> = tape
        .value(p)
        .iter()
        .map(|&v| if v >= THRESHOLD { 1.0 } else { 0.0 })
        .collect();
    if mask.iter().all(|&m| m == 0.0) {
        return Ok(tape.constant(DMatrix::zeros(1, 1)));
    }
    let weighted: Vec<f64> = mask.iter().zip(perimeters).map(|(m, l)| m * l).collect();
    let w = tape.constant(column(&weighted));
    let m = tape.constant(column(&mask));
    let num_terms = tape.mul(p, w)?;
    let num = tape.sum(num_terms);
    let den_terms = tape.mul(p, m)?;
    let den = tape.sum(den_terms);
    tape.div(num, den)
}

/// Mean over training nodes of `(sum_{t ∋ i} p_t - pi_{y_i})^2`.
pub fn loss_participation(
    tape: &mut Tape,
    p: Var,
    incidence: &Arc<CsrMatrix<f64>>,
    pi: Var,
    train_labels: &[usize],
) -> Result<Var, AutodiffError> {
    if train_labels.is_empty() {
        return Ok(tape.constant(DMatrix::zeros(1, 1)));
    }
    let counts = tape.sparse_matmul(incidence, p)?;
    let targets = tape.gather_rows(pi, train_labels)?;
    let diff = tape.sub(counts, targets)?;
    let sq = tape.square(diff);
    Ok(tape.mean(sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangles::{SourceMask, Triangle};

    fn set(n: usize, tris: &[[usize; 3]]) -> CandidateTriangleSet {
        CandidateTriangleSet::from_triangles(
            n,
            tris.iter()
                .map(|t| Triangle::new(t[0], t[1], t[2], SourceMask::ORIGINAL).unwrap()),
        )
        .unwrap()
    }

    fn eval(f: impl FnOnce(&mut Tape) -> Var) -> f64 {
        let mut t = Tape::new();
        let v = f(&mut t);
        t.scalar(v)
    }

    #[test]
    fn targets_use_training_labels_only() {
        let t = set(4, &[[0, 1, 2], [1, 2, 3]]);
        let labels = [0, 0, 1, 1];
        assert_eq!(
            triangle_targets(&t, &labels, &[true, true, false, false]),
            vec![1.0, 0.0]
        );
        assert_eq!(
            triangle_targets(&t, &labels, &[true, false, true, true]),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn contrastive_zero_cases() {
        let l = eval(|t| {
            let p = t.param(DMatrix::zeros(3, 1));
            loss_contrastive(t, p, &[0.0, 0.0, 0.0]).unwrap()
        });
        assert_eq!(l, 0.0);
        let l = eval(|t| {
            let p = t.param(DMatrix::from_element(1, 1, 1.0));
            loss_contrastive(t, p, &[1.0]).unwrap()
        });
        assert_eq!(l, 0.0);
    }

    #[test]
    fn unit_square_perimeter() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let per = perimeters(&set(3, &[[0, 1, 2]]), &x);
        let l = eval(|t| {
            let p = t.param(DMatrix::from_element(1, 1, 1.0));
            loss_structural(t, p, &per).unwrap()
        });
        assert!((l - (2.0 + 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn structural_ignores_unselected() {
        let l = eval(|t| {
            let p = t.param(DMatrix::from_column_slice(2, 1, &[0.4, 0.2]));
            loss_structural(t, p, &[1.0, 2.0]).unwrap()
        });
        assert_eq!(l, 0.0);
    }

    #[test]
    fn participation_zero_cases() {
        let t = set(3, &[[0, 1, 2]]);
        let inc = Arc::new(incidence_matrix(&t, &[0]));
        let l = eval(|tape| {
            let p = tape.param(DMatrix::zeros(1, 1));
            let pi = tape.param(DMatrix::zeros(2, 1));
            loss_participation(tape, p, &inc, pi, &[1]).unwrap()
        });
        assert_eq!(l, 0.0);
        let l = eval(|tape| {
            let p = tape.param(DMatrix::from_element(1, 1, 1.0));
            let pi = tape.param(DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
            loss_participation(tape, p, &inc, pi, &[1]).unwrap()
        });
        assert_eq!(l, 0.0);
    }

    #[test]
    fn soft_counts_match_hard_counts_on_binary_p() {
        let t = set(5, &[[0, 1, 2], [0, 2, 3], [1, 3, 4]]);
        let inc = incidence_matrix(&t, &[0, 1, 2, 3, 4]);
        let p = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 1.0]);
        let counts = nalgebra::DMatrix::from(&inc) * p;
        assert_eq!(counts.as_slice(), &[1.0, 2.0, 1.0, 1.0, 1.0]);
    }
}
