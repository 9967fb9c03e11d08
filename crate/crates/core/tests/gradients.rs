//! Reverse-mode gradients against central finite differences.

mod common;

use std::sync::Arc;

use common::*;
use trigon_core::autodiff::{CsrMatrix, DMatrix, Tape, Var};
use trigon_core::data::{Part, Split};
use trigon_core::gnn::{cross_entropy, gcn_propagation_matrix, GcnConfig, GcnModel};
use trigon_core::rng::SeedStream;
use trigon_core::selector::{selector_loss, LossWeights, SelectorModel, TriangleBatch};
use trigon_core::triangles::{CandidateTriangleSet, SourceMask, Triangle};
use trigon_core::Graph;

const TOL: f64 = 1e-4;

type Op = dyn Fn(&mut Tape, &[Var]) -> Var;

/// Gradient check of `sum(W ∘ op(inputs))` for a fixed random `W`, over
/// every entry of every input.
fn check(inputs: Vec<DMatrix<f64>>, op: &Op) -> f64 {
    let mut r = rng("projection", inputs.len() as u64);
    let out_shape = {
        let mut t = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|m| t.param(m.clone())).collect();
        let out = op(&mut t, &vars);
        t.shape(out)
    };
    let w = random_matrix(out_shape.0, out_shape.1, &mut r);
    let forward = |xs: &[DMatrix<f64>]| -> (Tape, Vec<Var>, Var) {
        let mut t = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|m| t.param(m.clone())).collect();
        let out = op(&mut t, &vars);
        let wv = t.constant(w.clone());
        let prod = t.mul(out, wv).unwrap();
        let loss = t.sum(prod);
        (t, vars, loss)
    };
    let (mut t, vars, loss) = forward(&inputs);
    t.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (k, v) in vars.iter().enumerate() {
        let analytic = t
            .grad(*v)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(inputs[k].nrows(), inputs[k].ncols()));
        let x: Vec<f64> = inputs[k].as_slice().to_vec();
        let mut f = |flat: &[f64]| {
            let mut xs = inputs.clone();
            xs[k] = DMatrix::from_column_slice(inputs[k].nrows(), inputs[k].ncols(), flat);
            let (t, _, loss) = forward(&xs);
            t.scalar(loss)
        };
        worst = worst.max(gradient_check(&mut f, &x, analytic.as_slice()));
    }
    worst
}

fn m(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    random_matrix(rows, cols, &mut rng("input", seed))
}

fn positive(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    m(rows, cols, seed).map(|v| 1.0 + 0.5 * v)
}

#[test]
fn dense_primitives() {
    let cases: Vec<(&str, Vec<DMatrix<f64>>, Box<Op>)> = vec![
        (
            "matmul",
            vec![m(3, 4, 1), m(4, 2, 2)],
            Box::new(|t, v| t.matmul(v[0], v[1]).unwrap()),
        ),
        (
            "add",
            vec![m(3, 2, 3), m(3, 2, 4)],
            Box::new(|t, v| t.add(v[0], v[1]).unwrap()),
        ),
        (
            "add_row",
            vec![m(4, 3, 5), m(1, 3, 6)],
            Box::new(|t, v| t.add_row(v[0], v[1]).unwrap()),
        ),
        (
            "sub",
            vec![m(2, 5, 7), m(2, 5, 8)],
            Box::new(|t, v| t.sub(v[0], v[1]).unwrap()),
        ),
        (
            "scalar_mul",
            vec![m(3, 3, 9)],
            Box::new(|t, v| t.scalar_mul(v[0], -1.7)),
        ),
        (
            "mul",
            vec![m(3, 2, 10), m(3, 2, 11)],
            Box::new(|t, v| t.mul(v[0], v[1]).unwrap()),
        ),
        (
            "div",
            vec![m(3, 2, 12), positive(3, 2, 13)],
            Box::new(|t, v| t.div(v[0], v[1]).unwrap()),
        ),
        (
            "div_scalar",
            vec![m(1, 1, 14), positive(1, 1, 15)],
            Box::new(|t, v| t.div(v[0], v[1]).unwrap()),
        ),
        (
            "concat_cols",
            vec![m(3, 2, 16), m(3, 1, 17), m(3, 3, 18)],
            Box::new(|t, v| t.concat_cols(v).unwrap()),
        ),
        (
            "gather_rows",
            vec![m(4, 3, 19)],
            Box::new(|t, v| t.gather_rows(v[0], &[2, 0, 2, 3, 2]).unwrap()),
        ),
        ("relu", vec![m(4, 4, 20)], Box::new(|t, v| t.relu(v[0]))),
        (
            "log_softmax",
            vec![m(4, 3, 21)],
            Box::new(|t, v| t.log_softmax(v[0])),
        ),
        (
            "sigmoid",
            vec![m(3, 3, 22)],
            Box::new(|t, v| t.sigmoid(v[0])),
        ),
        ("square", vec![m(2, 3, 23)], Box::new(|t, v| t.square(v[0]))),
        ("sum", vec![m(3, 4, 24)], Box::new(|t, v| t.sum(v[0]))),
        ("mean", vec![m(3, 4, 25)], Box::new(|t, v| t.mean(v[0]))),
        (
            "dropout",
            vec![m(5, 4, 26)],
            Box::new(|t, v| {
                let mut mask_rng = SeedStream::new(3).substream("mask");
                t.dropout(v[0], 0.4, &mut mask_rng)
            }),
        ),
    ];
    for (name, inputs, op) in cases {
        let err = check(inputs, op.as_ref());
        assert!(err < TOL, "{name}: relative error {err}");
    }
}

#[test]
fn sparse_matmul() {
    let g = Graph::from_pairs(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
    let s: Arc<CsrMatrix<f64>> = Arc::new(gcn_propagation_matrix(&g));
    let err = check(vec![m(5, 3, 30)], &move |t, v| {
        t.sparse_matmul(&s, v[0]).unwrap()
    });
    assert!(err < TOL, "relative error {err}");
}

/// Five candidate triangles on eight nodes with two classes.
fn toy_batch() -> (TriangleBatch, DMatrix<f64>, Graph, Vec<usize>, Split) {
    let tris = [[0, 1, 2], [1, 2, 3], [2, 3, 4], [4, 5, 6], [5, 6, 7]];
    let cands = CandidateTriangleSet::from_triangles(
        8,
        tris.iter()
            .map(|t| Triangle::new(t[0], t[1], t[2], SourceMask::KNN).unwrap()),
    )
    .unwrap();
    let x = m(8, 3, 40);
    let labels = vec![0, 0, 1, 1, 0, 1, 1, 0];
    let split = Split::from_parts(&[
        Part::Train,
        Part::Train,
        Part::Train,
        Part::Val,
        Part::Train,
        Part::Train,
        Part::Test,
        Part::Train,
    ]);
    let g = cands.union_graph(|_| true);
    let batch = TriangleBatch::new(cands, &x, &x, &labels, &split).unwrap();
    (batch, x, g, labels, split)
}

fn flatten(ms: &[&DMatrix<f64>]) -> Vec<f64> {
    ms.iter()
        .flat_map(|m| m.as_slice().iter().copied())
        .collect()
}

fn unflatten(dst: Vec<&mut DMatrix<f64>>, flat: &[f64]) {
    let mut at = 0;
    for d in dst {
        let len = d.len();
        d.as_mut_slice().copy_from_slice(&flat[at..at + len]);
        at += len;
    }
}

#[test]
fn selector_and_gcn_composite() {
    let (batch, x, g, labels, split) = toy_batch();
    let mut r = rng("composite", 1);
    let mut selector = SelectorModel::new(3, 6, 4, 2, 0.8, &mut r);
    selector.pi = DMatrix::from_column_slice(2, 1, &[0.7, 1.3]);
    let gcn_cfg = GcnConfig {
        hidden: 5,
        ..GcnConfig::default()
    };
    let gcn = GcnModel::new(3, 2, &gcn_cfg, &mut r);
    let a_hat = Arc::new(gcn_propagation_matrix(&g));
    let weights = LossWeights {
        contrastive: 1.0,
        structural: 0.7,
        participation: 1.3,
    };

    let n_sel = flatten(
        &selector
            .clone()
            .params_mut()
            .iter()
            .map(|p| &**p)
            .collect::<Vec<_>>(),
    )
    .len();
    let mut theta = flatten(
        &selector
            .clone()
            .params_mut()
            .iter()
            .map(|p| &**p)
            .collect::<Vec<_>>(),
    );
    theta.extend(flatten(
        &gcn.clone()
            .params_mut()
            .iter()
            .map(|p| &**p)
            .collect::<Vec<_>>(),
    ));

    let build = |theta: &[f64]| {
        let mut s = selector.clone();
        unflatten(s.params_mut(), &theta[..n_sel]);
        let mut gm = gcn.clone();
        unflatten(gm.params_mut(), &theta[n_sel..]);
        (s, gm)
    };
    let loss_of = |theta: &[f64]| -> f64 {
        let (s, gm) = build(theta);
        let mut noise = SeedStream::new(9).substream("gumbel");
        let sg = selector_loss(&s, &batch, weights, Some(&mut noise)).unwrap();
        let mut fw = gm.forward(&a_hat, &x, None).unwrap();
        let ce = cross_entropy(&mut fw.tape, fw.log_probs, &labels, &split.train).unwrap();
        sg.tape.scalar(sg.total) + fw.tape.scalar(ce)
    };

    let (s, gm) = build(&theta);
    let mut noise = SeedStream::new(9).substream("gumbel");
    let mut sg = selector_loss(&s, &batch, weights, Some(&mut noise)).unwrap();
    let probs = sg.tape.value(sg.probabilities).clone();
    assert!(
        probs.iter().all(|p| (p - 0.5).abs() > 1e-3),
        "a probability sits on the selection threshold"
    );
    assert!(probs.iter().any(|&p| p >= 0.5), "structural term inactive");
    sg.tape.backward(sg.total).unwrap();
    let mut analytic: Vec<f64> = Vec::new();
    for v in sg.bound.vars() {
        analytic.extend(sg.tape.grad(v).unwrap().as_slice());
    }
    let mut fw = gm.forward(&a_hat, &x, None).unwrap();
    let ce = cross_entropy(&mut fw.tape, fw.log_probs, &labels, &split.train).unwrap();
    fw.tape.backward(ce).unwrap();
    for v in &fw.params {
        analytic.extend(fw.tape.grad(*v).unwrap().as_slice());
    }
    let mut f = loss_of;
    let err = gradient_check(&mut f, &theta, &analytic);
    assert!(err < TOL, "relative error {err}");
    assert!(
        analytic[..n_sel].iter().any(|g| g.abs() > 1e-8),
        "selector gradient vanished"
    );
}

#[test]
fn encoder_gradient_is_nonzero_on_random_instances() {
    let (batch, ..) = toy_batch();
    for seed in 0..5 {
        let s = SelectorModel::new(3, 8, 4, 2, 1.0, &mut rng("nonzero", seed));
        let mut sg = selector_loss(&s, &batch, LossWeights::default(), None).unwrap();
        sg.tape.backward(sg.total).unwrap();
        let enc = sg.bound.encoder.vars();
        let norm: f64 = enc
            .iter()
            .map(|&v| sg.tape.grad(v).map_or(0.0, |g| g.norm()))
            .sum();
        assert!(norm > 0.0, "seed {seed}");
    }
}
