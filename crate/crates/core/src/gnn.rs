//! Graph convolutional network classifier.

use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;

use crate::autodiff::{AdamW, Linear, Tape, Var};
use crate::data::Split;
use crate::error::{AutodiffError, DataError, Error, Result, SelectorError};
use crate::graph::Graph;
use crate::rng::{Rng, SeedStream};

/// Symmetrically normalized adjacency with self-loops,
/// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn gcn_propagation_matrix(g: &Graph) -> CsrMatrix<f64> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| 1.0 / ((g.degree(u) + 1) as f64).sqrt())
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(2 * g.m() + n);
    let mut values = Vec::with_capacity(2 * g.m() + n);
    offsets.push(0);
    for u in 0..n {
        let mut placed = false;
        for &v in g.neighbors(u) {
            if !placed && v > u {
                indices.push(u);
                values.push(inv_sqrt[u] * inv_sqrt[u]);
                placed = true;
            }
            indices.push(v);
            values.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        if !placed {
            indices.push(u);
            values.push(inv_sqrt[u] * inv_sqrt[u]);
        }
        offsets.push(indices.len());
    }
    CsrMatrix::try_from_csr_data(n, n, offsets, indices, values)
        .expect("sorted CSR from a valid graph")
}

/// Hyperparameters of a GCN and its training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnConfig {
    pub hidden: usize,
    pub depth: usize,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            depth: 2,
            dropout: 0.5,
            lr: 0.005,
            weight_decay: 5e-5,
            max_epochs: 1000,
            patience: 100,
        }
    }
}

impl GcnConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        let bad = |m: &str| Err(SelectorError::InvalidConfig(m.to_string()));
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden dimension must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight decay must be non-negative");
        }
        Ok(())
    }
}

/// Stack of graph convolutions; the last layer has no activation and feeds a
/// row-wise log-softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub layers: Vec<Linear>,
    pub dropout: f64,
}

/// Values recorded by one forward pass.
pub struct GcnForward {
    pub tape: Tape,
    /// `N x C` log-probabilities.
    pub log_probs: Var,
    /// Input of the last layer (the raw features for a single layer).
    pub hidden: Var,
    pub params: Vec<Var>,
}

impl GcnModel {
    pub fn new(input: usize, classes: usize, cfg: &GcnConfig, rng: &mut Rng) -> Self {
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(cfg.hidden, cfg.depth - 1));
        dims.push(classes);
        let layers = dims
            .windows(2)
            .map(|w| Linear::new(w[0], w[1], rng))
            .collect();
        Self {
            layers,
            dropout: cfg.dropout,
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("at least one layer").output_dim()
    }

    pub fn params_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn named_params(&self) -> Vec<(String, &DMatrix<f64>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("gcn.w{i}"), &l.weight),
                    (format!("gcn.b{i}"), &l.bias),
                ]
            })
            .collect()
    }

    /// Forward pass. Dropout is applied to each layer's input when `dropout_rng`
    /// is given (train mode) and skipped otherwise.
    pub fn forward(
        &self,
        a_hat: &Arc<CsrMatrix<f64>>,
        x: &DMatrix<f64>,
        mut dropout_rng: Option<&mut Rng>,
    ) -> Result<GcnForward, AutodiffError> {
        if a_hat.nrows() != x.nrows() || x.ncols() != self.layers[0].input_dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "gcn_forward",
                left: (a_hat.nrows(), self.layers[0].input_dim()),
                right: x.shape(),
            });
        }
        let mut tape = Tape::new();
        let mut params = Vec::with_capacity(2 * self.layers.len());
        let mut h = tape.constant(x.clone());
        let mut hidden = h;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if i == last {
                hidden = h;
            }
            if let Some(rng) = dropout_rng.as_deref_mut() {
                h = tape.dropout(h, self.dropout, rng);
            }
            let w = tape.param(layer.weight.clone());
            let b = tape.param(layer.bias.clone());
            params.extend([w, b]);
            let hw = tape.matmul(h, w)?;
            let ahw = tape.sparse_matmul(a_hat, hw)?;
            h = tape.add_row(ahw, b)?;
            if i < last {
                h = tape.relu(h);
            }
        }
        let log_probs = tape.log_softmax(h);
        Ok(GcnForward {
            tape,
            log_probs,
            hidden,
            params,
        })
    }

    /// Eval-mode log-probabilities and penultimate embeddings.
    pub fn predict(
        &self,
        a_hat: &Arc<CsrMatrix<f64>>,
        x: &DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>), AutodiffError> {
        let f = self.forward(a_hat, x, None)?;
        Ok((
            f.tape.value(f.log_probs).clone(),
            f.tape.value(f.hidden).clone(),
        ))
    }
}

/// Mean negative log-likelihood of `labels` over `nodes`.
pub fn cross_entropy(
    tape: &mut Tape,
    log_probs: Var,
    labels: &[usize],
    nodes: &[usize],
) -> Result<Var, AutodiffError> {
    let picked = tape.gather_rows(log_probs, nodes)?;
    let classes = tape.shape(log_probs).1;
    let mut onehot = DMatrix::zeros(nodes.len(), classes);
    for (r, &u) in nodes.iter().enumerate() {
        if labels[u] >= classes {
            return Err(AutodiffError::RowOutOfRange {
                index: labels[u],
                rows: classes,
            });
        }
        onehot[(r, labels[u])] = 1.0;
    }
    let onehot = tape.constant(onehot);
    let masked = tape.mul(picked, onehot)?;
    let total = tape.sum(masked);
    Ok(tape.scalar_mul(total, -1.0 / nodes.len().max(1) as f64))
}

/// Row-wise argmax, ties to the smaller class.
pub fn argmax_rows(m: &DMatrix<f64>) -> Vec<usize> {
    m.row_iter()
        .map(|r| {
            let mut best = 0;
            for c in 1..r.len() {
                if r[c] > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(pred: &[usize], labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return f64::NAN;
    }
    nodes.iter().filter(|&&u| pred[u] == labels[u]).count() as f64 / nodes.len() as f64
}

fn nll(log_probs: &DMatrix<f64>, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return f64::NAN;
    }
    -nodes
        .iter()
        .map(|&u| log_probs[(u, labels[u])])
        .sum::<f64>()
        / nodes.len() as f64
}

/// One optimizer step on the training cross-entropy; returns the loss.
pub fn train_gnn_epoch(
    model: &mut GcnModel,
    opt: &mut AdamW,
    a_hat: &Arc<CsrMatrix<f64>>,
    x: &DMatrix<f64>,
    labels: &[usize],
    train: &[usize],
    dropout_rng: &mut Rng,
) -> Result<f64> {
    if train.is_empty() {
        return Err(DataError::Invalid("empty training mask".into()).into());
    }
    let mut f = model.forward(a_hat, x, Some(dropout_rng))?;
    let loss = cross_entropy(&mut f.tape, f.log_probs, labels, train)?;
    let value = f.tape.scalar(loss);
    f.tape.backward(loss)?;
    let grads: Vec<Option<&DMatrix<f64>>> = f.params.iter().map(|&p| f.tape.grad(p)).collect();
    opt.step(&mut model.params_mut(), &grads)?;
    Ok(value)
}

/// Accuracies and validation loss of an eval-mode forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub val_loss: f64,
}

pub fn evaluate(log_probs: &DMatrix<f64>, labels: &[usize], split: &Split) -> Evaluation {
    let pred = argmax_rows(log_probs);
    Evaluation {
        train_acc: accuracy(&pred, labels, &split.train),
        val_acc: accuracy(&pred, labels, &split.val),
        test_acc: accuracy(&pred, labels, &split.test),
        val_loss: nll(log_probs, labels, &split.val),
    }
}

/// Tracks the best validation epoch: higher accuracy wins, ties go to the
/// lower validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    /// Records an epoch; returns whether it is the new best.
    pub fn update(&mut self, epoch: usize, val_acc: f64, val_loss: f64) -> bool {
        let better = match self.best {
            None => true,
            Some((_, acc, loss)) => val_acc > acc || (val_acc == acc && val_loss < loss),
        };
        if better {
            self.best = Some((epoch, val_acc, val_loss));
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        better
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|b| b.0)
    }
}

/// One row of a training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

/// Result of a full training run at the best-validation epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GcnModel,
    pub best_epoch: usize,
    pub metrics: Evaluation,
    pub history: Vec<EpochRecord>,
}

/// Trains a fresh GCN on a fixed graph with early stopping.
pub fn train_gcn(
    g: &Graph,
    x: &DMatrix<f64>,
    labels: &[usize],
    split: &Split,
    classes: usize,
    cfg: &GcnConfig,
    seeds: &SeedStream,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if x.nrows() != g.n() || labels.len() != g.n() {
        return Err(DataError::Invalid(format!(
            "graph has {} nodes, features {} rows, labels {}",
            g.n(),
            x.nrows(),
            labels.len()
        ))
        .into());
    }
    let a_hat = Arc::new(gcn_propagation_matrix(g));
    let mut init = seeds.substream("init");
    let mut dropout = seeds.substream("dropout");
    let mut model = GcnModel::new(x.ncols(), classes, cfg, &mut init);
    let mut opt = AdamW::new(cfg.lr, cfg.weight_decay);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best: Option<(GcnModel, Evaluation)> = None;
    let mut history = Vec::new();
    for epoch in 0..cfg.max_epochs {
        let loss = train_gnn_epoch(
            &mut model,
            &mut opt,
            &a_hat,
            x,
            labels,
            &split.train,
            &mut dropout,
        )?;
        if !loss.is_finite() {
            return Err(Error::Selector(SelectorError::Diverged { epoch }));
        }
        let (log_probs, _) = model.predict(&a_hat, x)?;
        let eval = evaluate(&log_probs, labels, split);
        history.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_acc: eval.val_acc,
            test_acc: eval.test_acc,
        });
        if stopper.update(epoch, eval.val_acc, eval.val_loss) {
            best = Some((model.clone(), eval));
        }
        if stopper.should_stop() {
            break;
        }
    }
    let (model, metrics) =
        best.ok_or_else(|| SelectorError::InvalidConfig("max_epochs must be positive".into()))?;
    Ok(TrainOutcome {
        model,
        best_epoch: stopper.best_epoch().unwrap_or(0),
        metrics,
        history,
    })
}
