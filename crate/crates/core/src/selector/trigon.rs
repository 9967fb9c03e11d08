use std::sync::Arc;

use nalgebra::DMatrix;

use crate::autodiff::AdamW;
use crate::data::Dataset;
use crate::error::{GeometryError, Result, SelectorError};
use crate::geometry::{delaunay, knn_graph, project_2d, FeatureMatrix, Metric};
use crate::gnn::{
    evaluate, gcn_propagation_matrix, train_gnn_epoch, EarlyStopping, Evaluation, GcnConfig,
    GcnModel,
};
use crate::graph::Graph;
use crate::rng::SeedStream;
use crate::triangles::{
    enumerate_triangles, CandidateTriangleSet, SourceMask, Triangle, DEFAULT_CANDIDATE_CAP,
};

use super::model::SelectorModel;
use super::reconstruct::SelectionState;
use super::step::{init_class_targets, selector_step, LossBreakdown, LossWeights, TriangleBatch};

/// Selector hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub hidden: usize,
    pub embed_dim: usize,
    pub tau: f64,
    /// When set, the temperature moves linearly from `tau` to this value
    /// over `max_epochs`.
    pub tau_final: Option<f64>,
    pub lr: f64,
    pub weight_decay: f64,
    pub weights: LossWeights,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            embed_dim: 32,
            tau: 1.0,
            tau_final: None,
            lr: 0.005,
            weight_decay: 5e-5,
            weights: LossWeights::default(),
        }
    }
}

/// Configuration of the alternating rewiring and training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigonConfig {
    pub gcn: GcnConfig,
    pub selector: SelectorConfig,
    /// Neighbors per node in the feature k-NN view.
    pub k: usize,
    pub metric: Metric,
    /// Epochs between recomputations of the embedding Delaunay view.
    pub refresh_every: usize,
    pub views: SourceMask,
    pub candidate_cap: usize,
}

impl Default for TrigonConfig {
    fn default() -> Self {
        Self {
            gcn: GcnConfig::default(),
            selector: SelectorConfig::default(),
            k: 10,
            metric: Metric::Euclidean,
            refresh_every: 10,
            views: SourceMask::ALL,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

impl TrigonConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        self.gcn.validate()?;
        let bad = |m: &str| Err(SelectorError::InvalidConfig(m.to_string()));
        if self.views.is_empty() {
            return Err(SelectorError::NoViews);
        }
        let s = &self.selector;
        if !(s.tau > 0.0) || s.tau_final.is_some_and(|t| !(t > 0.0)) {
            return bad("temperature must be positive");
        }
        if !(s.lr > 0.0) || !(s.weight_decay >= 0.0) {
            return bad("selector learning rate must be positive and weight decay non-negative");
        }
        if s.hidden == 0 || s.embed_dim == 0 {
            return bad("selector dimensions must be positive");
        }
        let w = s.weights;
        if [w.contrastive, w.structural, w.participation]
            .iter()
            .any(|&x| !(x >= 0.0))
        {
            return bad("loss weights must be non-negative");
        }
        if self.refresh_every == 0 {
            return bad("refresh period must be positive");
        }
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.candidate_cap == 0 {
            return bad("candidate cap must be positive");
        }
        Ok(())
    }

    pub fn tau_at(&self, epoch: usize) -> f64 {
        match self.selector.tau_final {
            None => self.selector.tau,
            Some(end) => {
                let span = self.gcn.max_epochs.saturating_sub(1).max(1) as f64;
                let f = (epoch as f64 / span).min(1.0);
                self.selector.tau + (end - self.selector.tau) * f
            }
        }
    }
}

/// Delaunay faces of the 2-D principal projection of `points`.
pub fn delaunay_view(points: &DMatrix<f64>) -> Result<Vec<Triangle>, GeometryError> {
    let planar = project_2d(&FeatureMatrix::new(points.clone())?)?;
    Ok(delaunay(&planar)?.1)
}

/// Triangles of the original graph and of the k-NN graph; these views do
/// not change during training.
pub fn static_views(d: &Dataset, cfg: &TrigonConfig) -> Result<(Vec<Triangle>, Vec<Triangle>)> {
    let orig = if cfg.views.contains(SourceMask::ORIGINAL) {
        enumerate_triangles(&d.graph, SourceMask::ORIGINAL)
    } else {
        Vec::new()
    };
    let knn = if cfg.views.contains(SourceMask::KNN) {
        enumerate_triangles(
            &knn_graph(&d.features, cfg.k.min(d.n().saturating_sub(1)), cfg.metric)?,
            SourceMask::KNN,
        )
    } else {
        Vec::new()
    };
    Ok((orig, knn))
}

/// Per-epoch record of the rewiring loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub epoch: usize,
    pub tau: f64,
    pub candidates: usize,
    pub selected: usize,
    pub edges: usize,
    /// The selection was empty and all candidate edges were used instead.
    pub fallback: bool,
    pub losses: LossBreakdown,
    pub gnn_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

/// What an observer sees after each epoch.
pub struct EpochView<'a> {
    pub epoch: usize,
    pub candidates: &'a CandidateTriangleSet,
    pub selection: &'a SelectionState,
    /// Graph the GCN was trained on this epoch.
    pub graph: &'a Graph,
    pub fallback: bool,
}

/// Result of [`run_trigon`], taken at the best validation epoch.
#[derive(Debug, Clone)]
pub struct TrigonOutcome {
    pub graph: Graph,
    pub model: GcnModel,
    pub selector: SelectorModel,
    pub metrics: Evaluation,
    pub best_epoch: usize,
    pub trace: Vec<TraceRow>,
    pub fallbacks: usize,
}

pub fn run_trigon(d: &Dataset, cfg: &TrigonConfig, seed: u64) -> Result<TrigonOutcome> {
    run_trigon_observed(d, cfg, seed, |_| {})
}

/// [`run_trigon`] with a callback invoked after every epoch.
pub fn run_trigon_observed(
    d: &Dataset,
    cfg: &TrigonConfig,
    seed: u64,
    mut observe: impl FnMut(&EpochView),
) -> Result<TrigonOutcome> {
    cfg.validate()?;
    if d.classes < 2 {
        return Err(SelectorError::SingleClass.into());
    }
    if d.split.train.is_empty() {
        return Err(SelectorError::InvalidConfig("empty training split".into()).into());
    }
    let seeds = SeedStream::new(seed);
    let x = d.features.matrix();
    let n = d.n();
    let (orig, knn) = static_views(d, cfg)?;
    let use_delaunay = cfg.views.contains(SourceMask::DELAUNAY);

    let build = |del: &[Triangle], epoch: usize| -> Result<TriangleBatch> {
        let all = orig.iter().chain(&knn).chain(del).copied();
        let set = CandidateTriangleSet::from_triangles(n, all)?;
        let set = set.capped(
            cfg.candidate_cap,
            &mut seeds.substream_at("cap", epoch as u64),
        );
        Ok(TriangleBatch::new(set, x, x, &d.labels, &d.split)?)
    };

    let mut del = if use_delaunay {
        delaunay_view(x)?
    } else {
        Vec::new()
    };
    let mut batch = build(&del, 0)?;

    let mut init = seeds.substream("init");
    let s = &cfg.selector;
    let mut selector = SelectorModel::new(
        d.features.dim(),
        s.hidden,
        s.embed_dim,
        d.classes,
        cfg.tau_at(0),
        &mut init,
    );
    init_class_targets(&mut selector, &batch)?;
    let mut sel_opt = AdamW::new(s.lr, s.weight_decay);
    let mut gnn = GcnModel::new(d.features.dim(), d.classes, &cfg.gcn, &mut init);
    let mut gnn_opt = AdamW::new(cfg.gcn.lr, cfg.gcn.weight_decay);
    let mut gumbel = seeds.substream("gumbel");
    let mut dropout = seeds.substream("dropout");

    let mut stopper = EarlyStopping::new(cfg.gcn.patience);
    let mut best: Option<(Graph, GcnModel, SelectorModel, Evaluation)> = None;
    let mut trace = Vec::new();
    let mut fallbacks = 0;
    let mut embeddings: Option<DMatrix<f64>> = None;

    for epoch in 0..cfg.gcn.max_epochs {
        if use_delaunay && epoch > 0 && epoch % cfg.refresh_every == 0 {
            if let Some(h) = &embeddings {
                match delaunay_view(h) {
                    Ok(t) => {
                        del = t;
                        batch = build(&del, epoch)?;
                    }
                    Err(e) => log::warn!("epoch {epoch}: keeping the previous Delaunay view ({e})"),
                }
            }
        }
        selector.tau = cfg.tau_at(epoch);
        let (losses, state) =
            selector_step(&mut selector, &mut sel_opt, &batch, s.weights, &mut gumbel)?;
        if !losses.total.is_finite() {
            return Err(SelectorError::Diverged { epoch }.into());
        }
        let fallback = state.is_empty();
        let graph = if fallback {
            fallbacks += 1;
            log::info!("epoch {epoch}: empty selection, using all candidate edges");
            batch.candidates.union_graph(|_| true)
        } else {
            state.graph.clone()
        };
        observe(&EpochView {
            epoch,
            candidates: &batch.candidates,
            selection: &state,
            graph: &graph,
            fallback,
        });

        let a_hat = Arc::new(gcn_propagation_matrix(&graph));
        let gnn_loss = train_gnn_epoch(
            &mut gnn,
            &mut gnn_opt,
            &a_hat,
            x,
            &d.labels,
            &d.split.train,
            &mut dropout,
        )?;
        if !gnn_loss.is_finite() {
            return Err(SelectorError::Diverged { epoch }.into());
        }
        let (log_probs, hidden) = gnn.predict(&a_hat, x)?;
        embeddings = Some(hidden);
        let eval = evaluate(&log_probs, &d.labels, &d.split);
        trace.push(TraceRow {
            epoch,
            tau: selector.tau,
            candidates: batch.len(),
            selected: state.selected_count(),
            edges: graph.m(),
            fallback,
            losses,
            gnn_loss,
            train_acc: eval.train_acc,
            val_acc: eval.val_acc,
            test_acc: eval.test_acc,
        });
        if stopper.update(epoch, eval.val_acc, eval.val_loss) {
            best = Some((graph, gnn.clone(), selector.clone(), eval));
        }
        if stopper.should_stop() {
            break;
        }
    }
    let (graph, model, selector, metrics) =
        best.ok_or_else(|| SelectorError::InvalidConfig("max_epochs must be positive".into()))?;
    Ok(TrigonOutcome {
        graph,
        model,
        selector,
        metrics,
        best_epoch: stopper.best_epoch().unwrap_or(0),
        trace,
        fallbacks,
    })
}
