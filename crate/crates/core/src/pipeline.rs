//! Rewiring methods, ablation variants and per-seed runs.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;

use crate::data::Dataset;
use crate::error::{Result, SelectorError};
use crate::geometry::{delaunay, knn_graph, project_2d};
use crate::gnn::{train_gcn, Evaluation};
use crate::graph::Graph;
use crate::rng::SeedStream;
use crate::selector::{delaunay_view, run_trigon, static_views, TraceRow, TrigonConfig};
use crate::triangles::{CandidateTriangleSet, SourceMask};

/// How the training graph is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Learned triangle selection, trained jointly with the GCN.
    Trigon,
    /// Delaunay triangulation of the 2-D principal projection of the features.
    Delaunay,
    /// Symmetrized feature k-NN graph.
    KnnUnion,
    /// The input graph.
    Identity,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Trigon,
        Method::Delaunay,
        Method::KnnUnion,
        Method::Identity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Trigon => "trigon",
            Method::Delaunay => "delaunay",
            Method::KnnUnion => "knn-union",
            Method::Identity => "identity",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (expected trigon, delaunay, knn-union or identity)")
            })
    }
}

/// Rows of the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Trigon,
    /// Every candidate triangle, no selector.
    AllTriangles,
    /// Seeded uniform subsample of 30% of the candidates.
    Random30,
    /// Seeded uniform subsample of 60% of the candidates.
    Random60,
    NoKnnView,
    NoOriginalView,
    NoContrastive,
    NoStructural,
    NoParticipation,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Trigon,
        Variant::AllTriangles,
        Variant::Random30,
        Variant::Random60,
        Variant::NoKnnView,
        Variant::NoOriginalView,
        Variant::NoContrastive,
        Variant::NoStructural,
        Variant::NoParticipation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Trigon => "trigon",
            Variant::AllTriangles => "all-triangles",
            Variant::Random30 => "random-30",
            Variant::Random60 => "random-60",
            Variant::NoKnnView => "no-knn-view",
            Variant::NoOriginalView => "no-original-view",
            Variant::NoContrastive => "no-contrastive",
            Variant::NoStructural => "no-structural",
            Variant::NoParticipation => "no-participation",
        }
    }

    /// The TRIGON configuration this variant runs with, or `None` for the
    /// variants that bypass the selector.
    pub fn trigon_config(self, base: &TrigonConfig) -> Option<TrigonConfig> {
        let mut cfg = base.clone();
        let w = &mut cfg.selector.weights;
        match self {
            Variant::AllTriangles | Variant::Random30 | Variant::Random60 => return None,
            Variant::Trigon => {}
            Variant::NoKnnView => cfg.views = without(cfg.views, SourceMask::KNN),
            Variant::NoOriginalView => cfg.views = without(cfg.views, SourceMask::ORIGINAL),
            Variant::NoContrastive => w.contrastive = 0.0,
            Variant::NoStructural => w.structural = 0.0,
            Variant::NoParticipation => w.participation = 0.0,
        }
        Some(cfg)
    }

    /// Fraction of candidates kept by the selector-free variants.
    pub fn fixed_fraction(self) -> Option<f64> {
        match self {
            Variant::AllTriangles => Some(1.0),
            Variant::Random30 => Some(0.3),
            Variant::Random60 => Some(0.6),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn without(views: SourceMask, drop: SourceMask) -> SourceMask {
    SourceMask::from_bits(views.bits() & !drop.bits()).expect("subset of valid bits")
}

/// Static Delaunay rewiring of the projected features.
pub fn delaunay_rewiring(d: &Dataset) -> Result<Graph> {
    Ok(delaunay(&project_2d(&d.features)?)?.0)
}

/// Candidate triangles as the rewiring loop sees them at epoch 0 (Delaunay
/// view of the raw features), capped with the same seeded draw.
pub fn initial_candidates(
    d: &Dataset,
    cfg: &TrigonConfig,
    seed: u64,
) -> Result<CandidateTriangleSet> {
    cfg.validate()?;
    let (orig, knn) = static_views(d, cfg)?;
    let del = if cfg.views.contains(SourceMask::DELAUNAY) {
        delaunay_view(d.features.matrix())?
    } else {
        Vec::new()
    };
    let set = CandidateTriangleSet::from_triangles(d.n(), orig.into_iter().chain(knn).chain(del))?;
    let set = set.capped(
        cfg.candidate_cap,
        &mut SeedStream::new(seed).substream_at("cap", 0),
    );
    if set.is_empty() {
        return Err(SelectorError::EmptyCandidates.into());
    }
    Ok(set)
}

/// Union graph of a seeded uniform subsample of `fraction` of the
/// candidates (all of them when `fraction >= 1`).
pub fn fixed_selection_graph(cands: &CandidateTriangleSet, fraction: f64, seed: u64) -> Graph {
    if fraction >= 1.0 {
        return cands.union_graph(|_| true);
    }
    let keep = ((fraction * cands.len() as f64).round() as usize).min(cands.len());
    let mut rng = SeedStream::new(seed).substream("ablation");
    let mut chosen = vec![false; cands.len()];
    for i in sample(&mut rng, cands.len(), keep) {
        chosen[i] = true;
    }
    cands.union_graph(|i| chosen[i])
}

/// Graph a non-learned method trains on.
pub fn static_rewiring(
    d: &Dataset,
    method: Method,
    k: usize,
    metric: crate::geometry::Metric,
) -> Result<Graph> {
    match method {
        Method::Identity => Ok(d.graph.clone()),
        Method::Delaunay => delaunay_rewiring(d),
        Method::KnnUnion => Ok(knn_graph(
            &d.features,
            k.min(d.n().saturating_sub(1)),
            metric,
        )?),
        Method::Trigon => Err(SelectorError::InvalidConfig(
            "trigon is learned jointly with the classifier".into(),
        )
        .into()),
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub graph: Graph,
    pub metrics: Evaluation,
    pub best_epoch: usize,
    /// Per-epoch record of the rewiring loop (learned methods only).
    pub trace: Vec<TraceRow>,
}

/// Trains a GCN with `method`'s graph; for TRIGON the graph is the one at
/// the best validation epoch of the joint loop.
pub fn run_method(d: &Dataset, method: Method, cfg: &TrigonConfig, seed: u64) -> Result<SeedRun> {
    if method == Method::Trigon {
        let out = run_trigon(d, cfg, seed)?;
        return Ok(SeedRun {
            graph: out.graph,
            metrics: out.metrics,
            best_epoch: out.best_epoch,
            trace: out.trace,
        });
    }
    let g = static_rewiring(d, method, cfg.k, cfg.metric)?;
    train_on(d, g, cfg, seed)
}

/// Runs one ablation row.
pub fn run_variant(
    d: &Dataset,
    variant: Variant,
    base: &TrigonConfig,
    seed: u64,
) -> Result<SeedRun> {
    if let Some(cfg) = variant.trigon_config(base) {
        return run_method(d, Method::Trigon, &cfg, seed);
    }
    let fraction = variant.fixed_fraction().expect("selector-free variant");
    let cands = initial_candidates(d, base, seed)?;
    let g = fixed_selection_graph(&cands, fraction, seed);
    train_on(d, g, base, seed)
}

fn train_on(d: &Dataset, g: Graph, cfg: &TrigonConfig, seed: u64) -> Result<SeedRun> {
    cfg.gcn.validate()?;
    let out = train_gcn(
        &g,
        d.features.matrix(),
        &d.labels,
        &d.split,
        d.classes,
        &cfg.gcn,
        &SeedStream::new(seed),
    )?;
    Ok(SeedRun {
        graph: g,
        metrics: out.metrics,
        best_epoch: out.best_epoch,
        trace: Vec::new(),
    })
}
