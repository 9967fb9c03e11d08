use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use trigon_core::data::{load_dataset, synth_sbm, Dataset, SbmConfig};
use trigon_core::geometry::Metric;
use trigon_core::gnn::GcnConfig;
use trigon_core::rng::SeedStream;
use trigon_core::selector::{LossWeights, SelectorConfig, TrigonConfig};
use trigon_core::triangles::DEFAULT_CANDIDATE_CAP;
use trigon_core::SourceMask;

/// Stochastic block model parameters.
#[derive(Args, Debug, Clone)]
pub struct SbmArgs {
    #[arg(long, default_value_t = 400)]
    pub sbm_n: usize,
    #[arg(long, default_value_t = 2)]
    pub sbm_blocks: usize,
    #[arg(long, default_value_t = 0.02)]
    pub p_intra: f64,
    #[arg(long, default_value_t = 0.10)]
    pub p_inter: f64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    /// Distance between class means in units of the feature noise.
    #[arg(long, default_value_t = 1.5)]
    pub separation: f64,
}

impl SbmArgs {
    pub fn config(&self) -> SbmConfig {
        SbmConfig {
            n: self.sbm_n,
            blocks: self.sbm_blocks,
            p_intra: self.p_intra,
            p_inter: self.p_inter,
            feature_dim: self.feature_dim,
            separation: self.separation,
            ..SbmConfig::default()
        }
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("sbm_n", self.sbm_n.to_string()),
            ("sbm_blocks", self.sbm_blocks.to_string()),
            ("p_intra", self.p_intra.to_string()),
            ("p_inter", self.p_inter.to_string()),
            ("feature_dim", self.feature_dim.to_string()),
            ("separation", self.separation.to_string()),
        ]
    }
}

/// Where node data comes from.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Dataset directory holding edges.tsv, features.tsv, labels.tsv and
    /// optionally split.tsv.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Draw a fresh stochastic block model for every seed instead.
    #[arg(long)]
    pub sbm: bool,
    #[command(flatten)]
    pub sbm_args: SbmArgs,
}

impl DataArgs {
    pub fn validate(&self) -> Result<()> {
        match (&self.data, self.sbm) {
            (Some(_), true) => bail!("--data and --sbm are mutually exclusive"),
            (None, false) => bail!("one of --data DIR or --sbm is required"),
            (None, true) => Ok(self.sbm_args.config().validate()?),
            (Some(_), false) => Ok(()),
        }
    }

    /// The dataset for `seed`. Directories without a split file get a split
    /// drawn from the seed; block models are regenerated per seed.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match &self.data {
            Some(dir) => load_dataset(dir, &mut SeedStream::new(seed).substream("split"))
                .with_context(|| format!("loading {}", dir.display())),
            None => Ok(synth_sbm(&self.sbm_args.config(), seed)?),
        }
    }

    fn describe(&self, out: &mut Vec<(&'static str, String)>) {
        match &self.data {
            Some(dir) => out.push(("data", dir.display().to_string())),
            None => {
                out.push(("data", "sbm".into()));
                out.extend(self.sbm_args.pairs());
            }
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricArg {
    Euclidean,
    Cosine,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Cosine => Metric::Cosine,
        }
    }
}

/// Hyperparameters shared by every subcommand that trains or rewires.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    #[command(flatten)]
    pub data: DataArgs,
    /// Master seeds: a comma list (`0,3,7`) and/or half-open ranges (`0..10`).
    #[arg(long, default_value = "0", value_parser = parse_seeds)]
    pub seeds: Seeds,
    /// GCN layers.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.005)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-5)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub patience: usize,
    /// Neighbors per node in the feature k-NN view.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// Gumbel-softmax temperature.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Anneal the temperature linearly to this value over the epoch budget.
    #[arg(long)]
    pub tau_final: Option<f64>,
    /// Epochs between Delaunay view refreshes.
    #[arg(long, default_value_t = 10)]
    pub refresh: usize,
    /// Maximum number of candidate triangles.
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    pub cap: usize,
    /// Candidate views, comma separated: original, knn, delaunay.
    #[arg(long, default_value = "original,knn,delaunay", value_parser = parse_views)]
    pub views: SourceMask,
    #[arg(long, default_value_t = 64)]
    pub selector_hidden: usize,
    #[arg(long, default_value_t = 32)]
    pub selector_embed: usize,
    #[arg(long, default_value_t = 0.005)]
    pub selector_lr: f64,
    #[arg(long, default_value_t = 5e-5)]
    pub selector_weight_decay: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_contrastive: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_structural: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_participation: f64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Ordered list of master seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.parse().map_err(|_| format!("bad seed range `{part}`"))?;
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("at least one seed is required".into());
    }
    Ok(Seeds(out))
}

pub fn parse_views(s: &str) -> Result<SourceMask, String> {
    let mut bits = 0u8;
    for v in s.split(',').map(str::trim).filter(|v| !v.is_empty()) {
        bits |= match v {
            "original" => SourceMask::ORIGINAL.bits(),
            "knn" => SourceMask::KNN.bits(),
            "delaunay" => SourceMask::DELAUNAY.bits(),
            _ => {
                return Err(format!(
                    "unknown view `{v}` (expected original, knn or delaunay)"
                ))
            }
        };
    }
    SourceMask::from_bits(bits)
        .filter(|m| !m.is_empty())
        .ok_or_else(|| "at least one view is required".to_string())
}

fn views_str(m: SourceMask) -> String {
    [
        (SourceMask::ORIGINAL, "original"),
        (SourceMask::KNN, "knn"),
        (SourceMask::DELAUNAY, "delaunay"),
    ]
    .iter()
    .filter(|(bit, _)| m.contains(*bit))
    .map(|(_, name)| *name)
    .collect::<Vec<_>>()
    .join(",")
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        ensure!(self.lr > 0.0, "lr must be positive");
        ensure!(
            (0.0..1.0).contains(&self.dropout),
            "dropout must lie in [0, 1)"
        );
        ensure!(self.depth >= 1, "depth must be at least 1");
        self.trigon_config().validate()?;
        Ok(())
    }

    pub fn gcn_config(&self) -> GcnConfig {
        GcnConfig {
            hidden: self.hidden,
            depth: self.depth,
            dropout: self.dropout,
            lr: self.lr,
            weight_decay: self.weight_decay,
            max_epochs: self.epochs,
            patience: self.patience,
        }
    }

    pub fn trigon_config(&self) -> TrigonConfig {
        TrigonConfig {
            gcn: self.gcn_config(),
            selector: SelectorConfig {
                hidden: self.selector_hidden,
                embed_dim: self.selector_embed,
                tau: self.tau,
                tau_final: self.tau_final,
                lr: self.selector_lr,
                weight_decay: self.selector_weight_decay,
                weights: LossWeights {
                    contrastive: self.w_contrastive,
                    structural: self.w_structural,
                    participation: self.w_participation,
                },
            },
            k: self.k,
            metric: self.metric.into(),
            refresh_every: self.refresh,
            views: self.views,
            candidate_cap: self.cap,
        }
    }

    /// Every setting as ordered `key=value` pairs.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        self.data.describe(&mut out);
        let seeds: Vec<String> = self.seeds.0.iter().map(u64::to_string).collect();
        out.push(("seeds", seeds.join(",")));
        out.push(("depth", self.depth.to_string()));
        out.push(("hidden", self.hidden.to_string()));
        out.push(("lr", self.lr.to_string()));
        out.push(("weight_decay", self.weight_decay.to_string()));
        out.push(("dropout", self.dropout.to_string()));
        out.push(("epochs", self.epochs.to_string()));
        out.push(("patience", self.patience.to_string()));
        out.push(("k", self.k.to_string()));
        out.push((
            "metric",
            match self.metric {
                MetricArg::Euclidean => "euclidean",
                MetricArg::Cosine => "cosine",
            }
            .into(),
        ));
        out.push(("tau", self.tau.to_string()));
        out.push((
            "tau_final",
            self.tau_final
                .map_or_else(|| "none".into(), |t| t.to_string()),
        ));
        out.push(("refresh", self.refresh.to_string()));
        out.push(("cap", self.cap.to_string()));
        out.push(("views", views_str(self.views)));
        out.push(("selector_hidden", self.selector_hidden.to_string()));
        out.push(("selector_embed", self.selector_embed.to_string()));
        out.push(("selector_lr", self.selector_lr.to_string()));
        out.push((
            "selector_weight_decay",
            self.selector_weight_decay.to_string(),
        ));
        out.push(("w_contrastive", self.w_contrastive.to_string()));
        out.push(("w_structural", self.w_structural.to_string()));
        out.push(("w_participation", self.w_participation.to_string()));
        out
    }
}

/// Provenance block: `command`, the extra pairs, then the run settings, as
/// `# key=value` lines.
pub fn provenance(command: &str, extra: &[(&str, String)], cfg: Option<&RunConfig>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# command={command}");
    let _ = writeln!(s, "# version={}", env!("CARGO_PKG_VERSION"));
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}={v}");
    }
    if let Some(cfg) = cfg {
        for (k, v) in cfg.pairs() {
            let _ = writeln!(s, "# {k}={v}");
        }
    }
    s
}
