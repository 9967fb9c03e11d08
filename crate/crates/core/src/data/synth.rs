use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::DataError;
use crate::geometry::FeatureMatrix;
use crate::graph::{EdgeList, Graph};
use crate::rng::{Rng, SeedStream};

use super::dataset::Dataset;
use super::split::make_split;

/// Attempts at drawing a connected graph before keeping the largest component.
pub const MAX_ATTEMPTS: u64 = 20;

/// Stochastic block model with Gaussian class-conditional features.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    pub n: usize,
    pub blocks: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    /// Distance between any two class means, in units of `noise`.
    pub separation: f64,
    /// Per-coordinate standard deviation of the features.
    pub noise: f64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n: 400,
            blocks: 2,
            p_intra: 0.02,
            p_inter: 0.10,
            feature_dim: 16,
            separation: 1.5,
            noise: 1.0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.p_intra) || !prob(self.p_inter) {
            return Err(DataError::Invalid(
                "edge probabilities must lie in [0, 1]".into(),
            ));
        }
        if self.blocks == 0 || self.blocks > self.n {
            return Err(DataError::Invalid(format!(
                "need 1 <= blocks <= n, got {} blocks for n = {}",
                self.blocks, self.n
            )));
        }
        if self.feature_dim < self.blocks {
            return Err(DataError::Invalid(
                "feature_dim must be at least the number of blocks".into(),
            ));
        }
        if !(self.noise >= 0.0 && self.separation >= 0.0) {
            return Err(DataError::Invalid(
                "noise and separation must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Block of node `i` when `n` nodes are split into `blocks` contiguous groups.
pub fn block_of(i: usize, n: usize, blocks: usize) -> usize {
    i * blocks / n
}

/// One SBM draw: each pair is linked independently with `p_intra` inside a
/// block and `p_inter` across blocks.
pub fn sbm_graph(
    n: usize,
    blocks: usize,
    p_intra: f64,
    p_inter: f64,
    rng: &mut Rng,
) -> (Graph, Vec<usize>) {
    let labels: Vec<usize> = (0..n).map(|i| block_of(i, n, blocks)).collect();
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] {
                p_intra
            } else {
                p_inter
            };
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    let g = Graph::new(n, &EdgeList::new(pairs)).expect("pairs in range");
    (g, labels)
}

/// Class `c` mean: `s e_c` with `s` chosen so that means are `separation * noise` apart.
fn class_features(
    labels: &[usize],
    dim: usize,
    separation: f64,
    noise: f64,
    rng: &mut Rng,
) -> DMatrix<f64> {
    let s = separation * noise / std::f64::consts::SQRT_2;
    DMatrix::from_fn(labels.len(), dim, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        let mean = if j == labels[i] { s } else { 0.0 };
        mean + noise * z
    })
}

/// Redraws until the graph is connected (at most [`MAX_ATTEMPTS`] times), then
/// keeps the largest component of the last draw.
fn connected_draw(
    name: &str,
    seed: u64,
    stream: &str,
    mut draw: impl FnMut(&mut Rng) -> (Graph, Vec<usize>, DMatrix<f64>),
) -> Result<Dataset, DataError> {
    let seeds = SeedStream::new(seed);
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let (g, labels, x) = draw(&mut seeds.substream_at(stream, attempt));
        if g.is_connected() {
            if attempt > 0 {
                log::info!("{name}: connected draw after {} attempts", attempt + 1);
            }
            return finish(name, g, labels, x, &seeds);
        }
        last = Some((g, labels, x));
    }
    let (g, labels, x) = last.expect("at least one attempt");
    let keep = g.component_sets().swap_remove(0);
    log::warn!("{name}: no connected draw in {MAX_ATTEMPTS} attempts; keeping the largest component ({} of {} nodes)", keep.len(), g.n());
    let (sub, _) = g.induced_subgraph(&keep);
    let labels: Vec<usize> = keep.iter().map(|&u| labels[u]).collect();
    let x = x.select_rows(keep.iter());
    finish(name, sub, labels, x, &seeds)
}

fn finish(
    name: &str,
    g: Graph,
    labels: Vec<usize>,
    x: DMatrix<f64>,
    seeds: &SeedStream,
) -> Result<Dataset, DataError> {
    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut present = vec![false; classes];
    for &c in &labels {
        present[c] = true;
    }
    if present.iter().any(|&p| !p) {
        return Err(DataError::Invalid(format!(
            "{name}: a class vanished from the retained component"
        )));
    }
    let split = make_split(&labels, &mut seeds.substream("split"))?;
    Dataset::new(name, g, FeatureMatrix::new(x)?, labels, split)
}

/// Seeded SBM dataset with a stratified split.
pub fn synth_sbm(cfg: &SbmConfig, seed: u64) -> Result<Dataset, DataError> {
    cfg.validate()?;
    connected_draw("sbm", seed, "sbm", |rng| {
        let (g, labels) = sbm_graph(cfg.n, cfg.blocks, cfg.p_intra, cfg.p_inter, rng);
        let x = class_features(&labels, cfg.feature_dim, cfg.separation, cfg.noise, rng);
        (g, labels, x)
    })
}

/// Two interleaved half circles.
#[derive(Debug, Clone, PartialEq)]
pub struct MoonsConfig {
    pub n: usize,
    /// Standard deviation of the Gaussian jitter on each coordinate.
    pub noise: f64,
    /// Nodes closer than this are linked.
    pub radius: f64,
}

impl Default for MoonsConfig {
    fn default() -> Self {
        Self {
            n: 200,
            noise: 0.1,
            radius: 0.3,
        }
    }
}

/// Two-moons points as features with a geometric radius graph on top.
pub fn synth_two_moons(cfg: &MoonsConfig, seed: u64) -> Result<Dataset, DataError> {
    if cfg.n < 5 || !(cfg.noise >= 0.0) || !(cfg.radius > 0.0) {
        return Err(DataError::Invalid(
            "two moons needs n >= 5, noise >= 0 and radius > 0".into(),
        ));
    }
    connected_draw("two_moons", seed, "moons", |rng| {
        let n = cfg.n;
        let outer = n.div_ceil(2);
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= outer)).collect();
        let mut x = DMatrix::zeros(n, 2);
        for i in 0..n {
            let (k, count) = if i < outer {
                (i, outer)
            } else {
                (i - outer, n - outer)
            };
            let t = std::f64::consts::PI * k as f64 / (count.max(2) - 1) as f64;
            let (px, py) = if i < outer {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            let jx: f64 = rng.sample(StandardNormal);
            let jy: f64 = rng.sample(StandardNormal);
            x[(i, 0)] = px + cfg.noise * jx;
            x[(i, 1)] = py + cfg.noise * jy;
        }
        let r2 = cfg.radius * cfg.radius;
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let d2 = (x[(u, 0)] - x[(v, 0)]).powi(2) + (x[(u, 1)] - x[(v, 1)]).powi(2);
                if d2 < r2 {
                    pairs.push((u, v));
                }
            }
        }
        (
            Graph::new(n, &EdgeList::new(pairs)).expect("pairs in range"),
            labels,
            x,
        )
    })
}
