use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use trigon_core::data::{synth_sbm, synth_two_moons, Dataset, MoonsConfig};
use trigon_core::diagnostics::{DiagnosticsReport, DEFAULT_P_GRID};
use trigon_core::pipeline::{run_method, run_variant, Method, SeedRun, Variant};
use trigon_core::Graph;

use crate::config::{provenance, RunConfig, SbmArgs};
use crate::output::{self, Cell};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "TRIGON_WORKERS";

/// Summary of a command; seeds that failed make the process exit nonzero.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub failed_seeds: usize,
}

fn pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("{WORKERS_ENV} must be a non-negative integer"))?,
        Err(_) => 0,
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?)
}

/// Runs `f` on every job in the worker pool; results keep job order.
fn dispatch<J: Sync, T: Send>(jobs: &[J], f: impl Fn(&J) -> T + Sync + Send) -> Result<Vec<T>> {
    Ok(pool()?.install(|| jobs.par_iter().map(&f).collect()))
}

fn list<T>(s: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let out: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse)
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_methods(s: &str) -> Result<Vec<Method>, String> {
    list(s, |p| p.parse())
}

fn parse_depths(s: &str) -> Result<Vec<usize>, String> {
    list(s, |p| match p.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(d),
        _ => Err(format!("bad depth `{p}`")),
    })
}

fn parse_variants(s: &str) -> Result<Vec<Variant>, String> {
    list(s, |p| {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == p)
            .ok_or_else(|| format!("unknown variant `{p}`"))
    })
}

fn run_seed(
    label: &str,
    seed: u64,
    f: impl FnOnce() -> Result<SeedRun>,
) -> Result<SeedRun, String> {
    f().map_err(|e| {
        let msg = format!("{e:#}");
        log::error!("{label}, seed {seed}: {msg}");
        msg
    })
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// Methods to compare: trigon, delaunay, knn-union, identity.
    #[arg(long, default_value = "trigon,identity", value_parser = parse_methods)]
    pub method: Vec<Vec<Method>>,
    /// Depth sweep, e.g. `2,4,8,16`; defaults to `--depth`.
    #[arg(long, value_parser = parse_depths)]
    pub depths: Option<Vec<Vec<usize>>>,
}

pub fn train(args: &TrainArgs) -> Result<Outcome> {
    let cfg = &args.run;
    cfg.validate()?;
    let methods = args.method.concat();
    let depths = args
        .depths
        .clone()
        .map(|d| d.concat())
        .unwrap_or_else(|| vec![cfg.depth]);
    let mut jobs = Vec::new();
    for &depth in &depths {
        for &method in &methods {
            for &seed in &cfg.seeds.0 {
                jobs.push((method, depth, seed));
            }
        }
    }
    let results = dispatch(&jobs, |&(method, depth, seed)| {
        run_seed(method.as_str(), seed, || {
            let mut tc = cfg.trigon_config();
            tc.gcn.depth = depth;
            let d = cfg.data.load(seed)?;
            Ok(run_method(&d, method, &tc, seed)?)
        })
    })?;
    let depth_list: Vec<String> = depths.iter().map(usize::to_string).collect();
    let method_list: Vec<&str> = methods.iter().map(|m| m.as_str()).collect();
    let header = provenance(
        "train",
        &[
            ("methods", method_list.join(",")),
            ("depths", depth_list.join(",")),
        ],
        Some(cfg),
    );
    let labelled: Vec<(String, usize, u64, &Result<SeedRun, String>)> = jobs
        .iter()
        .zip(&results)
        .map(|(&(m, depth, seed), r)| (m.as_str().to_string(), depth, seed, r))
        .collect();
    write_runs(&cfg.out, &header, &labelled)
}

#[derive(Args, Debug, Clone)]
pub struct AblateArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// Rows to run; defaults to all of them.
    #[arg(long, value_parser = parse_variants)]
    pub variants: Option<Vec<Vec<Variant>>>,
}

pub fn ablate(args: &AblateArgs) -> Result<Outcome> {
    let cfg = &args.run;
    cfg.validate()?;
    let variants = args
        .variants
        .clone()
        .map(|v| v.concat())
        .unwrap_or_else(|| Variant::ALL.to_vec());
    let base = cfg.trigon_config();
    let mut jobs = Vec::new();
    for &variant in &variants {
        for &seed in &cfg.seeds.0 {
            jobs.push((variant, seed));
        }
    }
    let results = dispatch(&jobs, |&(variant, seed)| {
        run_seed(variant.as_str(), seed, || {
            let d = cfg.data.load(seed)?;
            Ok(run_variant(&d, variant, &base, seed)?)
        })
    })?;
    let names: Vec<&str> = variants.iter().map(|v| v.as_str()).collect();
    let header = provenance("ablate", &[("variants", names.join(","))], Some(cfg));
    let labelled: Vec<(String, usize, u64, &Result<SeedRun, String>)> = jobs
        .iter()
        .zip(&results)
        .map(|(&(v, seed), r)| (v.as_str().to_string(), cfg.depth, seed, r))
        .collect();
    write_runs(&cfg.out, &header, &labelled)
}

/// Writes metrics.csv, config.txt and, when any run has one, trace.csv.
fn write_runs(
    out: &Path,
    header: &str,
    runs: &[(String, usize, u64, &Result<SeedRun, String>)],
) -> Result<Outcome> {
    let mut cells: Vec<Cell> = Vec::new();
    for (label, depth, seed, r) in runs {
        match cells
            .iter_mut()
            .find(|c| c.method == label && c.depth == *depth)
        {
            Some(c) => c.runs.push((*seed, r)),
            None => cells.push(Cell {
                method: label,
                depth: *depth,
                runs: vec![(*seed, r)],
            }),
        }
    }
    output::write_metrics(out, header, &cells)?;
    output::write_config(out, header)?;
    let traces: Vec<(&str, usize, u64, &[_])> = runs
        .iter()
        .filter_map(|(label, depth, seed, r)| {
            r.as_ref()
                .ok()
                .filter(|r| !r.trace.is_empty())
                .map(|r| (label.as_str(), *depth, *seed, r.trace.as_slice()))
        })
        .collect();
    if !traces.is_empty() {
        output::write_trace(out, header, &traces)?;
    }
    Ok(Outcome {
        failed_seeds: runs.iter().filter(|r| r.3.is_err()).count(),
    })
}

#[derive(Args, Debug, Clone)]
pub struct RewireArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// trigon, delaunay, knn-union or identity.
    #[arg(long)]
    pub method: Method,
}

/// Writes `g` with the dataset's own node ids, one `u<TAB>v` line per edge.
pub fn write_edges(w: &mut impl Write, g: &Graph, ids: &[String]) -> std::io::Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{}\t{}", ids[u], ids[v])?;
    }
    Ok(())
}

pub fn rewire(args: &RewireArgs) -> Result<Outcome> {
    let cfg = &args.run;
    cfg.validate()?;
    let seed = cfg.seeds.0[0];
    if cfg.seeds.0.len() > 1 {
        log::warn!("rewire uses only the first seed ({seed})");
    }
    let d = cfg.data.load(seed)?;
    let run = run_method(&d, args.method, &cfg.trigon_config(), seed)?;
    let header = provenance(
        "rewire",
        &[
            ("method", args.method.to_string()),
            ("seed", seed.to_string()),
        ],
        Some(cfg),
    );
    let mut w = output::create(&cfg.out, output::EDGES_FILE, &header)?;
    write_edges(&mut w, &run.graph, &d.node_ids)?;
    w.flush()?;
    output::write_config(&cfg.out, &header)?;
    if !run.trace.is_empty() {
        output::write_trace(
            &cfg.out,
            &header,
            &[(args.method.as_str(), cfg.depth, seed, &run.trace)],
        )?;
    }
    Ok(Outcome::default())
}

#[derive(Args, Debug, Clone)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub run: RunConfig,
    /// Extra edge lists over the dataset's node ids, as `PATH` or `NAME=PATH`.
    #[arg(long = "edges", value_name = "[NAME=]PATH")]
    pub edges: Vec<String>,
    /// Also build and diagnose these rewirings in-process.
    #[arg(long, value_parser = parse_methods)]
    pub method: Option<Vec<Vec<Method>>>,
}

/// Reads an edge list whose endpoints are dataset node ids.
pub fn read_edges(path: &Path, d: &Dataset) -> Result<Graph> {
    let index: HashMap<&str, usize> = d
        .node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() < 2 {
            bail!("{}:{}: expected two node ids", path.display(), no + 1);
        }
        let look = |id: &str| {
            index
                .get(id)
                .copied()
                .with_context(|| format!("{}:{}: unknown node `{id}`", path.display(), no + 1))
        };
        pairs.push((look(f[0])?, look(f[1])?));
    }
    Ok(Graph::from_pairs(d.n(), pairs)?)
}

fn edge_source(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) => (name.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            (name, path)
        }
    }
}

/// Reports for `g`; a disconnected graph additionally gets one report per
/// component with at least two nodes.
pub fn graph_reports(name: &str, g: &Graph) -> Result<Vec<DiagnosticsReport>> {
    let mut out = vec![DiagnosticsReport::compute(name, g, &DEFAULT_P_GRID)?];
    if g.n() > 0 && !g.is_connected() {
        let labels = g.components();
        let count = g.component_count();
        log::warn!("{name}: graph has {count} connected components; adding per-component reports");
        let mut members = vec![Vec::new(); count];
        for (u, &c) in labels.iter().enumerate() {
            members[c].push(u);
        }
        for (c, nodes) in members.iter().enumerate().filter(|(_, m)| m.len() >= 2) {
            let (sub, _) = g.induced_subgraph(nodes);
            out.push(DiagnosticsReport::compute(
                &format!("{name}/component-{c}"),
                &sub,
                &DEFAULT_P_GRID,
            )?);
        }
    }
    Ok(out)
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<Outcome> {
    let cfg = &args.run;
    cfg.validate()?;
    let seed = cfg.seeds.0[0];
    let d = cfg.data.load(seed)?;
    let mut graphs = vec![("original".to_string(), d.graph.clone())];
    for spec in &args.edges {
        let (name, path) = edge_source(spec);
        graphs.push((name, read_edges(&path, &d)?));
    }
    for method in args.method.clone().map(|m| m.concat()).unwrap_or_default() {
        let run = run_method(&d, method, &cfg.trigon_config(), seed)?;
        graphs.push((method.to_string(), run.graph));
    }
    let names: Vec<&str> = graphs.iter().map(|(n, _)| n.as_str()).collect();
    let header = provenance(
        "diagnose",
        &[("graphs", names.join(",")), ("seed", seed.to_string())],
        Some(cfg),
    );
    let reports = dispatch(&graphs, |(name, g)| graph_reports(name, g))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut text = String::new();
    for r in reports.iter().flatten() {
        let _ = writeln!(text, "{}", r.to_text());
    }
    let mut w = output::create(&cfg.out, output::DIAGNOSTICS_FILE, &header)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;

    let mut csv = csv::Writer::from_writer(output::create(&cfg.out, output::CURVE_FILE, &header)?);
    csv.write_record(["graph", "p", "mean_resistance"])?;
    for r in reports.iter().map(|rs| &rs[0]) {
        for (p, v) in &r.top_p_curve {
            csv.write_record([r.name.clone(), p.to_string(), v.to_string()])?;
        }
    }
    csv.flush()?;
    output::write_config(&cfg.out, &header)?;
    Ok(Outcome::default())
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Sbm,
    Moons,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Sbm)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sbm: SbmArgs,
    #[arg(long, default_value_t = 200)]
    pub moons_n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub moons_noise: f64,
    #[arg(long, default_value_t = 0.3)]
    pub moons_radius: f64,
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn synth(args: &SynthArgs) -> Result<Outcome> {
    let mut extra = vec![("seed", args.seed.to_string())];
    let d = match args.kind {
        SynthKind::Sbm => {
            extra.push(("kind", "sbm".to_string()));
            extra.extend(args.sbm.pairs());
            synth_sbm(&args.sbm.config(), args.seed)?
        }
        SynthKind::Moons => {
            let c = MoonsConfig {
                n: args.moons_n,
                noise: args.moons_noise,
                radius: args.moons_radius,
            };
            extra.extend([
                ("kind", "moons".to_string()),
                ("moons_n", c.n.to_string()),
                ("moons_noise", c.noise.to_string()),
                ("moons_radius", c.radius.to_string()),
            ]);
            synth_two_moons(&c, args.seed)?
        }
    };
    let header = provenance("synth", &extra, None);
    d.save_with_header(&args.out, &header)?;
    output::write_config(&args.out, &header)?;
    Ok(Outcome::default())
}
