//! Output files. Every file starts with `# key=value` provenance lines.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use trigon_core::pipeline::SeedRun;
use trigon_core::selector::TraceRow;

pub const METRICS_FILE: &str = "metrics.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";
pub const CURVE_FILE: &str = "curve.csv";
pub const EDGES_FILE: &str = "edges_rewired.tsv";
pub const CONFIG_FILE: &str = "config.txt";
pub const TRACE_FILE: &str = "trace.csv";

pub const METRICS_COLUMNS: [&str; 10] = [
    "kind",
    "method",
    "depth",
    "seed",
    "status",
    "train_acc",
    "val_acc",
    "test_acc",
    "test_stderr",
    "best_epoch",
];

pub const TRACE_COLUMNS: [&str; 17] = [
    "method",
    "depth",
    "seed",
    "epoch",
    "tau",
    "candidates",
    "selected",
    "edges",
    "fallback",
    "l_contrastive",
    "l_structural",
    "l_participation",
    "l_total",
    "gnn_loss",
    "train_acc",
    "val_acc",
    "test_acc",
];

/// Creates `dir/name` and writes `header` into it.
pub fn create(dir: &Path, name: &str, header: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    w.write_all(header.as_bytes())?;
    Ok(w)
}

/// `config.txt`: the provenance block as plain `key=value` lines.
pub fn write_config(dir: &Path, header: &str) -> Result<()> {
    let mut w = create(dir, CONFIG_FILE, "")?;
    for line in header.lines() {
        writeln!(w, "{}", line.trim_start_matches("# "))?;
    }
    w.flush()?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// One `(method, depth)` cell of a metrics table: the run label, depth and
/// the per-seed results in seed order.
pub struct Cell<'a> {
    pub method: &'a str,
    pub depth: usize,
    pub runs: Vec<(u64, &'a Result<SeedRun, String>)>,
}

/// Sample mean and standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-seed rows followed by one `mean` row per cell.
pub fn write_metrics(dir: &Path, header: &str, cells: &[Cell]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(create(dir, METRICS_FILE, header)?);
    csv.write_record(METRICS_COLUMNS)?;
    for cell in cells {
        let depth = cell.depth.to_string();
        for (seed, run) in &cell.runs {
            let seed = seed.to_string();
            match run {
                Ok(r) => {
                    let m = &r.metrics;
                    csv.write_record([
                        "seed",
                        cell.method,
                        &depth,
                        &seed,
                        "ok",
                        &num(m.train_acc),
                        &num(m.val_acc),
                        &num(m.test_acc),
                        "",
                        &r.best_epoch.to_string(),
                    ])?;
                }
                Err(_) => csv.write_record([
                    "seed",
                    cell.method,
                    &depth,
                    &seed,
                    "failed",
                    "",
                    "",
                    "",
                    "",
                    "",
                ])?,
            }
        }
        let ok: Vec<&SeedRun> = cell
            .runs
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok())
            .collect();
        let status = match ok.len() {
            0 => "failed".to_string(),
            k if k == cell.runs.len() => "ok".to_string(),
            k => format!("partial {k}/{}", cell.runs.len()),
        };
        if ok.is_empty() {
            csv.write_record(["mean", cell.method, &depth, "", &status, "", "", "", "", ""])?;
            continue;
        }
        let col = |f: fn(&SeedRun) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
        let (train, _) = mean_stderr(&col(|r| r.metrics.train_acc));
        let (val, _) = mean_stderr(&col(|r| r.metrics.val_acc));
        let (test, stderr) = mean_stderr(&col(|r| r.metrics.test_acc));
        csv.write_record([
            "mean",
            cell.method,
            &depth,
            "",
            &status,
            &num(train),
            &num(val),
            &num(test),
            &num(stderr),
            "",
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-epoch selector and classifier record of every learned run.
pub fn write_trace(
    dir: &Path,
    header: &str,
    rows: &[(&str, usize, u64, &[TraceRow])],
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(create(dir, TRACE_FILE, header)?);
    csv.write_record(TRACE_COLUMNS)?;
    for (method, depth, seed, trace) in rows {
        for t in trace.iter() {
            csv.write_record([
                method.to_string(),
                depth.to_string(),
                seed.to_string(),
                t.epoch.to_string(),
                num(t.tau),
                t.candidates.to_string(),
                t.selected.to_string(),
                t.edges.to_string(),
                u8::from(t.fallback).to_string(),
                num(t.losses.contrastive),
                num(t.losses.structural),
                num(t.losses.participation),
                num(t.losses.total),
                num(t.gnn_loss),
                num(t.train_acc),
                num(t.val_acc),
                num(t.test_acc),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}
