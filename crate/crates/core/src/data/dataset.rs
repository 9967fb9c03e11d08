use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{DataError, GeometryError};
use crate::geometry::FeatureMatrix;
use crate::graph::{EdgeList, Graph};

use super::split::{Part, Split};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const SPLIT_FILE: &str = "split.tsv";

/// Node-attributed, labelled graph with a fixed split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    /// Dense class ids in `0..classes`.
    pub labels: Vec<usize>,
    pub classes: usize,
    pub split: Split,
    /// External node identifiers, indexed by compact node id.
    pub node_ids: Vec<String>,
}

impl Dataset {
    /// Assembles and validates a dataset with numeric node ids.
    pub fn new(
        name: &str,
        graph: Graph,
        features: FeatureMatrix,
        labels: Vec<usize>,
        split: Split,
    ) -> Result<Self, DataError> {
        let node_ids = (0..graph.n()).map(|i| i.to_string()).collect();
        let classes = labels.iter().max().map_or(0, |&c| c + 1);
        let d = Self {
            name: name.to_string(),
            graph,
            features,
            labels,
            classes,
            split,
            node_ids,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.graph.n();
        if self.features.rows() != n {
            return Err(GeometryError::RowMismatch {
                rows: self.features.rows(),
                expected: n,
            }
            .into());
        }
        if self.labels.len() != n || self.node_ids.len() != n {
            return Err(DataError::Invalid(format!(
                "{n} nodes but {} labels and {} ids",
                self.labels.len(),
                self.node_ids.len()
            )));
        }
        let used: BTreeSet<usize> = self.labels.iter().copied().collect();
        if used.len() != self.classes
            || used
                .iter()
                .next_back()
                .is_some_and(|&c| c + 1 != self.classes)
        {
            return Err(DataError::Invalid(
                "labels must use every class id in 0..classes".into(),
            ));
        }
        self.split.validate(n)
    }

    /// Same dataset on another graph over the same nodes.
    pub fn with_graph(&self, graph: Graph) -> Result<Self, DataError> {
        if graph.n() != self.n() {
            return Err(DataError::Invalid(format!(
                "graph has {} nodes, dataset {}",
                graph.n(),
                self.n()
            )));
        }
        Ok(Self {
            graph,
            ..self.clone()
        })
    }

    /// Fraction of edges whose endpoints share a label.
    pub fn edge_homophily(&self) -> f64 {
        edge_homophily(&self.graph, &self.labels)
    }

    /// Writes the directory layout read by [`load_dataset`], including the split.
    pub fn save(&self, dir: &Path) -> Result<(), DataError> {
        self.save_with_header(dir, "")
    }

    /// [`Dataset::save`] with `header` (already `#`-prefixed comment lines)
    /// at the top of every file.
    pub fn save_with_header(&self, dir: &Path, header: &str) -> Result<(), DataError> {
        fs::create_dir_all(dir)?;
        let ids = &self.node_ids;
        let create = |name: &str| -> Result<BufWriter<File>, DataError> {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            w.write_all(header.as_bytes())?;
            Ok(w)
        };
        let mut w = create(EDGES_FILE)?;
        for (u, v) in self.graph.edges() {
            writeln!(w, "{}\t{}", ids[u], ids[v])?;
        }
        w.flush()?;
        let mut w = create(FEATURES_FILE)?;
        for (u, id) in ids.iter().enumerate() {
            write!(w, "{id}")?;
            for j in 0..self.features.dim() {
                write!(w, "\t{}", self.features.get(u, j))?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        let mut w = create(LABELS_FILE)?;
        for (u, id) in ids.iter().enumerate() {
            writeln!(w, "{id}\t{}", self.labels[u])?;
        }
        w.flush()?;
        let mut w = create(SPLIT_FILE)?;
        for (u, p) in self.split.parts(self.n()).into_iter().enumerate() {
            writeln!(w, "{}\t{}", ids[u], p.as_str())?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn edge_homophily(g: &Graph, labels: &[usize]) -> f64 {
    if g.m() == 0 {
        return f64::NAN;
    }
    g.edges().filter(|&(u, v)| labels[u] == labels[v]).count() as f64 / g.m() as f64
}

/// Lines that are neither blank nor `#` comments, with 1-based numbers.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>, DataError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DataError::MissingFile(path.to_path_buf()),
        _ => DataError::Io(e),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

/// Loads `edges.tsv`, `features.tsv`, `labels.tsv` and optionally `split.tsv`
/// from `dir`. Nodes are numbered in order of appearance in the feature file.
/// Class labels are remapped to `0..C` in sorted order (numerically when all
/// labels are integers). Without a split file a seeded stratified split is
/// drawn from `split_rng`.
pub fn load_dataset(dir: &Path, split_rng: &mut crate::rng::Rng) -> Result<Dataset, DataError> {
    let name = dir.file_name().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    let file = FEATURES_FILE;
    let mut node_ids = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, text) in content_lines(&dir.join(file))? {
        let mut fields = text.split_whitespace();
        let id = fields.next().unwrap_or_default().to_string();
        let values = fields
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| DataError::Malformed {
                file: file.into(),
                line,
                reason: "feature values must be finite reals".into(),
            })?;
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(DataError::RaggedRow {
                    file: file.into(),
                    line,
                    got: values.len(),
                    expected: first.len(),
                });
            }
        } else if values.is_empty() {
            return Err(DataError::Malformed {
                file: file.into(),
                line,
                reason: "no feature values".into(),
            });
        }
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(DataError::Malformed {
                file: file.into(),
                line,
                reason: format!("duplicate node id {id:?}"),
            });
        }
        node_ids.push(id);
        rows.push(values);
    }
    let n = node_ids.len();
    if n == 0 {
        return Err(DataError::Invalid("no nodes in features.tsv".into()));
    }
    let features = FeatureMatrix::from_rows(&rows).map_err(DataError::from)?;

    let lookup = |file: &str, line: usize, id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| DataError::UnknownNode {
                file: file.into(),
                line,
                id: id.to_string(),
            })
    };

    let mut pairs = Vec::new();
    for (line, text) in content_lines(&dir.join(EDGES_FILE))? {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 2 {
            return Err(DataError::Malformed {
                file: EDGES_FILE.into(),
                line,
                reason: format!("expected 2 fields, got {}", f.len()),
            });
        }
        pairs.push((
            lookup(EDGES_FILE, line, f[0])?,
            lookup(EDGES_FILE, line, f[1])?,
        ));
    }
    let graph =
        Graph::new(n, &EdgeList::new(pairs)).map_err(|e| DataError::Invalid(e.to_string()))?;

    let mut raw_labels: Vec<Option<String>> = vec![None; n];
    for (line, text) in content_lines(&dir.join(LABELS_FILE))? {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 2 {
            return Err(DataError::Malformed {
                file: LABELS_FILE.into(),
                line,
                reason: format!("expected 2 fields, got {}", f.len()),
            });
        }
        let u = lookup(LABELS_FILE, line, f[0])?;
        raw_labels[u] = Some(f[1].to_string());
    }
    let raw_labels = raw_labels
        .into_iter()
        .enumerate()
        .map(|(u, l)| {
            l.ok_or_else(|| DataError::Invalid(format!("node {:?} has no label", node_ids[u])))
        })
        .collect::<Result<Vec<String>, _>>()?;
    let (labels, classes) = compact_labels(&raw_labels);

    let split_path = dir.join(SPLIT_FILE);
    let split = if split_path.exists() {
        let mut parts: Vec<Option<Part>> = vec![None; n];
        for (line, text) in content_lines(&split_path)? {
            let f: Vec<&str> = text.split_whitespace().collect();
            let part = (f.len() == 2)
                .then(|| Part::parse(f[1]))
                .flatten()
                .ok_or_else(|| DataError::Malformed {
                    file: SPLIT_FILE.into(),
                    line,
                    reason: "expected `id<TAB>train|val|test`".into(),
                })?;
            parts[lookup(SPLIT_FILE, line, f[0])?] = Some(part);
        }
        let parts = parts
            .into_iter()
            .enumerate()
            .map(|(u, p)| {
                p.ok_or_else(|| {
                    DataError::Invalid(format!("node {:?} missing from split.tsv", node_ids[u]))
                })
            })
            .collect::<Result<Vec<Part>, _>>()?;
        Split::from_parts(&parts)
    } else if n < 5 {
        log::warn!("{n} nodes are too few for a random split; every node is used for training");
        Split {
            train: (0..n).collect(),
            ..Split::default()
        }
    } else {
        super::split::make_split(&labels, split_rng)?
    };

    let d = Dataset {
        name,
        graph,
        features,
        labels,
        classes,
        split,
        node_ids,
    };
    d.validate()?;
    Ok(d)
}

/// Maps arbitrary label tokens to `0..C` in sorted order.
fn compact_labels(raw: &[String]) -> (Vec<usize>, usize) {
    let numeric: Option<Vec<i64>> = raw.iter().map(|s| s.parse::<i64>().ok()).collect();
    let (keys, order): (Vec<String>, Vec<String>) = match numeric {
        Some(nums) => {
            let sorted: BTreeSet<i64> = nums.iter().copied().collect();
            (
                nums.iter().map(|v| v.to_string()).collect(),
                sorted.iter().map(|v| v.to_string()).collect(),
            )
        }
        None => {
            let sorted: BTreeSet<&String> = raw.iter().collect();
            (raw.to_vec(), sorted.into_iter().cloned().collect())
        }
    };
    let map: HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    if order.iter().enumerate().any(|(i, s)| *s != i.to_string()) {
        let pairs: Vec<String> = order
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s}->{i}"))
            .collect();
        log::info!("remapped labels: {}", pairs.join(", "));
    }
    (keys.iter().map(|k| map[k.as_str()]).collect(), order.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_compaction() {
        let raw: Vec<String> = ["2", "0", "2", "10"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(compact_labels(&raw), (vec![1, 0, 1, 2], 3));
        let raw: Vec<String> = ["b", "a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(compact_labels(&raw), (vec![1, 0, 1], 2));
    }

    #[test]
    fn homophily_counts_same_label_edges() {
        let g = Graph::path(4);
        assert_eq!(edge_homophily(&g, &[0, 0, 1, 1]), 2.0 / 3.0);
        assert!(edge_homophily(&Graph::empty(2), &[0, 1]).is_nan());
    }
}
