use rand::seq::SliceRandom;

use crate::error::DataError;
use crate::rng::Rng;

/// Train/validation/test partition as sorted node lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Which part of a [`Split`] a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Train,
    Val,
    Test,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Val => "val",
            Part::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Part::Train),
            "val" => Some(Part::Val),
            "test" => Some(Part::Test),
            _ => None,
        }
    }
}

impl Split {
    pub fn from_parts(parts: &[Part]) -> Self {
        let mut s = Split::default();
        for (u, p) in parts.iter().enumerate() {
            match p {
                Part::Train => s.train.push(u),
                Part::Val => s.val.push(u),
                Part::Test => s.test.push(u),
            }
        }
        s
    }

    /// Per-node assignment; panics if the split does not cover `0..n`.
    pub fn parts(&self, n: usize) -> Vec<Part> {
        let mut out = vec![None; n];
        for (list, p) in [
            (&self.train, Part::Train),
            (&self.val, Part::Val),
            (&self.test, Part::Test),
        ] {
            for &u in list {
                out[u] = Some(p);
            }
        }
        out.into_iter()
            .map(|p| p.expect("split covers every node"))
            .collect()
    }

    /// Checks that the three lists partition `0..n`.
    pub fn validate(&self, n: usize) -> Result<(), DataError> {
        let mut seen = vec![false; n];
        for &u in self.train.iter().chain(&self.val).chain(&self.test) {
            if u >= n {
                return Err(DataError::Invalid(format!(
                    "split references node {u} of {n}"
                )));
            }
            if std::mem::replace(&mut seen[u], true) {
                return Err(DataError::Invalid(format!(
                    "node {u} appears twice in the split"
                )));
            }
        }
        if let Some(u) = seen.iter().position(|&s| !s) {
            return Err(DataError::Invalid(format!("node {u} is in no split")));
        }
        Ok(())
    }

    pub fn mask(&self, n: usize, part: Part) -> Vec<bool> {
        let mut m = vec![false; n];
        let list = match part {
            Part::Train => &self.train,
            Part::Val => &self.val,
            Part::Test => &self.test,
        };
        for &u in list {
            m[u] = true;
        }
        m
    }
}

/// Seeded 60/20/20 split, stratified by class.
///
/// Each class contributes `floor(0.6 n_c)` training and `floor(0.2 n_c)`
/// validation nodes; the rest go to test. When some class has fewer than
/// three nodes the split is drawn over all nodes at once instead.
pub fn make_split(labels: &[usize], rng: &mut Rng) -> Result<Split, DataError> {
    let n = labels.len();
    if n < 5 {
        return Err(DataError::Invalid(format!(
            "a split needs at least 5 nodes, got {n}"
        )));
    }
    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut members = vec![Vec::new(); classes];
    for (u, &c) in labels.iter().enumerate() {
        members[c].push(u);
    }
    let groups = if members.iter().any(|m| !m.is_empty() && m.len() < 3) {
        log::warn!("a class has fewer than 3 nodes; falling back to an unstratified split");
        vec![(0..n).collect::<Vec<_>>()]
    } else {
        members.into_iter().filter(|m| !m.is_empty()).collect()
    };
    let mut s = Split::default();
    for mut group in groups {
        group.shuffle(rng);
        let n_train = group.len() * 3 / 5;
        let n_val = group.len() / 5;
        s.train.extend_from_slice(&group[..n_train]);
        s.val.extend_from_slice(&group[n_train..n_train + n_val]);
        s.test.extend_from_slice(&group[n_train + n_val..]);
    }
    s.train.sort_unstable();
    s.val.sort_unstable();
    s.test.sort_unstable();
    Ok(s)
}
