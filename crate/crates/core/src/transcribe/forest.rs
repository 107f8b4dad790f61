//! Bagged CART trees over the 7-element cell encoding.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Encoding, ENCODING_LEN};
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features tried at each split; ⌈√7⌉ = 3 by default.
    pub features_per_node: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: 8,
            features_per_node: 3,
            seed: 42,
        }
    }
}

impl ForestParams {
    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Param("forest needs at least one tree".into()));
        }
        if !(1..=ENCODING_LEN).contains(&self.features_per_node) {
            return Err(Error::Param(format!(
                "features per node must lie in 1..={ENCODING_LEN}, got {}",
                self.features_per_node
            )));
        }
        Ok(())
    }
}

/// A tree node: a split when `feat` is set, otherwise a leaf with `label`.
/// Rows with `row[feat] <= thresh` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub thresh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub left: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub right: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &Encoding) -> &str {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            match (n.feat, n.thresh, n.left, n.right) {
                (Some(f), Some(t), Some(l), Some(r)) => i = if row[f] <= t { l } else { r },
                _ => return n.label.as_deref().unwrap_or_default(),
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("empty tree".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match (n.feat, n.thresh, n.left, n.right, &n.label) {
                (Some(f), Some(_), Some(l), Some(r), _) => {
                    if f >= ENCODING_LEN
                        || l <= i
                        || r <= i
                        || l >= self.nodes.len()
                        || r >= self.nodes.len()
                    {
                        return Err(Error::Model(format!("node {i} has invalid split")));
                    }
                }
                (None, None, None, None, Some(_)) => {}
                _ => return Err(Error::Model(format!("node {i} is neither split nor leaf"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub rows: usize,
    pub class_counts: BTreeMap<String, usize>,
    /// Accuracy of each row's out-of-bag vote, over rows left out of at least
    /// one bootstrap sample.
    pub oob_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub seed: u64,
    pub n_trees: usize,
    pub max_depth: usize,
    pub features_per_node: usize,
    pub classes: Vec<String>,
    pub trees: Vec<Tree>,
    pub training: TrainingSummary,
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(s)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                m.version
            )));
        }
        if m.trees.len() != m.n_trees || m.trees.is_empty() {
            return Err(Error::Model(format!(
                "model declares {} trees but holds {}",
                m.n_trees,
                m.trees.len()
            )));
        }
        for t in &m.trees {
            t.validate()?;
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Majority vote; ties go to the lexicographically smallest label.
    /// Confidence is the winning vote count over the number of trees.
    pub fn classify(&self, row: &Encoding) -> (String, f64) {
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &self.trees {
            *votes.entry(t.predict(row)).or_default() += 1;
        }
        let (label, n) = votes.into_iter().fold(
            ("", 0),
            |best, (l, n)| if n > best.1 { (l, n) } else { best },
        );
        (label.to_string(), n as f64 / self.trees.len() as f64)
    }
}

struct Builder<'a> {
    rows: &'a [Encoding],
    labels: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    features_per_node: usize,
    classes: &'a [String],
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    counts
        .iter()
        .enumerate()
        .fold(
            (0, 0),
            |best, (k, &c)| if c > best.1 { (k, c) } else { best },
        )
        .0
}

impl Builder<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    /// Best `(gain, threshold)` for one feature, or `None` if no cut separates
    /// the samples.
    fn best_cut(&self, idx: &[usize], feat: usize, parent: f64) -> Option<(f64, f64)> {
        let mut sorted: Vec<usize> = idx.to_vec();
        sorted.sort_by(|&a, &b| self.rows[a][feat].total_cmp(&self.rows[b][feat]));
        let total = sorted.len();
        let mut left = vec![0usize; self.n_classes];
        let mut right = self.class_counts(&sorted);
        let mut best: Option<(f64, f64)> = None;
        for k in 0..total - 1 {
            let c = self.labels[sorted[k]];
            left[c] += 1;
            right[c] -= 1;
            let (v, next) = (self.rows[sorted[k]][feat], self.rows[sorted[k + 1]][feat]);
            if v == next {
                continue;
            }
            let (nl, nr) = (k + 1, total - k - 1);
            let impurity =
                (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / total as f64;
            let gain = parent - impurity;
            if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                best = Some((gain, (v + next) / 2.0));
            }
        }
        best
    }

    fn build(
        &self,
        idx: Vec<usize>,
        depth: usize,
        rng: &mut ChaCha8Rng,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let me = nodes.len();
        let counts = self.class_counts(&idx);
        nodes.push(Node {
            feat: None,
            thresh: None,
            left: None,
            right: None,
            label: Some(self.classes[majority(&counts)].clone()),
        });
        let parent = gini(&counts, idx.len());
        if depth >= self.max_depth || idx.len() < 2 || parent == 0.0 {
            return me;
        }
        let mut feats: Vec<usize> = (0..ENCODING_LEN).collect();
        feats.shuffle(rng);
        let (tried, rest) = feats.split_at(self.features_per_node);
        let pick = |set: &[usize]| {
            set.iter()
                .filter_map(|&f| self.best_cut(&idx, f, parent).map(|(g, t)| (g, f, t)))
                .fold(None, |best: Option<(f64, usize, f64)>, c| match best {
                    Some(b) if b.0 >= c.0 => Some(b),
                    _ => Some(c),
                })
        };
        // When the drawn features cannot split the node, the others are tried
        // before giving up, so a pure split is never missed.
        let Some((_, feat, thresh)) = pick(tried).or_else(|| pick(rest)) else {
            return me;
        };
        let (l_idx, r_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.rows[i][feat] <= thresh);
        let l = self.build(l_idx, depth + 1, rng, nodes);
        let r = self.build(r_idx, depth + 1, rng, nodes);
        let n = &mut nodes[me];
        n.feat = Some(feat);
        n.thresh = Some(thresh);
        n.left = Some(l);
        n.right = Some(r);
        n.label = None;
        me
    }
}

/// Trains a random forest. Tree `t` draws its bootstrap sample and feature
/// subsets from ChaCha8 seeded with `params.seed` on stream `t`, so a model is
/// fully determined by its inputs.
pub fn train_forest(rows: &[(Encoding, String)], params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::InsufficientInput("no training rows".into()));
    }
    let mut class_counts: BTreeMap<String, usize> = BTreeMap::new();
    for (_, l) in rows {
        *class_counts.entry(l.clone()).or_default() += 1;
    }
    let classes: Vec<String> = class_counts.keys().cloned().collect();
    let class_of: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels: Vec<usize> = rows.iter().map(|(_, l)| class_of[l.as_str()]).collect();
    let feats: Vec<Encoding> = rows.iter().map(|(r, _)| *r).collect();
    if classes.len() == 1 {
        warn!(
            "training data holds a single class {:?}; model is constant",
            classes[0]
        );
    }

    let builder = Builder {
        rows: &feats,
        labels: &labels,
        n_classes: classes.len(),
        max_depth: params.max_depth,
        features_per_node: params.features_per_node,
        classes: &classes,
    };
    let n = rows.len();
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut oob_votes = vec![vec![0usize; classes.len()]; n];
    for t in 0..params.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(t as u64);
        let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut in_bag = vec![false; n];
        for &i in &sample {
            in_bag[i] = true;
        }
        let mut nodes = Vec::new();
        builder.build(sample, 0, &mut rng, &mut nodes);
        let tree = Tree { nodes };
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_votes[i][class_of[tree.predict(&feats[i])]] += 1;
        }
        trees.push(tree);
    }

    let (mut hit, mut seen) = (0usize, 0usize);
    for (i, v) in oob_votes.iter().enumerate() {
        if v.iter().any(|&c| c > 0) {
            seen += 1;
            if majority(v) == labels[i] {
                hit += 1;
            }
        }
    }
    Ok(ForestModel {
        version: MODEL_VERSION,
        seed: params.seed,
        n_trees: params.n_trees,
        max_depth: params.max_depth,
        features_per_node: params.features_per_node,
        classes,
        trees,
        training: TrainingSummary {
            rows: n,
            class_counts,
            oob_accuracy: (seen > 0).then(|| hit as f64 / seen as f64),
        },
    })
}
