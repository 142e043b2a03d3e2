//! Random forest classifier built from CART trees.
//!
//! Each tree is grown on a bootstrap resample (represented as integer
//! sample weights) with Gini impurity, exhaustive midpoint threshold search
//! and per-node feature subsampling. Class probabilities are the mean of
//! the leaf class proportions over all trees. Feature importances are the
//! mean decrease in impurity, normalized per tree and then over the forest.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;

const N_CLASSES: usize = 2;

/// Number of candidate features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(n_features))`, at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let n = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(c) => c.min(n_features),
        };
        n.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 8,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::invalid("forest config", "n_estimators must be >= 1"));
        }
        if let MaxFeatures::Count(0) = self.max_features {
            return Err(Error::invalid("forest config", "max_features must be >= 1"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::invalid("forest config", "min_samples_split must be >= 2"));
        }
        Ok(())
    }
}

/// Node of a flattened tree; children are indices into the tree's node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `row[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Weighted (bootstrap) class counts, `[not_contact, contact]`.
    Leaf { class_counts: [u64; N_CLASSES] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root is `nodes[0]`.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    fn leaf_for(&self, row: &[f64]) -> &[u64; N_CLASSES] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { class_counts } => return class_counts,
            }
        }
    }

    /// Leaf class proportions for `row`.
    pub fn predict_proba(&self, row: &[f64]) -> [f64; N_CLASSES] {
        let counts = self.leaf_for(row);
        let total: u64 = counts.iter().sum();
        [counts[0] as f64 / total as f64, counts[1] as f64 / total as f64]
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            if let TreeNode::Split { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Gini impurity times weight: `w * (1 - sum p^2) = w - sum c^2 / w`.
#[inline]
fn weighted_gini(counts: &[f64; N_CLASSES]) -> f64 {
    let w = counts[0] + counts[1];
    if w <= 0.0 {
        return 0.0;
    }
    w - (counts[0] * counts[0] + counts[1] * counts[1]) / w
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// Sum of weighted child impurities.
    impurity: f64,
}

impl Candidate {
    /// Lower impurity wins; exact ties go to the lower feature index, then
    /// the lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        if self.impurity != other.impurity {
            return self.impurity < other.impurity;
        }
        (self.feature, self.threshold) < (other.feature, other.threshold)
    }
}

struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [usize],
    weights: &'a [u32],
    max_features: usize,
    min_samples_split: usize,
    max_depth: Option<usize>,
    /// Per-feature impurity decrease, unnormalized.
    importances: Vec<f64>,
    sort_buf: Vec<(f64, usize)>,
}

impl TreeBuilder<'_> {
    fn counts(&self, idx: &[usize]) -> [f64; N_CLASSES] {
        let mut c = [0.0; N_CLASSES];
        for &i in idx {
            c[self.labels[i]] += self.weights[i] as f64;
        }
        c
    }

    /// Best threshold on one feature, or `None` if the feature is constant
    /// within the node.
    fn best_on_feature(&mut self, feature: usize, idx: &[usize], total: &[f64; N_CLASSES]) -> Option<Option<Candidate>> {
        let col = &self.columns[feature];
        self.sort_buf.clear();
        self.sort_buf.extend(idx.iter().map(|&i| (col[i], i)));
        self.sort_buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let (lo, hi) = (self.sort_buf[0].0, self.sort_buf[self.sort_buf.len() - 1].0);
        if lo == hi {
            return None;
        }
        let mut left = [0.0; N_CLASSES];
        let mut best: Option<Candidate> = None;
        for j in 0..self.sort_buf.len() - 1 {
            let (v, i) = self.sort_buf[j];
            left[self.labels[i]] += self.weights[i] as f64;
            let next = self.sort_buf[j + 1].0;
            if next == v {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let impurity = weighted_gini(&left) + weighted_gini(&right);
            let mut threshold = v / 2.0 + next / 2.0;
            if threshold >= next || threshold < v {
                threshold = v;
            }
            let cand = Candidate {
                feature,
                threshold,
                impurity,
            };
            if best.as_ref().map_or(true, |b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        Some(best)
    }

    fn build(mut self, mut idx: Vec<usize>, rng: &mut ChaCha8Rng) -> (DecisionTree, Vec<f64>) {
        let n_features = self.columns.len();
        let mut nodes = vec![TreeNode::Leaf {
            class_counts: [0; N_CLASSES],
        }];
        let root_weight: f64 = idx.iter().map(|&i| self.weights[i] as f64).sum();
        let mut feature_order: Vec<usize> = (0..n_features).collect();
        // (node slot, start, end, depth)
        let mut stack = vec![(0usize, 0usize, idx.len(), 0usize)];

        while let Some((slot, start, end, depth)) = stack.pop() {
            let counts = self.counts(&idx[start..end]);
            let weight = counts[0] + counts[1];
            let leaf = TreeNode::Leaf {
                class_counts: [counts[0] as u64, counts[1] as u64],
            };
            let pure = counts[0] == 0.0 || counts[1] == 0.0;
            if pure
                || weight < self.min_samples_split as f64
                || self.max_depth.is_some_and(|d| depth >= d)
            {
                nodes[slot] = leaf;
                continue;
            }

            // Visit features in random order; constant features do not count
            // toward max_features.
            feature_order.shuffle(rng);
            let mut visited = 0;
            let mut best: Option<Candidate> = None;
            for &f in &feature_order {
                if visited == self.max_features {
                    break;
                }
                if let Some(found) = self.best_on_feature(f, &idx[start..end], &counts) {
                    visited += 1;
                    if let Some(c) = found {
                        if best.as_ref().map_or(true, |b| c.beats(b)) {
                            best = Some(c);
                        }
                    }
                }
            }

            let parent = weighted_gini(&counts);
            let Some(split) = best.filter(|b| parent - b.impurity > 1e-12 * weight) else {
                nodes[slot] = leaf;
                continue;
            };
            self.importances[split.feature] += (parent - split.impurity) / root_weight;

            let col = &self.columns[split.feature];
            let mid = start + partition_in_place(&mut idx[start..end], |&i| col[i] <= split.threshold);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(TreeNode::Leaf {
                class_counts: [0; N_CLASSES],
            });
            nodes.push(TreeNode::Leaf {
                class_counts: [0; N_CLASSES],
            });
            nodes[slot] = TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            stack.push((right, mid, end, depth + 1));
            stack.push((left, start, mid, depth + 1));
        }
        (DecisionTree { nodes }, self.importances)
    }
}

/// Stable partition; returns the number of elements satisfying `pred`,
/// which end up first.
fn partition_in_place(v: &mut [usize], pred: impl Fn(&usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = v.iter().partition(|x| pred(x));
    let n = yes.len();
    v[..n].copy_from_slice(&yes);
    v[n..].copy_from_slice(&no);
    n
}

pub const MODEL_FORMAT: &str = "contact-forest";
pub const MODEL_VERSION: u32 = 1;

/// A trained forest plus everything needed to apply and describe it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub format: String,
    pub version: u32,
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub classes: Vec<Label>,
    pub feature_importances: Vec<f64>,
    pub trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    /// Fits a forest on `rows` (all of equal width) and binary labels.
    pub fn fit<R>(rows: &[R], labels: &[Label], feature_names: &[&str], cfg: &ForestConfig) -> Result<Self>
    where
        R: AsRef<[f64]> + Sync,
    {
        cfg.validate()?;
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        if rows.len() < 2 {
            return Err(Error::invalid("training set", "need at least 2 rows"));
        }
        let n_features = feature_names.len();
        if let Some(bad) = rows.iter().map(|r| r.as_ref().len()).find(|&w| w != n_features) {
            return Err(Error::LengthMismatch {
                left: bad,
                right: n_features,
            });
        }
        if rows.iter().flat_map(|r| r.as_ref()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("training set", "non-finite feature value"));
        }
        let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        if !(y.contains(&0) && y.contains(&1)) {
            return Err(Error::SingleClass);
        }
        let columns: Vec<Vec<f64>> = (0..n_features)
            .map(|f| rows.iter().map(|r| r.as_ref()[f]).collect())
            .collect();

        let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
        let tree_seeds: Vec<u64> = (0..cfg.n_estimators).map(|_| master.random()).collect();
        let max_features = cfg.max_features.resolve(n_features);
        let n = rows.len();

        let fitted: Vec<(DecisionTree, Vec<f64>)> = tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut weights = vec![0u32; n];
                if cfg.bootstrap {
                    for _ in 0..n {
                        weights[rng.random_range(0..n)] += 1;
                    }
                } else {
                    weights.fill(1);
                }
                let idx: Vec<usize> = (0..n).filter(|&i| weights[i] > 0).collect();
                let builder = TreeBuilder {
                    columns: &columns,
                    labels: &y,
                    weights: &weights,
                    max_features,
                    min_samples_split: cfg.min_samples_split,
                    max_depth: cfg.max_depth,
                    importances: vec![0.0; n_features],
                    sort_buf: Vec::with_capacity(idx.len()),
                };
                builder.build(idx, &mut rng)
            })
            .collect();

        let mut importances = vec![0.0; n_features];
        let mut trees = Vec::with_capacity(fitted.len());
        for (tree, imp) in fitted {
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                for (acc, v) in importances.iter_mut().zip(&imp) {
                    *acc += v / total;
                }
            }
            trees.push(tree);
        }
        let total: f64 = importances.iter().sum();
        if total > 0.0 {
            importances.iter_mut().for_each(|v| *v /= total);
        }

        Ok(Self {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            config: *cfg,
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            classes: Label::CLASSES.to_vec(),
            feature_importances: importances,
            trees,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `[p(not_contact), p(contact)]`.
    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; N_CLASSES]> {
        if row.len() != self.n_features() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: self.n_features(),
            });
        }
        let mut acc = [0.0; N_CLASSES];
        for tree in &self.trees {
            let p = tree.predict_proba(row);
            acc[0] += p[0];
            acc[1] += p[1];
        }
        let n = self.trees.len() as f64;
        Ok([acc[0] / n, acc[1] / n])
    }

    /// Most probable class; an exact tie goes to `not_contact`.
    pub fn predict(&self, row: &[f64]) -> Result<Label> {
        let p = self.predict_proba(row)?;
        Ok(if p[1] > p[0] { Label::Contact } else { Label::NotContact })
    }

    /// Contact probability for every row.
    pub fn contact_scores<R: AsRef<[f64]> + Sync>(&self, rows: &[R]) -> Result<Vec<f64>> {
        rows.par_iter()
            .map(|r| self.predict_proba(r.as_ref()).map(|p| p[1]))
            .collect()
    }

    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, rows: &[R]) -> Result<Vec<Label>> {
        rows.par_iter().map(|r| self.predict(r.as_ref())).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::format("<model>", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_at(text, Path::new("<model>"))
    }

    fn from_json_at(text: &str, path: &Path) -> Result<Self> {
        let model: RandomForestModel = serde_json::from_str(text).map_err(|e| Error::format(path, e))?;
        if model.format != MODEL_FORMAT {
            return Err(Error::format(path, format!("not a {MODEL_FORMAT} file: {:?}", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(Error::format(path, format!("unsupported model version {}", model.version)));
        }
        if model.feature_importances.len() != model.feature_names.len() {
            return Err(Error::format(path, "importance count does not match feature count"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_at(&text, path)
    }
}

/// Fits a forest on the seven-column contact features.
pub fn train(ds: &LabeledDataset, cfg: &ForestConfig) -> Result<RandomForestModel> {
    RandomForestModel::fit(&ds.rows, &ds.labels, &FEATURE_NAMES, cfg)
}

pub fn predict_proba(m: &RandomForestModel, row: &[f64]) -> Result<[f64; N_CLASSES]> {
    m.predict_proba(row)
}

pub fn predict(m: &RandomForestModel, row: &[f64]) -> Result<Label> {
    m.predict(row)
}

pub fn feature_importance(m: &RandomForestModel) -> &[f64] {
    &m.feature_importances
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[usize]) -> Vec<Label> {
        v.iter().map(|&i| Label::from_index(i).unwrap()).collect()
    }

    fn stump_cfg() -> ForestConfig {
        ForestConfig {
            n_estimators: 1,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn separable_data_gives_single_split() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64 / 10.0 + 0.05, (i % 3) as f64]).collect();
        let y = labels(&(0..10).map(|i| usize::from(i >= 5)).collect::<Vec<_>>());
        let m = RandomForestModel::fit(&rows, &y, &["a", "b"], &stump_cfg()).unwrap();
        let tree = &m.trees[0];
        assert_eq!(tree.nodes.len(), 3);
        match tree.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            _ => panic!("root should split"),
        }
        for (r, l) in rows.iter().zip(&y) {
            assert_eq!(m.predict(r).unwrap(), *l);
        }
        assert_eq!(m.feature_importances, vec![1.0, 0.0]);
    }

    #[test]
    fn single_class_is_rejected() {
        let rows = vec![[0.0], [1.0]];
        assert!(matches!(
            RandomForestModel::fit(&rows, &labels(&[1, 1]), &["x"], &ForestConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let rows = vec![[0.0], [1.0]];
        let m = RandomForestModel::fit(&rows, &labels(&[0, 1]), &["x"], &stump_cfg()).unwrap();
        assert!(m.predict_proba(&[0.0, 1.0]).is_err());
    }

    fn model_with_leaves(leaves: &[[u64; 2]]) -> RandomForestModel {
        RandomForestModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: ForestConfig::default(),
            feature_names: vec!["x".into()],
            classes: Label::CLASSES.to_vec(),
            feature_importances: vec![0.0],
            trees: leaves
                .iter()
                .map(|&c| DecisionTree {
                    nodes: vec![TreeNode::Leaf { class_counts: c }],
                })
                .collect(),
        }
    }

    #[test]
    fn probability_is_mean_of_leaf_proportions() {
        let m = model_with_leaves(&[[0, 4]; 3]);
        assert_eq!(m.predict_proba(&[0.0]).unwrap(), [0.0, 1.0]);
        let mut leaves = vec![[0u64, 5]; 6];
        leaves.extend([[7u64, 0]; 2]);
        let m = model_with_leaves(&leaves);
        assert_eq!(m.predict_proba(&[0.0]).unwrap()[1], 0.75);
        assert_eq!(m.predict(&[0.0]).unwrap(), Label::Contact);
    }

    #[test]
    fn exact_tie_predicts_not_contact() {
        let m = model_with_leaves(&[[1, 0], [0, 1]]);
        assert_eq!(m.predict_proba(&[3.0]).unwrap(), [0.5, 0.5]);
        assert_eq!(m.predict(&[3.0]).unwrap(), Label::NotContact);
    }

    #[test]
    fn max_features_rule() {
        assert_eq!(MaxFeatures::Sqrt.resolve(7), 2);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Sqrt.resolve(16), 4);
        assert_eq!(MaxFeatures::Count(10).resolve(3), 3);
    }

    #[test]
    fn invalid_config() {
        let cfg = ForestConfig {
            n_estimators: 0,
            ..ForestConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn max_depth_limits_growth() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let y = labels(&(0..40).map(|i| (i / 3) % 2).collect::<Vec<_>>());
        let cfg = ForestConfig {
            max_depth: Some(2),
            ..stump_cfg()
        };
        let m = RandomForestModel::fit(&rows, &y, &["x"], &cfg).unwrap();
        assert!(m.trees[0].depth() <= 2);
        let full = RandomForestModel::fit(&rows, &y, &["x"], &stump_cfg()).unwrap();
        assert_eq!(full.trees[0].n_leaves(), 14);
    }

    #[test]
    fn json_round_trip() {
        let rows: Vec<[f64; 2]> = (0..50).map(|i| [(i * 7 % 13) as f64 * 0.1, (i % 5) as f64]).collect();
        let y = labels(&(0..50).map(|i| usize::from(i % 4 == 0)).collect::<Vec<_>>());
        let m = RandomForestModel::fit(&rows, &y, &["a", "b"], &ForestConfig::default()).unwrap();
        let back = RandomForestModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        let bad = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(RandomForestModel::from_json(&bad).is_err());
    }
}
