//! Labeled frame datasets, the train/validation/test split and stratified
//! k-fold partitioning.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow};

/// Binary frame label. The discriminant is the class index used by the
/// forest (`not_contact` = 0, `contact` = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotContact = 0,
    Contact = 1,
}

impl Label {
    pub const CLASSES: [Label; 2] = [Label::NotContact, Label::Contact];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::NotContact),
            1 => Some(Label::Contact),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::NotContact => "not_contact",
            Label::Contact => "contact",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Feature rows with one label and one trial identifier per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub rows: Vec<FeatureRow>,
    pub labels: Vec<Label>,
    pub trial_ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(rows: Vec<FeatureRow>, labels: Vec<Label>, trial_ids: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        if rows.len() != trial_ids.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: trial_ids.len(),
            });
        }
        Ok(Self {
            rows,
            labels,
            trial_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `[not_contact, contact]` row counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            trial_ids: indices.iter().map(|&i| self.trial_ids[i].clone()).collect(),
        }
    }

    pub fn extend(&mut self, other: LabeledDataset) {
        self.rows.extend(other.rows);
        self.labels.extend(other.labels);
        self.trial_ids.extend(other.trial_ids);
    }

    pub fn concat(parts: impl IntoIterator<Item = LabeledDataset>) -> LabeledDataset {
        let mut out = LabeledDataset::default();
        for p in parts {
            out.extend(p);
        }
        out
    }
}

/// Labels a row `contact` iff its timestamp is within `window` seconds of a
/// contact instant.
pub fn label_frames(
    fm: &FeatureMatrix,
    contact_times: &[f64],
    window: f64,
    trial_id: &str,
) -> Result<LabeledDataset> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::invalid(
            "label window",
            format!("must be positive, got {window}"),
        ));
    }
    let labels = fm
        .timestamps
        .iter()
        .map(|&t| {
            if contact_times.iter().any(|&c| (t - c).abs() <= window) {
                Label::Contact
            } else {
                Label::NotContact
            }
        })
        .collect();
    LabeledDataset::new(fm.rows.clone(), labels, vec![trial_id.to_owned(); fm.len()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Stratified random assignment of individual rows.
    FrameLevel,
    /// Whole trials are assigned to one split.
    TrialLevel,
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMode::FrameLevel => "frame_level",
            SplitMode::TrialLevel => "trial_level",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.56,
            val_frac: 0.19,
            test_frac: 0.25,
            seed: 0,
            mode: SplitMode::FrameLevel,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::invalid("split", format!("fractions must be positive: {fracs:?}")));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train_frac, self.val_frac, self.test_frac]
    }
}

/// Largest-remainder apportionment of `n` items by `fracs`; every part is
/// within one of its exact share.
fn apportion(n: usize, fracs: &[f64; 3]) -> [usize; 3] {
    let ideal: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut parts = [0usize; 3];
    for (p, x) in parts.iter_mut().zip(&ideal) {
        *p = x.floor() as usize;
    }
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    // Stable sort keeps split order for equal remainders.
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.partial_cmp(&ra).unwrap()
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        parts[i] += 1;
    }
    parts
}

/// Train/validation/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(ds: &LabeledDataset, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid("split", "dataset is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fracs = spec.fractions();
    let mut parts: [Vec<usize>; 3] = Default::default();

    match spec.mode {
        SplitMode::FrameLevel => {
            for class in Label::CLASSES {
                let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
                idx.shuffle(&mut rng);
                let sizes = apportion(idx.len(), &fracs);
                let mut rest = idx.as_slice();
                for (part, size) in parts.iter_mut().zip(sizes) {
                    let (head, tail) = rest.split_at(size);
                    part.extend_from_slice(head);
                    rest = tail;
                }
            }
        }
        SplitMode::TrialLevel => {
            let mut by_trial: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, id) in ds.trial_ids.iter().enumerate() {
                by_trial.entry(id.as_str()).or_default().push(i);
            }
            let mut trials: Vec<Vec<usize>> = by_trial.into_values().collect();
            trials.shuffle(&mut rng);
            let sizes = apportion(trials.len(), &fracs);
            let mut rest = trials.as_slice();
            for (part, size) in parts.iter_mut().zip(sizes) {
                let (head, tail) = rest.split_at(size);
                part.extend(head.iter().flatten());
                rest = tail;
            }
        }
    }

    for (name, part) in ["train", "validation", "test"].iter().zip(&parts) {
        if !part.iter().any(|&i| ds.labels[i] == Label::Contact) {
            return Err(Error::DegenerateSplit(format!("{name} split has no contact rows")));
        }
    }
    let [mut train, mut val, mut test] = parts;
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, val, test })
}

/// Splits into (train, validation, test); deterministic given the seed.
pub fn split(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let idx = split_indices(ds, spec)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.val), ds.subset(&idx.test)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold partition: each class is shuffled and dealt round-robin
/// across folds, continuing the deal from one class to the next so fold
/// sizes stay balanced.
pub fn stratified_kfold(ds: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::invalid("k", format!("need at least 2 folds, got {k}")));
    }
    let counts = ds.class_counts();
    for class in Label::CLASSES {
        if counts[class.index()] < k {
            return Err(Error::TooFewRows {
                class: class.name(),
                count: counts[class.index()],
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; ds.len()];
    let mut deal = 0usize;
    for class in Label::CLASSES {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = deal % k;
            deal += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(n_neg: usize, n_pos: usize) -> LabeledDataset {
        let n = n_neg + n_pos;
        let rows = (0..n).map(|i| [i as f64; 7]).collect();
        let labels = (0..n)
            .map(|i| if i < n_pos { Label::Contact } else { Label::NotContact })
            .collect();
        let trial_ids = (0..n).map(|i| format!("trial_{:02}", i % 20)).collect();
        LabeledDataset::new(rows, labels, trial_ids).unwrap()
    }

    fn matrix(times: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(times.to_vec(), vec![[0.0; 7]; times.len()]).unwrap()
    }

    #[test]
    fn no_contacts_means_all_negative() {
        let fm = matrix(&[0.0, 0.1, 0.2]);
        let ds = label_frames(&fm, &[], 0.018, "t").unwrap();
        assert!(ds.labels.iter().all(|&l| l == Label::NotContact));
    }

    #[test]
    fn window_around_contact_covers_about_ten_audio_frames() {
        let hop = 160.0 / 44_100.0;
        let times: Vec<f64> = (0..3000).map(|i| (i as f64 * 160.0 + 256.0) / 44_100.0).collect();
        let fm = matrix(&times);
        let ds = label_frames(&fm, &[5.0], 0.018, "t").unwrap();
        let n = ds.class_counts()[1];
        // Brute-force count of frame centers inside [5 - 0.018, 5 + 0.018].
        let expected = times.iter().filter(|&&t| t >= 5.0 - 0.018 && t <= 5.0 + 0.018).count();
        assert_eq!(n, expected);
        assert!((9..=10).contains(&n), "{n} rows at hop {hop}");
    }

    #[test]
    fn label_window_must_be_positive() {
        assert!(label_frames(&matrix(&[0.0]), &[0.0], 0.0, "t").is_err());
    }

    #[test]
    fn split_preserves_class_ratio() {
        let ds = dataset(990, 10);
        let (train, val, test) = split(&ds, &SplitSpec::default()).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (560, 190, 250));
        let c = [train.class_counts()[1], val.class_counts()[1], test.class_counts()[1]];
        assert!(c == [6, 2, 2] || c == [5, 2, 3], "{c:?}");
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let spec = SplitSpec {
            train_frac: 0.5,
            ..SplitSpec::default()
        };
        assert!(split(&dataset(90, 10), &spec).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let ds = dataset(500, 40);
        let spec = SplitSpec {
            seed: 99,
            ..SplitSpec::default()
        };
        assert_eq!(split_indices(&ds, &spec).unwrap(), split_indices(&ds, &spec).unwrap());
        let other = SplitSpec { seed: 100, ..spec };
        assert_ne!(split_indices(&ds, &spec).unwrap(), split_indices(&ds, &other).unwrap());
    }

    #[test]
    fn degenerate_split_is_an_error() {
        let err = split(&dataset(100, 2), &SplitSpec::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSplit(_)));
    }

    #[test]
    fn trial_level_split_keeps_trials_whole() {
        let ds = dataset(960, 40);
        let spec = SplitSpec {
            mode: SplitMode::TrialLevel,
            seed: 3,
            ..SplitSpec::default()
        };
        let idx = split_indices(&ds, &spec).unwrap();
        let trials = |v: &[usize]| -> std::collections::BTreeSet<String> {
            v.iter().map(|&i| ds.trial_ids[i].clone()).collect()
        };
        let (a, b, c) = (trials(&idx.train), trials(&idx.val), trials(&idx.test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        assert_eq!(a.len() + b.len() + c.len(), 20);
        assert_eq!(idx.train.len() + idx.val.len() + idx.test.len(), 1000);
    }

    #[test]
    fn kfold_exact_divisibility() {
        let folds = stratified_kfold(&dataset(90, 10), 10, 1).unwrap();
        assert_eq!(folds.len(), 10);
        let ds = dataset(90, 10);
        for f in &folds {
            let c = ds.subset(&f.test).class_counts();
            assert_eq!(c, [9, 1]);
        }
    }

    #[test]
    fn kfold_uneven_counts() {
        let ds = dataset(95, 12);
        for f in stratified_kfold(&ds, 10, 5).unwrap() {
            let c = ds.subset(&f.test).class_counts();
            assert!((1..=2).contains(&c[1]));
            assert!((9..=10).contains(&c[0]));
        }
    }

    #[test]
    fn kfold_rejects_small_classes() {
        assert!(matches!(
            stratified_kfold(&dataset(95, 9), 10, 0),
            Err(Error::TooFewRows { class: "contact", count: 9, k: 10 })
        ));
        assert!(stratified_kfold(&dataset(10, 10), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn kfold_test_folds_partition_the_rows(n_neg in 10usize..200, n_pos in 10usize..40, k in 2usize..10, seed in 0u64..1000) {
            let ds = dataset(n_neg, n_pos);
            let folds = stratified_kfold(&ds, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().copied()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
            for f in &folds {
                prop_assert_eq!(f.train.len() + f.test.len(), ds.len());
                let c = ds.subset(&f.test).class_counts();
                for class in 0..2 {
                    let ideal = ds.class_counts()[class] as f64 / k as f64;
                    prop_assert!((c[class] as f64 - ideal).abs() < 1.0);
                }
            }
        }

        #[test]
        fn split_assigns_every_row_once(n_neg in 50usize..400, n_pos in 8usize..40, seed in 0u64..1000) {
            let ds = dataset(n_neg, n_pos);
            let spec = SplitSpec { seed, ..SplitSpec::default() };
            let idx = split_indices(&ds, &spec).unwrap();
            let mut all: Vec<usize> = idx.train.iter().chain(&idx.val).chain(&idx.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
            let fracs = [0.56, 0.19, 0.25];
            for (part, frac) in [&idx.train, &idx.val, &idx.test].iter().zip(fracs) {
                let c = ds.subset(part).class_counts();
                for class in 0..2 {
                    let ideal = ds.class_counts()[class] as f64 * frac;
                    prop_assert!((c[class] as f64 - ideal).abs() < 1.0);
                }
            }
        }

        #[test]
        fn contact_count_grows_with_window(w1 in 0.001f64..0.1, w2 in 0.001f64..0.1) {
            let times: Vec<f64> = (0..500).map(|i| i as f64 * 0.004).collect();
            let fm = matrix(&times);
            let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
            let a = label_frames(&fm, &[0.5, 1.2], lo, "t").unwrap().class_counts()[1];
            let b = label_frames(&fm, &[0.5, 1.2], hi, "t").unwrap().class_counts()[1];
            prop_assert!(a <= b);
        }
    }
}
