//! Evaluation protocol: confusion matrix, per-class report, ROC/AUC,
//! stratified cross-validation and the `n_estimators` sweep.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{self, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::forest::{self, ForestConfig, RandomForestModel};

/// 2×2 counts; rows are the true class, columns the predicted class, both
/// in `[not_contact, contact]` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; 2]; 2]);

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.0[0][0] + self.0[1][1]) as f64 / total as f64
    }

    pub fn get(&self, truth: Label, predicted: Label) -> u64 {
        self.0[truth.index()][predicted.index()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted,not_contact,contact\n");
        for class in Label::CLASSES {
            let r = self.0[class.index()];
            out.push_str(&format!("{},{},{}\n", class, r[0], r[1]));
        }
        out
    }
}

pub fn confusion_matrix(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut m = [[0u64; 2]; 2];
    for (t, p) in y_true.iter().zip(y_pred) {
        m[t.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when any of the ratios had a zero denominator and was reported
    /// as 0.
    pub ill_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Indexed by class: `[not_contact, contact]`.
    pub classes: [ClassMetrics; 2],
    pub weighted: ClassMetrics,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn classification_report(cm: &ConfusionMatrix) -> ClassificationReport {
    let m = cm.0;
    let per_class = |c: usize| {
        let o = 1 - c;
        let tp = m[c][c];
        let fp = m[o][c];
        let fn_ = m[c][o];
        let (precision, p_bad) = ratio(tp, tp + fp);
        let (recall, r_bad) = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: tp + fn_,
            ill_defined: p_bad || r_bad || precision + recall == 0.0,
        }
    };
    let classes = [per_class(0), per_class(1)];
    let support: u64 = classes.iter().map(|c| c.support).sum();
    let avg = |f: fn(&ClassMetrics) -> f64| {
        if support == 0 {
            0.0
        } else {
            classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / support as f64
        }
    };
    let weighted = ClassMetrics {
        precision: avg(|c| c.precision),
        recall: avg(|c| c.recall),
        f1: avg(|c| c.f1),
        support,
        ill_defined: classes.iter().any(|c| c.ill_defined),
    };
    ClassificationReport {
        classes,
        weighted,
        accuracy: cm.accuracy(),
    }
}

impl ClassificationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,f1_score,support\n");
        let rows = [
            (Label::NotContact.name(), &self.classes[0]),
            (Label::Contact.name(), &self.classes[1]),
            ("weighted_average", &self.weighted),
        ];
        for (name, c) in rows {
            out.push_str(&format!(
                "{name},{},{},{},{}\n",
                c.precision, c.recall, c.f1, c.support
            ));
        }
        out
    }
}

impl fmt::Display for ClassificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>18} {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support")?;
        for class in Label::CLASSES {
            let c = &self.classes[class.index()];
            writeln!(
                f,
                "{:>18} {:>9.2} {:>9.2} {:>9.2} {:>9}{}",
                class.name().replace('_', " "),
                c.precision,
                c.recall,
                c.f1,
                c.support,
                if c.ill_defined { "  (ill-defined)" } else { "" }
            )?;
        }
        writeln!(f)?;
        let w = &self.weighted;
        writeln!(
            f,
            "{:>18} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            "weighted average", w.precision, w.recall, w.f1, w.support
        )?;
        write!(f, "{:>18} {:>9.5}", "accuracy", self.accuracy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Rows with score >= threshold are called contact.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

/// ROC over every distinct score, contact as the positive class, with the
/// area by the trapezoidal rule.
pub fn roc_auc(y_true: &[Label], scores: &[f64]) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores", "NaN score"));
    }
    let pos = y_true.iter().filter(|&&l| l == Label::Contact).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            match y_true[order[i]] {
                Label::Contact => tp += 1,
                Label::NotContact => fp += 1,
            }
            i += 1;
        }
        let prev = *points.last().unwrap();
        let p = RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Ok(RocCurve { points, auc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
}

impl CrossValidation {
    pub fn from_folds(fold_accuracies: Vec<f64>) -> Self {
        let n = fold_accuracies.len() as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / n;
        let var = fold_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        Self {
            fold_accuracies,
            mean,
            std: var.sqrt(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,accuracy\n");
        for (i, a) in self.fold_accuracies.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, a));
        }
        out.push_str(&format!("mean,{}\nstd,{}\n", self.mean, self.std));
        out
    }
}

pub fn accuracy(y_true: &[Label], y_pred: &[Label]) -> Result<f64> {
    Ok(confusion_matrix(y_true, y_pred)?.accuracy())
}

/// Stratified k-fold cross-validation of a forest configuration.
pub fn cross_validate(ds: &LabeledDataset, cfg: &ForestConfig, k: usize, seed: u64) -> Result<CrossValidation> {
    let folds = dataset::stratified_kfold(ds, k, seed)?;
    let mut scores = Vec::with_capacity(k);
    for fold in &folds {
        let train = ds.subset(&fold.train);
        let test = ds.subset(&fold.test);
        let model = forest::train(&train, cfg)?;
        let pred = model.predict_batch(&test.rows)?;
        scores.push(accuracy(&test.labels, &pred)?);
    }
    Ok(CrossValidation::from_folds(scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_estimators: usize,
    pub accuracy: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub selected: usize,
}

impl SweepTable {
    /// Highest AUC; ties go to the smaller forest.
    pub fn select(rows: &[SweepRow]) -> Option<usize> {
        rows.iter()
            .fold(None::<&SweepRow>, |best, r| match best {
                Some(b) if b.auc > r.auc || (b.auc == r.auc && b.n_estimators <= r.n_estimators) => Some(b),
                _ => Some(r),
            })
            .map(|r| r.n_estimators)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_estimators,accuracy,auc,selected\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n_estimators,
                r.accuracy,
                r.auc,
                u8::from(r.n_estimators == self.selected)
            ));
        }
        out
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12} {:>9} {:>9}", "n_estimators", "accuracy", "AUC")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>12} {:>9.5} {:>9.5}{}",
                r.n_estimators,
                r.accuracy,
                r.auc,
                if r.n_estimators == self.selected { "  <- selected" } else { "" }
            )?;
        }
        Ok(())
    }
}

/// Trains one forest per `n_estimators` in `range` on `train`, scores it on
/// `val` and selects the size with the best validation AUC.
pub fn sweep_n_estimators(
    train: &LabeledDataset,
    val: &LabeledDataset,
    range: std::ops::RangeInclusive<usize>,
    base: &ForestConfig,
) -> Result<SweepTable> {
    if range.is_empty() {
        return Err(Error::invalid("sweep", "empty n_estimators range"));
    }
    let mut rows = Vec::new();
    for n in range {
        let cfg = ForestConfig {
            n_estimators: n,
            ..*base
        };
        let model = forest::train(train, &cfg)?;
        let scores = model.contact_scores(&val.rows)?;
        let pred = model.predict_batch(&val.rows)?;
        rows.push(SweepRow {
            n_estimators: n,
            accuracy: accuracy(&val.labels, &pred)?,
            auc: roc_auc(&val.labels, &scores)?.auc,
        });
    }
    let selected = SweepTable::select(&rows).expect("non-empty sweep");
    Ok(SweepTable { rows, selected })
}

/// Everything reported about a model on one labeled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
    pub roc: RocCurve,
    pub accuracy: f64,
    pub auc: f64,
}

pub fn evaluate(model: &RandomForestModel, ds: &LabeledDataset) -> Result<EvaluationReport> {
    let scores = model.contact_scores(&ds.rows)?;
    let pred = model.predict_batch(&ds.rows)?;
    let confusion = confusion_matrix(&ds.labels, &pred)?;
    let roc = roc_auc(&ds.labels, &scores)?;
    Ok(EvaluationReport {
        report: classification_report(&confusion),
        accuracy: confusion.accuracy(),
        auc: roc.auc,
        confusion,
        roc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Contact as P, NotContact as N};

    fn repeat(pairs: &[(Label, usize)]) -> Vec<Label> {
        pairs.iter().flat_map(|&(l, n)| std::iter::repeat(l).take(n)).collect()
    }

    #[test]
    fn perfect_and_all_negative_confusions() {
        let truth = repeat(&[(N, 90), (P, 10)]);
        assert_eq!(confusion_matrix(&truth, &truth).unwrap().0, [[90, 0], [0, 10]]);
        let pred = repeat(&[(N, 100)]);
        let cm = confusion_matrix(&truth, &pred).unwrap();
        assert_eq!(cm.0, [[90, 0], [10, 0]]);
        let r = classification_report(&cm);
        assert_eq!(r.classes[1].recall, 0.0);
        assert_eq!(r.classes[1].precision, 0.0);
        assert!(r.classes[1].ill_defined);
        assert!(!r.classes[0].ill_defined);
    }

    #[test]
    fn length_mismatch() {
        assert!(confusion_matrix(&[N], &[N, P]).is_err());
    }

    #[test]
    fn report_on_hand_case() {
        let r = classification_report(&ConfusionMatrix([[85, 5], [2, 8]]));
        let c = r.classes[1];
        assert!((c.precision - 8.0 / 13.0).abs() < 1e-12);
        assert!((c.recall - 0.8).abs() < 1e-12);
        // 2 * (8/13) * 0.8 / (8/13 + 0.8) = 16/23
        assert!((c.f1 - 16.0 / 23.0).abs() < 1e-12);
        assert_eq!(c.support, 10);
        assert_eq!(r.classes[0].support, 90);
        assert!((r.accuracy - 0.93).abs() < 1e-12);
        let wp = (90.0 * 85.0 / 87.0 + 10.0 * 8.0 / 13.0) / 100.0;
        assert!((r.weighted.precision - wp).abs() < 1e-12);
    }

    #[test]
    fn report_reproduces_published_rounding() {
        // Counts consistent with 146 contact / 81,368 not-contact test rows.
        let r = classification_report(&ConfusionMatrix([[81_361, 7], [4, 142]]));
        let round2 = |x: f64| (x * 100.0).round() / 100.0;
        let c = r.classes[1];
        assert_eq!((round2(c.precision), round2(c.recall), round2(c.f1)), (0.95, 0.97, 0.96));
        assert_eq!(c.support, 146);
        let n = r.classes[0];
        assert_eq!((round2(n.precision), round2(n.recall), round2(n.f1)), (1.0, 1.0, 1.0));
        assert_eq!(r.weighted.support, 81_514);
        assert_eq!(round2(r.weighted.f1), 1.0);
    }

    #[test]
    fn auc_edge_cases() {
        let y = [N, N, P, P];
        assert_eq!(roc_auc(&y, &[0.1, 0.2, 0.8, 0.9]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&y, &[0.5; 4]).unwrap().auc, 0.5);
        assert_eq!(roc_auc(&y, &[0.9, 0.8, 0.2, 0.1]).unwrap().auc, 0.0);
        assert!(matches!(roc_auc(&[P, P], &[0.1, 0.2]), Err(Error::SingleClass)));
    }

    #[test]
    fn auc_six_sample_hand_case() {
        // Positives 0.9, 0.4, 0.6; negatives 0.5, 0.4, 0.1.
        // Pairs won: 0.9 beats 3, 0.6 beats 3, 0.4 beats 1 and ties 1 -> 7.5 / 9.
        let y = [P, N, P, N, P, N];
        let s = [0.9, 0.5, 0.4, 0.4, 0.6, 0.1];
        let roc = roc_auc(&y, &s).unwrap();
        assert!((roc.auc - 7.5 / 9.0).abs() < 1e-12);
        assert_eq!(roc.points.first().unwrap().fpr, 0.0);
        assert_eq!(roc.points.last().unwrap().tpr, 1.0);
        assert_eq!(roc.points.len(), 6);
    }

    #[test]
    fn population_std() {
        let cv = CrossValidation::from_folds(vec![1.0, 0.0]);
        assert_eq!(cv.mean, 0.5);
        assert_eq!(cv.std, 0.5);
    }

    #[test]
    fn sweep_selection_prefers_smaller_on_ties() {
        let rows = [
            SweepRow { n_estimators: 3, accuracy: 0.9, auc: 0.99 },
            SweepRow { n_estimators: 4, accuracy: 0.95, auc: 0.995 },
            SweepRow { n_estimators: 5, accuracy: 0.97, auc: 0.995 },
        ];
        assert_eq!(SweepTable::select(&rows), Some(4));
        assert_eq!(SweepTable::select(&rows[..1]), Some(3));
        assert_eq!(SweepTable::select(&[]), None);
    }

    #[test]
    fn csv_outputs_have_headers() {
        let cm = ConfusionMatrix([[3, 1], [0, 2]]);
        assert!(cm.to_csv().starts_with("true\\predicted,not_contact,contact\nnot_contact,3,1\n"));
        let r = classification_report(&cm);
        assert!(r.to_csv().starts_with("class,precision,recall,f1_score,support\n"));
        assert!(r.to_string().contains("weighted average"));
    }
}
