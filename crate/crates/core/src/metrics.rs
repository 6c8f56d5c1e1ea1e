//! Confusion matrix, derived rates, ROC/AUC and the probability histogram.
//!
//! Scores are probabilities of the star class. A score at or above the
//! threshold predicts a star. Which class counts as "positive" is explicit:
//! with `Label::Star` a false positive is an artefact called a star, with
//! `Label::Artefact` precision and recall describe artefact retrieval.
//!
//! Rates with a zero denominator are defined as 0 and flagged in
//! [`MetricsReport::warnings`].

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub positive: Label,
}

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some((i, s)) = scores.iter().enumerate().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
        return Err(Error::Invalid(format!("score {s} at index {i} is outside [0, 1]")));
    }
    Ok(())
}

pub fn confusion(scores: &[f64], labels: &[Label], threshold: f64, positive: Label) -> Result<ConfusionMatrix> {
    check_inputs(scores, labels)?;
    let mut cm = ConfusionMatrix::from_counts(0, 0, 0, 0, positive);
    for (&s, &label) in scores.iter().zip(labels) {
        let predicted = if s >= threshold { Label::Star } else { Label::Artefact };
        match (predicted == positive, label == positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// `None` when the denominator is zero.
fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64, positive: Label) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_, positive }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same predictions counted with the other class as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
            positive: self.positive.other(),
        }
    }

    pub fn try_precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn try_recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn try_f1(&self) -> Option<f64> {
        let (p, r) = (self.try_precision()?, self.try_recall()?);
        (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
    }

    pub fn try_mcc(&self) -> Option<f64> {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        (den > 0.0).then(|| (tp * tn - fp * fn_) / den.sqrt())
    }

    pub fn try_fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn try_fnr(&self) -> Option<f64> {
        ratio(self.fn_, self.fn_ + self.tp)
    }

    pub fn try_accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        self.try_precision().unwrap_or(0.0)
    }

    pub fn recall(&self) -> f64 {
        self.try_recall().unwrap_or(0.0)
    }

    pub fn f1(&self) -> f64 {
        self.try_f1().unwrap_or(0.0)
    }

    pub fn mcc(&self) -> f64 {
        self.try_mcc().unwrap_or(0.0)
    }

    pub fn fpr(&self) -> f64 {
        self.try_fpr().unwrap_or(0.0)
    }

    pub fn fnr(&self) -> f64 {
        self.try_fnr().unwrap_or(0.0)
    }

    pub fn accuracy(&self) -> f64 {
        self.try_accuracy().unwrap_or(0.0)
    }
}

pub fn precision(cm: &ConfusionMatrix) -> f64 {
    cm.precision()
}

pub fn recall(cm: &ConfusionMatrix) -> f64 {
    cm.recall()
}

pub fn f1(cm: &ConfusionMatrix) -> f64 {
    cm.f1()
}

pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    cm.mcc()
}

pub fn fpr(cm: &ConfusionMatrix) -> f64 {
    cm.fpr()
}

pub fn fnr(cm: &ConfusionMatrix) -> f64 {
    cm.fnr()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC with stars as the positive class: thresholds +∞, every distinct score
/// in descending order, then −∞.
///
/// The area is accumulated from integer counts as Σ Δfp·(tp_prev + tp)/2 and
/// divided once by P·N, so it equals the Mann–Whitney statistic with ties
/// counted half.
pub fn roc(scores: &[f64], labels: &[Label]) -> Result<(Vec<RocPoint>, f64)> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l == Label::Star).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Invalid("ROC is undefined when only one class is present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let point = |tp: u64, fp: u64, threshold: f64| RocPoint {
        fpr: fp as f64 / neg as f64,
        tpr: tp as f64 / pos as f64,
        threshold,
    };
    let mut points = vec![point(0, 0, f64::INFINITY)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut area2 = 0u128; // twice the area in count units
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == Label::Star {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - fp0) as u128 * (tp0 + tp) as u128;
        points.push(point(tp, fp, s));
    }
    points.push(point(tp, fp, f64::NEG_INFINITY));
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok((points, auc))
}

pub const HISTOGRAM_BINS: usize = 10;

/// Counts in bins [0,0.1), …, [0.8,0.9), [0.9,1.0].
pub fn probability_histogram(scores: &[f64]) -> [u64; HISTOGRAM_BINS] {
    let mut bins = [0u64; HISTOGRAM_BINS];
    for &s in scores {
        // Compare against exact decimal edges so 0.3 lands in [0.3, 0.4).
        let b = (0..HISTOGRAM_BINS).rev().find(|&b| s >= b as f64 / 10.0).unwrap_or(0);
        bins[b] += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub accuracy: f64,
    /// NaN when only one class is present.
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub histogram: [u64; HISTOGRAM_BINS],
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn compute(scores: &[f64], labels: &[Label], threshold: f64, positive: Label) -> Result<Self> {
        let cm = confusion(scores, labels, threshold, positive)?;
        let mut warnings = Vec::new();
        let mut take = |name: &str, v: Option<f64>| {
            v.unwrap_or_else(|| {
                warnings.push(format!("{name}: zero denominator, reported as 0"));
                0.0
            })
        };
        let precision = take("precision", cm.try_precision());
        let recall = take("recall", cm.try_recall());
        let f1 = take("f1", cm.try_f1());
        let mcc = take("mcc", cm.try_mcc());
        let fpr = take("fpr", cm.try_fpr());
        let fnr = take("fnr", cm.try_fnr());
        let accuracy = take("accuracy", cm.try_accuracy());
        let (roc_points, auc) = match roc(scores, labels) {
            Ok(r) => r,
            Err(_) => {
                warnings.push("auc: only one class present, ROC undefined".into());
                (Vec::new(), f64::NAN)
            }
        };
        Ok(MetricsReport {
            confusion: cm,
            threshold,
            precision,
            recall,
            f1,
            mcc,
            fpr,
            fnr,
            accuracy,
            auc,
            roc: roc_points,
            histogram: probability_histogram(scores),
            warnings,
        })
    }

    /// `key=value` lines; every key carries `prefix`.
    pub fn to_text(&self, prefix: &str) -> String {
        let cm = &self.confusion;
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{prefix}{k}={v}\n"));
        line("positive_class", cm.positive.to_string());
        line("threshold", self.threshold.to_string());
        line("samples", cm.total().to_string());
        line("tp", cm.tp.to_string());
        line("fp", cm.fp.to_string());
        line("tn", cm.tn.to_string());
        line("fn", cm.fn_.to_string());
        for (k, v) in [
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("mcc", self.mcc),
            ("fpr", self.fpr),
            ("fnr", self.fnr),
            ("accuracy", self.accuracy),
            ("auc", self.auc),
        ] {
            line(k, format!("{v:.6}"));
        }
        for w in &self.warnings {
            line("warning", w.clone());
        }
        out
    }

    pub fn roc_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.roc {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for (b, c) in self.histogram.iter().enumerate() {
            out.push_str(&format!("{:.1},{:.1},{c}\n", b as f64 / 10.0, (b + 1) as f64 / 10.0));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(170, 5, 175, 3, Label::Star)
    }

    #[test]
    fn published_counts() {
        let cm = fig4();
        assert!((cm.precision() - 170.0 / 175.0).abs() < 1e-12);
        assert!((cm.fpr() - 5.0 / 180.0).abs() < 1e-12);
        assert!((cm.fnr() - 3.0 / 173.0).abs() < 1e-12);
        assert!((cm.mcc() - 0.954_73).abs() < 1e-4);
        let a = cm.swapped();
        assert!((a.precision() - 175.0 / 178.0).abs() < 1e-12);
        assert!((a.recall() - 175.0 / 180.0).abs() < 1e-12);
        assert_eq!(a.mcc(), cm.mcc());
    }

    #[test]
    fn confusion_follows_positive_class() {
        let s = [0.9, 0.2, 0.5, 0.49];
        let l = [Label::Star, Label::Star, Label::Artefact, Label::Artefact];
        let star = confusion(&s, &l, 0.5, Label::Star).unwrap();
        assert_eq!((star.tp, star.fp, star.tn, star.fn_), (1, 1, 1, 1));
        let art = confusion(&s, &l, 0.5, Label::Artefact).unwrap();
        assert_eq!(art, star.swapped());
        assert!(confusion(&s, &l[..3], 0.5, Label::Star).is_err());
        assert!(confusion(&[1.5], &[Label::Star], 0.5, Label::Star).is_err());
    }

    #[test]
    fn perfect_and_degenerate() {
        let cm = ConfusionMatrix::from_counts(4, 0, 6, 0, Label::Star);
        for v in [cm.precision(), cm.recall(), cm.f1(), cm.mcc()] {
            assert_eq!(v, 1.0);
        }
        let r = MetricsReport::compute(&[0.9, 0.8], &[Label::Star; 2], 0.5, Label::Star).unwrap();
        assert_eq!(r.fpr, 0.0);
        assert_eq!(r.mcc, 0.0);
        assert!(r.auc.is_nan());
        assert!(r.warnings.iter().any(|w| w.starts_with("fpr")));
    }

    #[test]
    fn roc_edges() {
        let l = [Label::Star, Label::Artefact, Label::Star, Label::Artefact];
        let (_, auc) = roc(&[0.9, 0.1, 0.8, 0.2], &l).unwrap();
        assert_eq!(auc, 1.0);
        let (pts, auc) = roc(&[0.5; 4], &l).unwrap();
        assert_eq!(auc, 0.5);
        assert_eq!(pts.len(), 3);
        assert!(roc(&[0.5], &[Label::Star]).is_err());
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(probability_histogram(&[]), [0; 10]);
        let h = probability_histogram(&[0.0, 0.1, 0.3, 0.95, 1.0]);
        assert_eq!(h, [1, 1, 0, 1, 0, 0, 0, 0, 0, 2]);
    }

    #[test]
    fn report_keys() {
        let l = [Label::Star, Label::Artefact];
        let text = MetricsReport::compute(&[0.9, 0.1], &l, 0.5, Label::Star).unwrap().to_text("");
        for k in ["precision=", "recall=", "f1=", "mcc=", "fpr=", "fnr=", "auc="] {
            assert!(text.lines().any(|line| line.starts_with(k)), "{k}");
        }
    }
}
