//! Binary confusion matrices and the six scores derived from them.
//!
//! MCC is extended to matrices where its denominator vanishes: +1 when only
//! TP or only TN is nonzero, -1 when only FP or only FN is nonzero, and 0 for
//! every other degenerate matrix.

mod probe;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use probe::{mcc_guarantee_probe, Counterexample};

/// Counts in the actual-by-predicted layout, attack = positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub const fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Swaps the roles of the two classes.
    pub fn swap_classes(&self) -> Self {
        Self::new(self.tn, self.fp, self.fn_, self.tp)
    }
}

/// Builds the confusion matrix of `y_pred` against `y_true`.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fn_ += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (t, p) => return Err(Error::NonBinaryLabel(if t > 1 { t } else { p })),
        }
    }
    Ok(cm)
}

/// Scores for one confusion matrix. Serializes to the six score keys only;
/// the degeneracy flags travel alongside in memory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub mcc: f64,
    #[serde(skip)]
    pub undefined: Undefined,
}

/// Which scores hit a zero denominator and were resolved by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Undefined {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
    /// Specificity (and hence balanced accuracy) had no negatives.
    pub specificity: bool,
    /// MCC came from the degenerate-case extension.
    pub mcc: bool,
}

impl MetricSet {
    pub fn get(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Accuracy => self.accuracy,
            MetricKind::BalancedAccuracy => self.balanced_accuracy,
            MetricKind::F1 => self.f1,
            MetricKind::Precision => self.precision,
            MetricKind::Recall => self.recall,
            MetricKind::Mcc => self.mcc,
        }
    }

    pub fn is_undefined(&self, kind: MetricKind) -> bool {
        let u = &self.undefined;
        match kind {
            MetricKind::Accuracy => false,
            MetricKind::BalancedAccuracy => u.recall || u.specificity,
            MetricKind::F1 => u.f1,
            MetricKind::Precision => u.precision,
            MetricKind::Recall => u.recall,
            MetricKind::Mcc => u.mcc,
        }
    }

    pub fn values(&self) -> [f64; 6] {
        MetricKind::ALL.map(|k| self.get(k))
    }

    pub fn from_values(v: [f64; 6]) -> Self {
        Self {
            accuracy: v[0],
            balanced_accuracy: v[1],
            f1: v[2],
            precision: v[3],
            recall: v[4],
            mcc: v[5],
            undefined: Undefined::default(),
        }
    }
}

/// Selector over the six scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    BalancedAccuracy,
    F1,
    Precision,
    Recall,
    #[default]
    Mcc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Accuracy,
        MetricKind::BalancedAccuracy,
        MetricKind::F1,
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::Mcc,
    ];

    /// Accuracy, F1, precision and recall.
    pub const STANDARD: [MetricKind; 4] = [
        MetricKind::Accuracy,
        MetricKind::F1,
        MetricKind::Precision,
        MetricKind::Recall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::BalancedAccuracy => "balanced_accuracy",
            MetricKind::F1 => "f1",
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::Mcc => "mcc",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "Accuracy",
            MetricKind::BalancedAccuracy => "BA",
            MetricKind::F1 => "F1",
            MetricKind::Precision => "Precision",
            MetricKind::Recall => "Recall",
            MetricKind::Mcc => "MCC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || k.label().to_ascii_lowercase() == s)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Extended MCC. The numerator is exact in 128-bit integers; the denominator
/// is a product of four square roots so it cannot overflow.
pub fn mcc(cm: &ConfusionMatrix) -> (f64, bool) {
    let ConfusionMatrix { tp, fn_, fp, tn } = *cm;
    let margins = [tp + fp, tp + fn_, fp + tn, tn + fn_];
    if margins.contains(&0) {
        let nonzero = [tp, fn_, fp, tn].iter().filter(|&&v| v > 0).count();
        let v = if nonzero == 1 && (tp > 0 || tn > 0) {
            1.0
        } else if nonzero == 1 {
            -1.0
        } else {
            0.0
        };
        return (v, true);
    }
    let num = tp as i128 * tn as i128 - fp as i128 * fn_ as i128;
    let den = margins.iter().map(|&m| (m as f64).sqrt()).product::<f64>();
    ((num as f64 / den).clamp(-1.0, 1.0), false)
}

/// Computes all six scores. Undefined precision, recall, F1 or specificity
/// resolve to 0 and are flagged.
pub fn score(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::ZeroMatrix);
    }
    let ConfusionMatrix { tp, fn_, fp, tn } = *cm;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    let balanced_accuracy = 0.5 * (recall.unwrap_or(0.0) + specificity.unwrap_or(0.0));
    let (mcc, mcc_extended) = mcc(cm);
    Ok(MetricSet {
        accuracy: (tp + tn) as f64 / total as f64,
        balanced_accuracy,
        f1: f1.unwrap_or(0.0),
        precision: precision.unwrap_or(0.0),
        recall: recall.unwrap_or(0.0),
        mcc,
        undefined: Undefined {
            precision: precision.is_none(),
            recall: recall.is_none(),
            f1: f1.is_none(),
            specificity: specificity.is_none(),
            mcc: mcc_extended,
        },
    })
}

/// Share of actual attacks that were missed, `fn / (tp + fn)`. This is the
/// quantity reported as the false positive rate when the benign class is the
/// one being detected.
pub fn false_positive_rate_benign(cm: &ConfusionMatrix) -> Result<f64> {
    ratio(cm.fn_, cm.tp + cm.fn_).ok_or(Error::ZeroDenominator("false positive rate"))
}

/// Mean and population variance of each score across repeated runs.
pub fn mean_and_variance(sets: &[MetricSet]) -> (MetricSet, MetricSet) {
    let n = sets.len().max(1) as f64;
    let mean = MetricKind::ALL.map(|k| sets.iter().map(|s| s.get(k)).sum::<f64>() / n);
    let var = std::array::from_fn(|i| {
        let k = MetricKind::ALL[i];
        sets.iter()
            .map(|s| (s.get(k) - mean[i]).powi(2))
            .sum::<f64>()
            / n
    });
    (MetricSet::from_values(mean), MetricSet::from_values(var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_cells() {
        assert_eq!(
            confusion(&[1, 0], &[1, 0]).unwrap(),
            ConfusionMatrix::new(1, 0, 0, 1)
        );
        assert_eq!(
            confusion(&[1, 1], &[0, 0]).unwrap(),
            ConfusionMatrix::new(0, 2, 0, 0)
        );
        assert_eq!(
            confusion(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap(),
            ConfusionMatrix::new(1, 1, 1, 1)
        );
    }

    #[test]
    fn confusion_errors() {
        assert!(matches!(
            confusion(&[1], &[1, 0]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(matches!(confusion(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(
            confusion(&[2], &[1]),
            Err(Error::NonBinaryLabel(2))
        ));
        assert!(matches!(
            confusion(&[1], &[3]),
            Err(Error::NonBinaryLabel(3))
        ));
    }

    #[test]
    fn reported_dnn_matrix() {
        let cm = ConfusionMatrix::new(504, 131, 27, 100508);
        let m = score(&cm).unwrap();
        assert!((m.accuracy - 0.998_438_3).abs() < 1e-6);
        assert!((m.balanced_accuracy - 0.8967).abs() < 1e-4);
        assert!((m.mcc - 0.8672).abs() < 1e-4);
        // full-precision values printed alongside the matrix
        assert!((m.accuracy - 0.998_438_272_215_083_5).abs() < 1e-15);
        assert!((m.balanced_accuracy - 0.896_716_112_107_312_5).abs() < 1e-12);
        assert!((m.mcc - 0.867_211_286_925_343_3).abs() < 1e-12);
        assert!((false_positive_rate_benign(&cm).unwrap() - 0.206).abs() < 1e-3);
    }

    #[test]
    fn mcc_extension() {
        let mcc_of = |tp, fn_, fp, tn| score(&ConfusionMatrix::new(tp, fn_, fp, tn)).unwrap().mcc;
        assert_eq!(mcc_of(5, 0, 0, 0), 1.0);
        assert_eq!(mcc_of(0, 3, 0, 0), -1.0);
        assert_eq!(mcc_of(2, 2, 0, 0), 0.0);
        assert_eq!(mcc_of(0, 0, 4, 4), 0.0);
        assert!(score(&ConfusionMatrix::default()).is_err());
        assert!(
            score(&ConfusionMatrix::new(5, 0, 0, 0))
                .unwrap()
                .undefined
                .mcc
        );
    }

    #[test]
    fn undefined_fields_flagged() {
        let m = score(&ConfusionMatrix::new(0, 0, 0, 7)).unwrap();
        assert!(m.undefined.precision && m.undefined.recall && m.undefined.f1);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.is_undefined(MetricKind::BalancedAccuracy));
        assert!(!m.is_undefined(MetricKind::Accuracy));
    }

    #[test]
    fn fpr_examples() {
        assert_eq!(
            false_positive_rate_benign(&ConfusionMatrix::new(10, 0, 5, 5)).unwrap(),
            0.0
        );
        assert_eq!(
            false_positive_rate_benign(&ConfusionMatrix::new(0, 10, 0, 0)).unwrap(),
            1.0
        );
        assert!(false_positive_rate_benign(&ConfusionMatrix::new(0, 0, 3, 3)).is_err());
    }

    #[test]
    fn no_overflow_on_large_counts() {
        let big = 1u64 << 31;
        let m = score(&ConfusionMatrix::new(big, 1, 1, big)).unwrap();
        assert!(m.mcc > 0.999_999 && m.mcc <= 1.0);
    }

    #[test]
    fn metric_json_has_six_keys() {
        let m = score(&ConfusionMatrix::new(3, 1, 1, 3)).unwrap();
        let v = serde_json::to_value(m).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "accuracy",
                "balanced_accuracy",
                "f1",
                "mcc",
                "precision",
                "recall"
            ]
        );
    }

    proptest! {
        #[test]
        fn ranges(tp in 0u64..500, fn_ in 0u64..500, fp in 0u64..500, tn in 0u64..500) {
            prop_assume!(tp + fn_ + fp + tn > 0);
            let m = score(&ConfusionMatrix::new(tp, fn_, fp, tn)).unwrap();
            for v in [m.accuracy, m.balanced_accuracy, m.f1, m.precision, m.recall] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((-1.0..=1.0).contains(&m.mcc));
        }

        #[test]
        fn class_swap(tp in 1u64..10_000, fn_ in 1u64..10_000, fp in 1u64..10_000, tn in 1u64..10_000) {
            let cm = ConfusionMatrix::new(tp, fn_, fp, tn);
            let (a, b) = (score(&cm).unwrap(), score(&cm.swap_classes()).unwrap());
            prop_assert_eq!(a.accuracy, b.accuracy);
            prop_assert!((a.mcc - b.mcc).abs() <= 1e-12);
        }

        #[test]
        fn independence_gives_zero(a in 1u64..50, b in 1u64..50, c in 1u64..50, d in 1u64..50) {
            // tp*tn == fp*fn by construction
            let cm = ConfusionMatrix::new(a * c, a * d, b * c, b * d);
            prop_assert!(score(&cm).unwrap().mcc.abs() <= 1e-12);
        }
    }
}
