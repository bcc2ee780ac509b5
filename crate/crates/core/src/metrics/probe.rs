use serde::{Deserialize, Serialize};

use super::{score, ConfusionMatrix, MetricKind, MetricSet};

/// A matrix that clears the MCC gate while some other score does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub matrix: ConfusionMatrix,
    pub metrics: MetricSet,
    /// Scores that fell below the threshold.
    pub failing: Vec<MetricKind>,
}

/// Exhaustively searches `tp, fn, fp <= max_small` and `tn` from `tn_ladder`
/// for matrices with MCC at or above `mcc_threshold` while accuracy,
/// balanced accuracy, F1, precision or recall falls below it. Scores that
/// are undefined for a matrix (zero denominator) are not counted as failing.
///
/// Results are ordered by `tn` ladder position, then `tp`, `fn`, `fp`.
pub fn mcc_guarantee_probe(
    mcc_threshold: f64,
    max_small: u64,
    tn_ladder: &[u64],
) -> Vec<Counterexample> {
    let mut out = Vec::new();
    for &tn in tn_ladder {
        for tp in 0..=max_small {
            for fn_ in 0..=max_small {
                for fp in 0..=max_small {
                    let matrix = ConfusionMatrix::new(tp, fn_, fp, tn);
                    let Ok(metrics) = score(&matrix) else {
                        continue;
                    };
                    if metrics.mcc < mcc_threshold {
                        continue;
                    }
                    let failing: Vec<MetricKind> = MetricKind::ALL
                        .into_iter()
                        .filter(|&k| {
                            k != MetricKind::Mcc
                                && !metrics.is_undefined(k)
                                && metrics.get(k) < mcc_threshold
                        })
                        .collect();
                    if !failing.is_empty() {
                        out.push(Counterexample {
                            matrix,
                            metrics,
                            failing,
                        });
                    }
                }
            }
        }
    }
    out
}
