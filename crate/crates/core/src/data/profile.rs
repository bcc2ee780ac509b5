use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result, Scalar};

/// Bucketed majority-class share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImbalanceDegree {
    /// Majority share below 60%.
    Balanced,
    /// [60%, 75%)
    Mild,
    /// [75%, 85%)
    Moderate,
    /// [85%, 99%)
    Severe,
    /// 99% and above.
    Extreme,
}

impl ImbalanceDegree {
    /// Buckets an exact ratio `majority / total` using integer comparisons,
    /// so boundary shares such as 75/100 land in the upper bucket.
    pub fn from_counts(majority: u64, total: u64) -> Self {
        assert!(total > 0 && majority <= total);
        let at_least = |pct: u128| 100 * majority as u128 >= pct * total as u128;
        if at_least(99) {
            Self::Extreme
        } else if at_least(85) {
            Self::Severe
        } else if at_least(75) {
            Self::Moderate
        } else if at_least(60) {
            Self::Mild
        } else {
            Self::Balanced
        }
    }

    /// Buckets a majority fraction given as a float.
    pub fn from_fraction(m: f64) -> Self {
        if m >= 0.99 {
            Self::Extreme
        } else if m >= 0.85 {
            Self::Severe
        } else if m >= 0.75 {
            Self::Moderate
        } else if m >= 0.60 {
            Self::Mild
        } else {
            Self::Balanced
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Balanced => "Balanced",
            Self::Mild => "Mild",
            Self::Moderate => "Moderate",
            Self::Severe => "Severe",
            Self::Extreme => "Extreme",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceProfile {
    pub total: usize,
    pub positives: usize,
    pub majority_fraction: f64,
    pub degree: ImbalanceDegree,
}

impl ImbalanceProfile {
    pub fn from_counts(total: usize, positives: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        if positives > total {
            return Err(Error::InvalidParameter(format!(
                "{positives} positives out of {total} rows"
            )));
        }
        let majority = positives.max(total - positives);
        Ok(Self {
            total,
            positives,
            majority_fraction: majority as f64 / total as f64,
            degree: ImbalanceDegree::from_counts(majority as u64, total as u64),
        })
    }
}

pub fn profile_imbalance<F: Scalar>(d: &Dataset<F>) -> Result<ImbalanceProfile> {
    ImbalanceProfile::from_counts(d.n_rows(), d.positives())
}
