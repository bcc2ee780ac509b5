//! Experimental protocols over explanations: top-k extraction, transfer of
//! top-k sets to an independent tree, and consistency sweeps over seeds,
//! hyperparameters and optimizers.

mod config;
mod sweep;
mod transfer;

use serde::{Deserialize, Serialize};

use crate::explain::{ImportanceMethod, ImportanceVector};
use crate::models::ModelKind;
use crate::{Error, Result};

pub use config::{execute_run, ConfigDelta, RunConfig, RunRecord, ShapSettings, Variation};
pub use sweep::{consistency_sweep, performance_delta_summary, ConsistencyReport, DeltaSummary};
pub use transfer::{cross_explain, cross_explain_features, TransferReport, MCC_TRANSFER_THRESHOLD};

/// Version tag carried by every serialized report.
pub const SCHEMA_VERSION: u32 = 1;

/// Where a top-k set came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopKSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<ImportanceMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyper: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKSet {
    pub k: usize,
    /// Descending by |score|.
    pub features: Vec<String>,
    pub scores: Vec<f64>,
    pub source: TopKSource,
    /// `k` exceeded the feature count and was reduced.
    pub clamped: bool,
    /// Every score was zero.
    pub degenerate: bool,
}

/// The `k` features with the largest |score|, ties to the lower index.
/// Zero-scored features are never selected, so fewer than `k` may come back.
pub fn top_k(v: &ImportanceVector, k: usize) -> Result<TopKSet> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let clamped = k > v.len();
    let ranked: Vec<usize> = v.ranking().into_iter().take(k.min(v.len())).collect();
    Ok(TopKSet {
        k: k.min(v.len()),
        features: ranked.iter().map(|&i| v.feature_names[i].clone()).collect(),
        scores: ranked.iter().map(|&i| v.scores[i]).collect(),
        source: TopKSource {
            method: Some(v.method),
            seed: v.metadata.seed,
            ..TopKSource::default()
        },
        clamped,
        degenerate: v.is_degenerate(),
    })
}

/// |A ∩ B| / |A ∪ B|; two empty sets count as identical.
pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    use std::collections::BTreeSet;
    let a: BTreeSet<&String> = a.iter().collect();
    let b: BTreeSet<&String> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}
