use serde::{Deserialize, Serialize};

use super::{execute_run, RunConfig, TopKSet, SCHEMA_VERSION};
use crate::data::split;
use crate::metrics::{mean_and_variance, MetricSet};
use crate::models::{fit_model, ModelSpec, TreeParams};
use crate::rng::derive_seed;
use crate::{Dataset, Error, Result, Scalar};

/// Mean receiver MCC at or above which a feature set is transferable.
pub const MCC_TRANSFER_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub schema_version: u32,
    pub source: TopKSet,
    /// Mean over repeats.
    pub receiver_scores: MetricSet,
    /// Population variance over repeats.
    pub receiver_variance: MetricSet,
    pub repeats: usize,
    pub threshold: f64,
    pub transferable: bool,
}

impl TransferReport {
    /// Recomputes the flag from the stored mean.
    pub fn is_transferable(&self) -> bool {
        self.receiver_scores.mcc >= self.threshold
    }
}

/// Explains `source` on `d`, then checks whether its top-k features alone
/// let a default decision tree reach the MCC threshold.
pub fn cross_explain<F: Scalar>(
    d: &Dataset<F>,
    source: &RunConfig,
    repeats: usize,
) -> Result<TransferReport> {
    let run = execute_run(d, source, "source")?;
    if run.top_k.features.is_empty() {
        return Err(Error::NoInformativeFeatures);
    }
    let mut report = cross_explain_features(
        d,
        &run.top_k.features,
        source.seed,
        repeats,
        source.test_fraction,
    )?;
    report.source = run.top_k;
    Ok(report)
}

/// Receiver half of [`cross_explain`] for an arbitrary feature set.
/// Repeat `r` splits with `derive_seed(seed, r)`.
pub fn cross_explain_features<F: Scalar>(
    d: &Dataset<F>,
    features: &[String],
    seed: u64,
    repeats: usize,
    test_fraction: f64,
) -> Result<TransferReport> {
    if features.is_empty() {
        return Err(Error::NoInformativeFeatures);
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    let sub = d.select_named(features)?;
    let receiver = ModelSpec::DecisionTree(TreeParams::default());
    let scores = (0..repeats as u64)
        .map(|r| {
            let s = derive_seed(seed, r);
            let (train, test) = split(&sub, test_fraction, s)?;
            fit_model(&receiver, &train, s)?.evaluate(&test)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, var) = mean_and_variance(&scores);
    Ok(TransferReport {
        schema_version: SCHEMA_VERSION,
        source: TopKSet {
            k: features.len(),
            features: features.to_vec(),
            scores: Vec::new(),
            source: Default::default(),
            clamped: false,
            degenerate: false,
        },
        receiver_scores: mean,
        receiver_variance: var,
        repeats,
        threshold: MCC_TRANSFER_THRESHOLD,
        transferable: mean.mcc >= MCC_TRANSFER_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::explain::ImportanceMethod;
    use crate::models::ModelKind;

    fn data() -> Dataset<f64> {
        let spec = SyntheticSpec {
            n_rows: 1500,
            n_noise: 4,
            n_correlated_pairs: 1,
            ..SyntheticSpec::default()
        };
        generate_synthetic(&spec, 9).unwrap()
    }

    #[test]
    fn ridge_top3_transfers() {
        let d = data();
        let cfg = RunConfig::new(
            ModelSpec::default_for(ModelKind::Ridge),
            ImportanceMethod::RidgeFc,
        );
        let r = cross_explain(&d, &cfg, 3).unwrap();
        let mut got = r.source.features.clone();
        got.sort();
        assert_eq!(got, ["inf_0", "inf_1", "inf_2"]);
        assert!(r.transferable && r.is_transferable());
        assert_eq!(r.source.source.model, Some(ModelKind::Ridge));
    }

    #[test]
    fn noise_does_not_transfer() {
        let d = data();
        let noise: Vec<String> = (0..3).map(|i| format!("noise_{i}")).collect();
        let r = cross_explain_features(&d, &noise, 1, 3, 0.15).unwrap();
        assert!(!r.transferable);
        assert!(r.receiver_scores.mcc < 0.5);
    }

    #[test]
    fn full_feature_set_matches_direct_training() {
        let d = data();
        let all = d.feature_names().to_vec();
        let r = cross_explain_features(&d, &all, 4, 2, 0.15).unwrap();
        let direct: Vec<MetricSet> = (0..2)
            .map(|i| {
                let s = derive_seed(4, i);
                let (tr, te) = split(&d, 0.15, s).unwrap();
                let m = fit_model(&ModelSpec::DecisionTree(TreeParams::default()), &tr, s).unwrap();
                m.evaluate(&te).unwrap()
            })
            .collect();
        assert_eq!(r.receiver_scores, mean_and_variance(&direct).0);
    }

    #[test]
    fn errors() {
        let d = data();
        assert!(matches!(
            cross_explain_features(&d, &[], 0, 1, 0.15),
            Err(Error::NoInformativeFeatures)
        ));
        let bad = RunConfig::new(
            ModelSpec::default_for(ModelKind::Ridge),
            ImportanceMethod::DtFi,
        );
        assert!(matches!(
            cross_explain(&d, &bad, 1),
            Err(Error::Inapplicable { .. })
        ));
    }
}
