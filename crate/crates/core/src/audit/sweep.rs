use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{execute_run, jaccard, RunConfig, RunRecord, Variation, SCHEMA_VERSION};
use crate::metrics::{MetricKind, MetricSet};
use crate::{Dataset, Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub schema_version: u32,
    /// Base configuration first, then one entry per variation.
    pub runs: Vec<RunRecord>,
    pub pairwise_jaccard: Vec<Vec<f64>>,
    /// Mean over distinct pairs.
    pub mean_jaccard: f64,
    /// Max minus min of each score across runs.
    pub performance_deltas: MetricSet,
}

/// How far performance moved next to how far explanations moved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    /// Largest delta over accuracy, F1, precision and recall.
    pub standard_metrics_max_delta: f64,
    pub mcc_max_delta: f64,
    pub explanation_mean_jaccard: f64,
}

/// Runs `base` and each variation end to end and compares their top-k sets.
/// `k` overrides the configured top-k size.
pub fn consistency_sweep<F: Scalar>(
    d: &Dataset<F>,
    base: &RunConfig,
    variations: &[Variation],
    k: usize,
) -> Result<ConsistencyReport> {
    if variations.is_empty() {
        return Err(Error::InvalidParameter(
            "a sweep needs at least one variation".into(),
        ));
    }
    let base = RunConfig { k, ..base.clone() };
    let plan: Vec<(String, RunConfig)> = std::iter::once(("base".to_string(), base.clone()))
        .chain(variations.iter().map(|v| (v.label(), base.apply(&v.0))))
        .collect();
    let runs = plan
        .par_iter()
        .enumerate()
        .map(|(index, (label, cfg))| {
            execute_run(d, cfg, label.clone()).map_err(|e| Error::RunFailed {
                index,
                label: label.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(runs))
}

fn assemble(runs: Vec<RunRecord>) -> ConsistencyReport {
    let n = runs.len();
    let mut pairwise = vec![vec![1.0; n]; n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = jaccard(&runs[i].top_k.features, &runs[j].top_k.features);
            pairwise[i][j] = s;
            pairwise[j][i] = s;
            sum += s;
        }
    }
    let pairs = n * (n - 1) / 2;
    let deltas = MetricKind::ALL.map(|m| {
        let vals = runs.iter().map(|r| r.metrics.get(m));
        let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.fold(f64::INFINITY, f64::min);
        hi - lo
    });
    ConsistencyReport {
        schema_version: SCHEMA_VERSION,
        runs,
        pairwise_jaccard: pairwise,
        mean_jaccard: if pairs == 0 { 1.0 } else { sum / pairs as f64 },
        performance_deltas: MetricSet::from_values(deltas),
    }
}

pub fn performance_delta_summary(r: &ConsistencyReport) -> DeltaSummary {
    DeltaSummary {
        standard_metrics_max_delta: MetricKind::STANDARD
            .iter()
            .map(|&m| r.performance_deltas.get(m))
            .fold(0.0, f64::max),
        mcc_max_delta: r.performance_deltas.mcc,
        explanation_mean_jaccard: r.mean_jaccard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{ConfigDelta, TopKSet};
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::explain::{ImportanceMethod, ImportanceVector};
    use crate::models::{ModelKind, ModelSpec};

    fn data() -> Dataset<f64> {
        let spec = SyntheticSpec {
            n_rows: 800,
            n_noise: 3,
            n_correlated_pairs: 0,
            ..SyntheticSpec::default()
        };
        generate_synthetic(&spec, 2).unwrap()
    }

    #[test]
    fn identical_runs_agree() {
        let d = data();
        let cfg = RunConfig::new(
            ModelSpec::default_for(ModelKind::DecisionTree),
            ImportanceMethod::DtFi,
        );
        let r = consistency_sweep(&d, &cfg, &[Variation::default()], 3).unwrap();
        assert_eq!(r.runs.len(), 2);
        assert_eq!(r.pairwise_jaccard, vec![vec![1.0; 2]; 2]);
        let s = performance_delta_summary(&r);
        assert_eq!(
            (
                s.standard_metrics_max_delta,
                s.mcc_max_delta,
                s.explanation_mean_jaccard
            ),
            (0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn ridge_ignores_batch_size() {
        let d = data();
        let cfg = RunConfig::new(
            ModelSpec::default_for(ModelKind::Ridge),
            ImportanceMethod::RidgeFc,
        );
        let v = [Variation(vec![ConfigDelta::BatchSize(512)])];
        let r = consistency_sweep(&d, &cfg, &v, 3).unwrap();
        assert_eq!(r.mean_jaccard, 1.0);
        assert_eq!(r.runs[1].label, "batch_size=512");
    }

    #[test]
    fn failing_run_is_identified() {
        let d = data();
        let cfg = RunConfig::new(
            ModelSpec::default_for(ModelKind::Ridge),
            ImportanceMethod::RidgeFc,
        );
        let v = [
            Variation(vec![]),
            Variation(vec![ConfigDelta::TestFraction(1.5)]),
        ];
        match consistency_sweep(&d, &cfg, &v, 3) {
            Err(Error::RunFailed { index, label, .. }) => {
                assert_eq!((index, label.as_str()), (2, "split=1.5"))
            }
            other => panic!("{other:?}"),
        }
    }

    fn record(features: &[&str], metrics: MetricSet) -> RunRecord {
        let names: Vec<String> = features.iter().map(|s| s.to_string()).collect();
        RunRecord {
            label: String::new(),
            config: RunConfig::new(
                ModelSpec::default_for(ModelKind::Ridge),
                ImportanceMethod::RidgeFc,
            ),
            metrics,
            importance: ImportanceVector::new(
                ImportanceMethod::RidgeFc,
                names.clone(),
                vec![1.0; names.len()],
            ),
            top_k: TopKSet {
                k: names.len(),
                features: names,
                scores: vec![],
                source: Default::default(),
                clamped: false,
                degenerate: false,
            },
        }
    }

    #[test]
    fn constructed_deltas() {
        let a = MetricSet::from_values([0.9, 0.9, 0.9, 0.9, 0.9, 0.8]);
        let b = MetricSet::from_values([0.901, 0.9, 0.9005, 0.9, 0.9, 0.81]);
        let r = assemble(vec![
            record(&["x", "y"], a),
            record(&["x", "z"], b),
            record(&["x", "y"], a),
        ]);
        let s = performance_delta_summary(&r);
        assert!((s.standard_metrics_max_delta - 0.001).abs() < 1e-12);
        assert!((s.mcc_max_delta - 0.01).abs() < 1e-12);
        assert!((s.explanation_mean_jaccard - 5.0 / 9.0).abs() < 1e-12);
        for i in 0..3 {
            assert_eq!(r.pairwise_jaccard[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(r.pairwise_jaccard[i][j], r.pairwise_jaccard[j][i]);
            }
        }
    }
}
