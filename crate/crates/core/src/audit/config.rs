use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{top_k, TopKSet};
use crate::data::split;
use crate::explain::{
    dt_feature_importances, global_shap_importance, kernel_shap, permutation_importance,
    ridge_feature_coefficients, ImportanceMethod, ImportanceVector, ShapConfig,
};
use crate::metrics::{MetricKind, MetricSet};
use crate::models::{fit_model, ModelKind, ModelSpec, Optimizer, TrainedModel};
use crate::rng::{derive_seed, rng_from};
use crate::{Dataset, Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapSettings {
    pub n_samples: usize,
    pub max_background: usize,
    /// Test rows explained per run.
    pub instances: usize,
}

impl Default for ShapSettings {
    fn default() -> Self {
        Self {
            n_samples: 2048,
            max_background: 100,
            instances: 50,
        }
    }
}

/// One end-to-end experiment: split, fit, score, explain, take top-k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub method: ImportanceMethod,
    pub k: usize,
    /// Drives model fitting and explanation sampling.
    pub seed: u64,
    /// Drives the train/test partition only.
    pub split_seed: u64,
    pub test_fraction: f64,
    pub pi_repeats: usize,
    pub pi_metric: MetricKind,
    /// Evaluate permutation importance on the training partition.
    pub pi_on_train: bool,
    pub shap: ShapSettings,
}

impl RunConfig {
    pub fn new(model: ModelSpec, method: ImportanceMethod) -> Self {
        Self {
            model,
            method,
            k: 3,
            seed: 0,
            split_seed: 0,
            test_fraction: 0.15,
            pi_repeats: 10,
            pi_metric: MetricKind::Mcc,
            pi_on_train: false,
            shap: ShapSettings::default(),
        }
    }

    /// Short `key=value` rendering of the model hyperparameters.
    pub fn hyper_summary(&self) -> String {
        match &self.model {
            ModelSpec::DecisionTree(p) => format!(
                "criterion={:?},max_depth={},min_samples_split={}",
                p.criterion,
                p.max_depth.map_or("none".to_string(), |d| d.to_string()),
                p.min_samples_split
            )
            .to_lowercase(),
            ModelSpec::Ridge { alpha } => format!("alpha={alpha}"),
            ModelSpec::Mlp(h) => format!(
                "optimizer={},lr={},batch_size={},epochs={}",
                h.optimizer.name(),
                h.learning_rate,
                h.batch_size,
                h.epochs
            ),
        }
    }

    pub fn apply(&self, deltas: &[ConfigDelta]) -> Self {
        let mut c = self.clone();
        for d in deltas {
            d.apply(&mut c);
        }
        c
    }

    /// Checks that the (model, method) pair makes sense.
    pub fn validate(&self) -> Result<()> {
        let kind = self.model.kind();
        let ok = match self.method {
            ImportanceMethod::DtFi => kind == ModelKind::DecisionTree,
            ImportanceMethod::RidgeFc => kind == ModelKind::Ridge,
            ImportanceMethod::Pi | ImportanceMethod::ShapGlobal => true,
            ImportanceMethod::Gradient | ImportanceMethod::Coefficient => false,
        };
        if !ok {
            return Err(Error::Inapplicable {
                model: kind.name().into(),
                method: self.method.name().into(),
            });
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// A single parameter override applied on top of a base configuration.
/// Overrides that do not concern the configured model family are no-ops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigDelta {
    BatchSize(usize),
    Optimizer(Optimizer),
    LearningRate(f64),
    Epochs(usize),
    TestFraction(f64),
    Seed(u64),
    SplitSeed(u64),
    Alpha(f64),
    MaxDepth(Option<usize>),
    Method(ImportanceMethod),
}

impl ConfigDelta {
    /// Parses `key=value`, e.g. `batch_size=512`, `optimizer=adam`,
    /// `split=0.25` (test fraction), `seed=7`.
    pub fn parse(s: &str) -> Result<Self> {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("variation {s:?} is not key=value")))?;
        let bad = || Error::InvalidParameter(format!("cannot parse {value:?} for {key}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let int = |v: &str| v.trim().parse::<u64>().map_err(|_| bad());
        Ok(match key.trim() {
            "batch_size" | "batch" => ConfigDelta::BatchSize(int(value)? as usize),
            "optimizer" => ConfigDelta::Optimizer(Optimizer::parse(value.trim()).ok_or_else(bad)?),
            "learning_rate" | "lr" => ConfigDelta::LearningRate(num(value)?),
            "epochs" => ConfigDelta::Epochs(int(value)? as usize),
            "split" | "test_fraction" => ConfigDelta::TestFraction(num(value)?),
            "seed" => ConfigDelta::Seed(int(value)?),
            "split_seed" => ConfigDelta::SplitSeed(int(value)?),
            "alpha" => ConfigDelta::Alpha(num(value)?),
            "max_depth" => ConfigDelta::MaxDepth(match value.trim() {
                "none" => None,
                v => Some(int(v)? as usize),
            }),
            "method" => ConfigDelta::Method(ImportanceMethod::parse(value.trim()).ok_or_else(bad)?),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown variation key {other:?}"
                )))
            }
        })
    }

    pub fn apply(&self, c: &mut RunConfig) {
        match (self, &mut c.model) {
            (ConfigDelta::BatchSize(b), ModelSpec::Mlp(h)) => h.batch_size = *b,
            (ConfigDelta::Optimizer(o), ModelSpec::Mlp(h)) => h.optimizer = *o,
            (ConfigDelta::LearningRate(lr), ModelSpec::Mlp(h)) => h.learning_rate = *lr,
            (ConfigDelta::Epochs(e), ModelSpec::Mlp(h)) => h.epochs = *e,
            (ConfigDelta::Alpha(a), ModelSpec::Ridge { alpha }) => *alpha = *a,
            (ConfigDelta::MaxDepth(d), ModelSpec::DecisionTree(p)) => p.max_depth = *d,
            (ConfigDelta::TestFraction(f), _) => c.test_fraction = *f,
            (ConfigDelta::Seed(s), _) => c.seed = *s,
            (ConfigDelta::SplitSeed(s), _) => c.split_seed = *s,
            (ConfigDelta::Method(m), _) => c.method = *m,
            _ => {}
        }
    }
}

impl fmt::Display for ConfigDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigDelta::BatchSize(b) => write!(f, "batch_size={b}"),
            ConfigDelta::Optimizer(o) => write!(f, "optimizer={}", o.name()),
            ConfigDelta::LearningRate(lr) => write!(f, "lr={lr}"),
            ConfigDelta::Epochs(e) => write!(f, "epochs={e}"),
            ConfigDelta::TestFraction(t) => write!(f, "split={t}"),
            ConfigDelta::Seed(s) => write!(f, "seed={s}"),
            ConfigDelta::SplitSeed(s) => write!(f, "split_seed={s}"),
            ConfigDelta::Alpha(a) => write!(f, "alpha={a}"),
            ConfigDelta::MaxDepth(d) => match d {
                Some(d) => write!(f, "max_depth={d}"),
                None => write!(f, "max_depth=none"),
            },
            ConfigDelta::Method(m) => write!(f, "method={}", m.name()),
        }
    }
}

/// A group of deltas applied together as one sweep run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Variation(pub Vec<ConfigDelta>);

impl Variation {
    /// Parses comma-separated deltas: `batch_size=512,optimizer=adam`.
    pub fn parse(s: &str) -> Result<Self> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(ConfigDelta::parse)
            .collect::<Result<Vec<_>>>()
            .map(Variation)
    }

    /// Seed-only variations `seed = derive(master, i)` for `i in 1..runs`,
    /// to be swept alongside the base run. Adding runs never changes the
    /// seeds of earlier ones.
    pub fn seeds(master: u64, runs: usize) -> Vec<Variation> {
        (1..runs)
            .map(|i| Variation(vec![ConfigDelta::Seed(derive_seed(master, i as u64))]))
            .collect()
    }

    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "base".into();
        }
        self.0
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Outcome of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub config: RunConfig,
    pub metrics: MetricSet,
    pub importance: ImportanceVector,
    pub top_k: TopKSet,
}

/// Computes the configured importance for a fitted model.
pub fn importance_for<F: Scalar>(
    model: &TrainedModel<F>,
    train: &Dataset<F>,
    test: &Dataset<F>,
    cfg: &RunConfig,
) -> Result<ImportanceVector> {
    match cfg.method {
        ImportanceMethod::DtFi => dt_feature_importances(model),
        ImportanceMethod::RidgeFc => ridge_feature_coefficients(model),
        ImportanceMethod::Pi => {
            let data = if cfg.pi_on_train { train } else { test };
            let mut v =
                permutation_importance(model, data, cfg.pi_metric, cfg.pi_repeats, cfg.seed)?;
            v.metadata.note = Some(
                if cfg.pi_on_train {
                    "train partition"
                } else {
                    "test partition"
                }
                .into(),
            );
            Ok(v)
        }
        ImportanceMethod::ShapGlobal => {
            let n = test.n_rows();
            let take = cfg.shap.instances.clamp(1, n);
            let mut picked =
                index::sample(&mut rng_from(derive_seed(cfg.seed, 11)), n, take).into_vec();
            picked.sort_unstable();
            let shap_cfg = ShapConfig {
                n_samples: cfg.shap.n_samples,
                max_background: cfg.shap.max_background,
                seed: cfg.seed,
            };
            let s = kernel_shap(model, train, &test.select_rows(&picked), &shap_cfg)?;
            global_shap_importance(&s)
        }
        m @ (ImportanceMethod::Gradient | ImportanceMethod::Coefficient) => {
            Err(Error::Inapplicable {
                model: model.kind().name().into(),
                method: m.name().into(),
            })
        }
    }
}

/// Runs one configuration end to end.
pub fn execute_run<F: Scalar>(
    d: &Dataset<F>,
    cfg: &RunConfig,
    label: impl Into<String>,
) -> Result<RunRecord> {
    cfg.validate()?;
    let (train, test) = split(d, cfg.test_fraction, cfg.split_seed)?;
    let model = fit_model(&cfg.model, &train, cfg.seed)?;
    let metrics = model.evaluate(&test)?;
    let importance = importance_for(&model, &train, &test, cfg)?;
    let mut top = top_k(&importance, cfg.k)?;
    top.source.model = Some(cfg.model.kind());
    top.source.seed = Some(cfg.seed);
    top.source.hyper = Some(cfg.hyper_summary());
    Ok(RunRecord {
        label: label.into(),
        config: cfg.clone(),
        metrics,
        importance,
        top_k: top,
    })
}
