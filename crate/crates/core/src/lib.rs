//! Auditing toolkit for feature-based explanations of binary intrusion
//! classifiers.
//!
//! The crate trains interpretable and opaque models (CART trees, ridge
//! classifiers and a small two-hidden-layer perceptron), computes intrinsic
//! and model-agnostic feature importances, and measures how consistent and
//! transferable those explanations are across seeds, hyperparameters and
//! model families. Metrics follow the usual confusion-matrix definitions,
//! with the Matthews correlation coefficient extended to its degenerate cases.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases at the crate root are what the command-line front end uses.

pub mod audit;
pub mod data;
mod error;
pub mod explain;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use audit::{
    consistency_sweep, cross_explain, cross_explain_features, execute_run, jaccard,
    performance_delta_summary, top_k, ConfigDelta, ConsistencyReport, DeltaSummary, RunConfig,
    RunRecord, ShapSettings, TopKSet, TransferReport, Variation, SCHEMA_VERSION,
};
pub use data::{
    generate_synthetic, load_csv, pearson_matrix, profile_imbalance, prune_correlated, split,
    standardize, write_csv, CorrelationMatrix, CsvOptions, ImbalanceDegree, ImbalanceProfile,
    PruneMode, PruneReport, Standardizer, SyntheticSpec,
};
pub use explain::{
    exact_shapley, global_shap_importance, kernel_shap, permutation_importance, toy_alignment_demo,
    ImportanceMethod, ImportanceVector, ShapConfig, ShapMatrix, ToyModel, ToyVariant,
};
pub use metrics::{
    confusion, false_positive_rate_benign, mcc_guarantee_probe, score, ConfusionMatrix, MetricKind,
    MetricSet,
};
pub use models::{
    fit_model, train_dt, train_mlp, train_ridge, Criterion, DecisionTree, MlpHyper, MlpModel,
    ModelKind, ModelSpec, Optimizer, RidgeModel, Rule, TrainedModel, TreeParams,
};

/// Double-precision dataset, the default everywhere outside of tests.
pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type DecisionTree64 = models::DecisionTree<f64>;
pub type RidgeModel64 = models::RidgeModel<f64>;
pub type MlpModel64 = models::MlpModel<f64>;
pub type TrainedModel64 = models::TrainedModel<f64>;
pub type TrainedModel32 = models::TrainedModel<f32>;
pub type ShapMatrix64 = explain::ShapMatrix<f64>;
pub type CorrelationMatrix64 = data::CorrelationMatrix<f64>;
pub type Standardizer64 = data::Standardizer<f64>;

pub use data::Dataset;
