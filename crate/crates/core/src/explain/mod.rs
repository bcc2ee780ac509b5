//! Feature importance: intrinsic scores read off fitted models, permutation
//! importance, Shapley attributions, and the gradient-versus-coefficient
//! toy comparison.

mod permutation;
mod shap;
mod toy;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricKind;
use crate::models::TrainedModel;
use crate::{Error, Result, Scalar};

pub use permutation::permutation_importance;
pub use shap::{
    exact_shapley, global_shap_importance, kernel_shap, FnModel, OutputModel, ShapConfig,
    ShapMatrix, MAX_EXACT_FEATURES, MAX_FULL_ENUMERATION,
};
pub use toy::{
    toy_alignment_demo, AlignmentReport, GradientSample, ToyModel, ToyVariant, VariantAlignment,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImportanceMethod {
    /// Impurity-decrease importances of a decision tree.
    DtFi,
    /// Ridge coefficients on standardized inputs.
    RidgeFc,
    /// Permutation importance.
    Pi,
    /// Mean absolute SHAP value.
    ShapGlobal,
    Gradient,
    Coefficient,
}

impl ImportanceMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::DtFi => "DT_FI",
            Self::RidgeFc => "RIDGE_FC",
            Self::Pi => "PI",
            Self::ShapGlobal => "SHAP_GLOBAL",
            Self::Gradient => "GRADIENT",
            Self::Coefficient => "COEFFICIENT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dt_fi" | "fi" => Some(Self::DtFi),
            "ridge_fc" | "fc" => Some(Self::RidgeFc),
            "pi" | "permutation" => Some(Self::Pi),
            "shap_global" | "shap" => Some(Self::ShapGlobal),
            "gradient" => Some(Self::Gradient),
            "coefficient" => Some(Self::Coefficient),
            _ => None,
        }
    }

    /// Signed methods are ranked by magnitude.
    pub fn is_signed(self) -> bool {
        matches!(self, Self::RidgeFc | Self::Pi | Self::Coefficient)
    }
}

/// Provenance attached to an importance vector so runs can be diffed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImportanceMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Per-feature scores from one (model, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub method: ImportanceMethod,
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    pub metadata: ImportanceMeta,
}

impl ImportanceVector {
    pub fn new(method: ImportanceMethod, feature_names: Vec<String>, scores: Vec<f64>) -> Self {
        debug_assert_eq!(feature_names.len(), scores.len());
        Self {
            method,
            feature_names,
            scores,
            metadata: ImportanceMeta::default(),
        }
    }

    pub fn with_meta(mut self, metadata: ImportanceMeta) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// True when no feature carries any signal.
    pub fn is_degenerate(&self) -> bool {
        self.scores.iter().all(|&s| s == 0.0)
    }

    /// Feature indices by descending |score|, ties by index, zero scores
    /// dropped.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.scores[i] != 0.0).collect();
        idx.sort_by(|&a, &b| {
            self.scores[b]
                .abs()
                .total_cmp(&self.scores[a].abs())
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Impurity-based importances of a fitted tree.
pub fn dt_feature_importances<F: Scalar>(m: &TrainedModel<F>) -> Result<ImportanceVector> {
    let tree = m
        .tree()
        .ok_or_else(|| inapplicable(m, ImportanceMethod::DtFi))?;
    Ok(ImportanceVector::new(
        ImportanceMethod::DtFi,
        m.feature_names.clone(),
        tree.feature_importances(),
    )
    .with_meta(ImportanceMeta {
        seed: Some(tree.seed),
        ..ImportanceMeta::default()
    }))
}

/// Signed ridge coefficients. They are comparable across features only
/// because the model was fitted on standardized inputs.
pub fn ridge_feature_coefficients<F: Scalar>(m: &TrainedModel<F>) -> Result<ImportanceVector> {
    let ridge = m
        .ridge()
        .ok_or_else(|| inapplicable(m, ImportanceMethod::RidgeFc))?;
    Ok(ImportanceVector::new(
        ImportanceMethod::RidgeFc,
        m.feature_names.clone(),
        ridge.coefficients.iter().map(|c| c.as_f64()).collect(),
    )
    .with_meta(ImportanceMeta {
        note: Some("coefficients on standardized inputs".into()),
        ..ImportanceMeta::default()
    }))
}

pub(crate) fn inapplicable<F: Scalar>(m: &TrainedModel<F>, method: ImportanceMethod) -> Error {
    Error::Inapplicable {
        model: m.kind().name().into(),
        method: method.name().into(),
    }
}
