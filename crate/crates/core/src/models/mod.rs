//! The three classifier families and a uniform handle over them.

mod mlp;
mod ridge;
mod tree;

use serde::{Deserialize, Serialize};

use crate::data::Standardizer;
use crate::scalar::sigmoid;
use crate::{Dataset, Error, Result, Scalar};

pub use mlp::{train_mlp, Dense, MlpHyper, MlpModel, Optimizer, HIDDEN_UNITS};
pub use ridge::{normal_equations, train_ridge, RidgeModel};
pub use tree::{train_dt, Cmp, Criterion, DecisionTree, Literal, Node, Rule, Split, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    Ridge,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "dt",
            ModelKind::Ridge => "ridge",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "DT",
            ModelKind::Ridge => "Ridge",
            ModelKind::Mlp => "DNN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" | "tree" | "decision_tree" => Some(Self::DecisionTree),
            "ridge" => Some(Self::Ridge),
            "mlp" | "dnn" => Some(Self::Mlp),
            _ => None,
        }
    }
}

/// Model family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    DecisionTree(TreeParams),
    Ridge { alpha: f64 },
    Mlp(MlpHyper),
}

impl ModelSpec {
    /// Library defaults for each family.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::DecisionTree => ModelSpec::DecisionTree(TreeParams::default()),
            ModelKind::Ridge => ModelSpec::Ridge { alpha: 1.0 },
            ModelKind::Mlp => ModelSpec::Mlp(MlpHyper::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::DecisionTree(_) => ModelKind::DecisionTree,
            ModelSpec::Ridge { .. } => ModelKind::Ridge,
            ModelSpec::Mlp(_) => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody<F> {
    DecisionTree(DecisionTree<F>),
    Ridge(RidgeModel<F>),
    Mlp(MlpModel<F>),
}

/// A fitted model together with the standardization applied to its inputs.
/// Trees see raw features; ridge and MLP see standardized ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<F> {
    pub feature_names: Vec<String>,
    pub scaler: Option<Standardizer<F>>,
    pub body: ModelBody<F>,
}

/// How to read [`Prediction::probabilities`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityKind {
    /// Attack share in the reached tree leaf.
    LeafFrequency,
    /// Logistic of the ridge score; not calibrated.
    SquashedScore,
    /// Sigmoid output of the network.
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<F> {
    pub labels: Vec<u8>,
    pub probabilities: Vec<F>,
    pub kind: ProbabilityKind,
}

/// Fits the requested model. Ridge and MLP get a standardizer fitted on
/// `train`.
pub fn fit_model<F: Scalar>(
    spec: &ModelSpec,
    train: &Dataset<F>,
    seed: u64,
) -> Result<TrainedModel<F>> {
    let (scaler, body) = match spec {
        ModelSpec::DecisionTree(p) => (None, ModelBody::DecisionTree(train_dt(train, p, seed)?)),
        ModelSpec::Ridge { alpha } => {
            let s = Standardizer::fit(train)?;
            let z = s.transform(train)?;
            (Some(s), ModelBody::Ridge(train_ridge(&z, F::of(*alpha))?))
        }
        ModelSpec::Mlp(h) => {
            let s = Standardizer::fit(train)?;
            let z = s.transform(train)?;
            (Some(s), ModelBody::Mlp(train_mlp(&z, h, seed)?))
        }
    };
    Ok(TrainedModel {
        feature_names: train.feature_names().to_vec(),
        scaler,
        body,
    })
}

impl<F: Scalar> TrainedModel<F> {
    pub fn kind(&self) -> ModelKind {
        match &self.body {
            ModelBody::DecisionTree(_) => ModelKind::DecisionTree,
            ModelBody::Ridge(_) => ModelKind::Ridge,
            ModelBody::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn tree(&self) -> Option<&DecisionTree<F>> {
        match &self.body {
            ModelBody::DecisionTree(t) => Some(t),
            _ => None,
        }
    }

    pub fn ridge(&self) -> Option<&RidgeModel<F>> {
        match &self.body {
            ModelBody::Ridge(r) => Some(r),
            _ => None,
        }
    }

    pub fn mlp(&self) -> Option<&MlpModel<F>> {
        match &self.body {
            ModelBody::Mlp(m) => Some(m),
            _ => None,
        }
    }

    fn check_arity(&self, found: usize) -> Result<()> {
        if found != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                found,
            });
        }
        Ok(())
    }

    /// Calls `f` with the row in the space the model body was fitted in.
    #[inline]
    fn with_input<R>(&self, row: &[F], f: impl FnOnce(&[F]) -> R) -> R {
        match &self.scaler {
            None => f(row),
            Some(s) => {
                let mut buf = vec![F::zero(); row.len()];
                s.transform_row_into(row, &mut buf);
                f(&buf)
            }
        }
    }

    /// Real-valued output explained by the attribution methods: leaf attack
    /// frequency for trees, the raw linear score for ridge, and the sigmoid
    /// probability for the MLP.
    pub fn output_row(&self, row: &[F]) -> F {
        self.with_input(row, |x| match &self.body {
            ModelBody::DecisionTree(t) => t.proba_row(x),
            ModelBody::Ridge(r) => r.decision(x),
            ModelBody::Mlp(m) => m.proba_row(x),
        })
    }

    pub fn predict_row(&self, row: &[F]) -> u8 {
        self.with_input(row, |x| match &self.body {
            ModelBody::DecisionTree(t) => t.predict_row(x),
            ModelBody::Ridge(r) => r.predict_row(x),
            ModelBody::Mlp(m) => m.predict_row(x),
        })
    }

    /// Labels for row-major cells with `n_features` columns.
    pub fn predict_labels(&self, cells: &[F], n_features: usize) -> Result<Vec<u8>> {
        self.check_arity(n_features)?;
        if n_features == 0 {
            return Ok(Vec::new());
        }
        Ok(cells
            .chunks(n_features)
            .map(|r| self.predict_row(r))
            .collect())
    }

    pub fn predict(&self, d: &Dataset<F>) -> Result<Prediction<F>> {
        self.check_arity(d.n_features())?;
        let mut labels = Vec::with_capacity(d.n_rows());
        let mut probabilities = Vec::with_capacity(d.n_rows());
        for row in d.rows() {
            let (label, p) = self.with_input(row, |x| match &self.body {
                ModelBody::DecisionTree(t) => (t.predict_row(x), t.proba_row(x)),
                ModelBody::Ridge(r) => (r.predict_row(x), sigmoid(r.decision(x))),
                ModelBody::Mlp(m) => {
                    let p = m.proba_row(x);
                    (u8::from(p >= F::of(0.5)), p)
                }
            });
            labels.push(label);
            probabilities.push(p);
        }
        let kind = match self.kind() {
            ModelKind::DecisionTree => ProbabilityKind::LeafFrequency,
            ModelKind::Ridge => ProbabilityKind::SquashedScore,
            ModelKind::Mlp => ProbabilityKind::Sigmoid,
        };
        Ok(Prediction {
            labels,
            probabilities,
            kind,
        })
    }

    /// Confusion-matrix scores on a labelled dataset.
    pub fn evaluate(&self, d: &Dataset<F>) -> Result<crate::MetricSet> {
        let pred = self.predict_labels(d.values(), d.n_features())?;
        crate::metrics::score(&crate::metrics::confusion(d.labels(), &pred)?)
    }
}
