use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from, Rng};
use crate::{Dataset, Error, Result, Scalar};

/// Parameters of the desk-scale stand-in for a flow dataset.
///
/// Columns are laid out as `inf_*` (class-dependent), then `noise_*`, then
/// `pair{k}_a` / `pair{k}_b` for each correlated pair, giving
/// `n_informative + n_noise + 2 * n_correlated_pairs` features in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    pub n_correlated_pairs: usize,
    pub positive_fraction: f64,
    /// Distance between the two class means along every informative axis.
    pub class_separation: f64,
    /// Standard deviation of the perturbation added to the second member of
    /// each correlated pair. The pair's population correlation is
    /// `1 / sqrt(1 + correlation_noise^2)`.
    pub correlation_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_rows: 20_000,
            n_informative: 3,
            n_noise: 10,
            n_correlated_pairs: 3,
            positive_fraction: 0.8,
            class_separation: 4.0,
            correlation_noise: 0.05,
        }
    }
}

impl SyntheticSpec {
    pub fn n_features(&self) -> usize {
        self.n_informative + self.n_noise + 2 * self.n_correlated_pairs
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_informative)
            .map(|i| format!("inf_{i}"))
            .collect();
        names.extend((0..self.n_noise).map(|i| format!("noise_{i}")));
        for k in 0..self.n_correlated_pairs {
            names.push(format!("pair{k}_a"));
            names.push(format!("pair{k}_b"));
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_rows < 2 {
            return bad(format!("n_rows = {} (need at least 2)", self.n_rows));
        }
        if self.n_features() == 0 {
            return bad("synthetic spec has no features".into());
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return bad(format!(
                "positive_fraction {} outside (0, 1)",
                self.positive_fraction
            ));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return bad(format!(
                "class_separation {} must be >= 0",
                self.class_separation
            ));
        }
        if !(self.correlation_noise > 0.0 && self.correlation_noise.is_finite()) {
            return bad(format!(
                "correlation_noise {} must be > 0",
                self.correlation_noise
            ));
        }
        Ok(())
    }

    /// Number of attack rows: `round(positive_fraction * n_rows)` clamped so
    /// both classes appear.
    pub fn n_positive(&self) -> usize {
        ((self.positive_fraction * self.n_rows as f64).round() as usize).clamp(1, self.n_rows - 1)
    }
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate_synthetic<F: Scalar>(spec: &SyntheticSpec, seed: u64) -> Result<Dataset<F>> {
    spec.validate()?;
    let n = spec.n_rows;
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < spec.n_positive())).collect();
    labels.shuffle(&mut rng_from(derive_seed(seed, 0)));

    let mut rng = rng_from(derive_seed(seed, 1));
    let half = spec.class_separation / 2.0;
    let mut x = Vec::with_capacity(n * spec.n_features());
    for &label in &labels {
        let shift = if label == 1 { half } else { -half };
        for _ in 0..spec.n_informative {
            x.push(F::of(shift + normal(&mut rng)));
        }
        for _ in 0..spec.n_noise {
            x.push(F::of(normal(&mut rng)));
        }
        for _ in 0..spec.n_correlated_pairs {
            let g = normal(&mut rng);
            x.push(F::of(g));
            x.push(F::of(g + spec.correlation_noise * normal(&mut rng)));
        }
    }
    Dataset::new(spec.feature_names(), x, labels)
}
