//! Shapley attributions with interventional feature removal: a coalition's
//! value is the mean model output over background rows, with features
//! outside the coalition taken from the background row.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ImportanceMeta, ImportanceMethod, ImportanceVector};
use crate::linalg::SquareMatrix;
use crate::models::TrainedModel;
use crate::rng::{derive_path, derive_seed, rng_from};
use crate::{Dataset, Error, Result, Scalar};

/// Largest feature count for which Kernel SHAP enumerates every coalition.
pub const MAX_FULL_ENUMERATION: usize = 12;
/// Largest feature count accepted by [`exact_shapley`].
pub const MAX_EXACT_FEATURES: usize = 15;

/// Anything with a scalar output per input row.
pub trait OutputModel<F>: Sync {
    fn n_features(&self) -> usize;
    fn output(&self, x: &[F]) -> F;
}

impl<F: Scalar> OutputModel<F> for TrainedModel<F> {
    fn n_features(&self) -> usize {
        TrainedModel::n_features(self)
    }

    fn output(&self, x: &[F]) -> F {
        self.output_row(x)
    }
}

/// Wraps a closure as an [`OutputModel`].
pub struct FnModel<G> {
    pub n_features: usize,
    pub f: G,
}

impl<F, G> OutputModel<F> for FnModel<G>
where
    G: Fn(&[F]) -> F + Sync,
{
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn output(&self, x: &[F]) -> F {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapConfig {
    /// Coalitions sampled per instance when the feature count exceeds
    /// [`MAX_FULL_ENUMERATION`].
    pub n_samples: usize,
    /// Background rows kept (sampled without replacement when larger).
    pub max_background: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            n_samples: 2048,
            max_background: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix<F> {
    pub feature_names: Vec<String>,
    /// Row-major, one row per explained instance.
    pub values: Vec<F>,
    /// Model output at each explained instance.
    pub outputs: Vec<F>,
    /// Mean model output over the background.
    pub base_value: F,
    /// Whether every coalition was enumerated.
    pub exact: bool,
    pub n_samples: usize,
    pub background_rows: usize,
    pub seed: u64,
}

impl<F: Scalar> ShapMatrix<F> {
    pub fn n_instances(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[F] {
        let m = self.n_features();
        &self.values[i * m..(i + 1) * m]
    }

    /// Largest |base + sum(phi) - f(x)| over instances.
    pub fn max_efficiency_gap(&self) -> F {
        (0..self.n_instances()).fold(F::zero(), |acc, i| {
            let total = self.row(i).iter().fold(self.base_value, |a, &v| a + v);
            acc.max((total - self.outputs[i]).abs())
        })
    }
}

struct Game<'a, M, F> {
    model: &'a M,
    background: &'a [&'a [F]],
    instance: &'a [F],
}

impl<M: OutputModel<F>, F: Scalar> Game<'_, M, F> {
    fn value(&self, present: &[bool], buf: &mut [F]) -> F {
        let mut total = F::zero();
        for b in self.background {
            for (j, slot) in buf.iter_mut().enumerate() {
                *slot = if present[j] { self.instance[j] } else { b[j] };
            }
            total = total + self.model.output(buf);
        }
        total / F::of_usize(self.background.len())
    }

    fn value_of_mask(&self, mask: u32, present: &mut [bool], buf: &mut [F]) -> F {
        for (j, p) in present.iter_mut().enumerate() {
            *p = mask >> j & 1 == 1;
        }
        self.value(present, buf)
    }
}

fn background_rows<F: Scalar>(background: &Dataset<F>, cap: usize, seed: u64) -> Vec<&[F]> {
    let n = background.n_rows();
    if n <= cap {
        return background.rows().collect();
    }
    let mut picked = index::sample(&mut rng_from(derive_seed(seed, 0)), n, cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| background.row(i)).collect()
}

fn check_inputs<F: Scalar, M: OutputModel<F>>(
    model: &M,
    background: &Dataset<F>,
    arity: usize,
) -> Result<()> {
    if background.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for found in [background.n_features(), arity] {
        if found != model.n_features() {
            return Err(Error::ArityMismatch {
                expected: model.n_features(),
                found,
            });
        }
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight for a coalition of size `s` out of `m`.
fn kernel_weight(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}

/// Weighted least squares over coalitions with `sum(phi) = f(x) - base`
/// imposed by eliminating the last feature.
fn solve_kernel<F: Scalar>(
    m: usize,
    coalitions: &[(Vec<bool>, f64, F)],
    base: F,
    fx: F,
) -> Result<Vec<F>> {
    let delta = fx - base;
    if m == 1 {
        return Ok(vec![delta]);
    }
    let k = m - 1;
    let mut a = SquareMatrix::zeros(k);
    let mut rhs = vec![F::zero(); k];
    let mut z = vec![F::zero(); k];
    for (present, w, v) in coalitions {
        let w = F::of(*w);
        let last = if present[k] { F::one() } else { F::zero() };
        for i in 0..k {
            z[i] = (if present[i] { F::one() } else { F::zero() }) - last;
        }
        let t = *v - base - last * delta;
        for i in 0..k {
            if z[i] == F::zero() {
                continue;
            }
            rhs[i] = rhs[i] + w * z[i] * t;
            for j in 0..k {
                a.add(i, j, w * z[i] * z[j]);
            }
        }
    }
    let mut phi = a.solve_spd(&rhs)?;
    let rest = phi.iter().fold(F::zero(), |acc, &p| acc + p);
    phi.push(delta - rest);
    Ok(phi)
}

fn enumerate_coalitions<M: OutputModel<F>, F: Scalar>(
    game: &Game<'_, M, F>,
    m: usize,
) -> Vec<(Vec<bool>, f64, F)> {
    let mut buf = vec![F::zero(); m];
    let mut present = vec![false; m];
    (1u32..(1u32 << m) - 1)
        .map(|mask| {
            let v = game.value_of_mask(mask, &mut present, &mut buf);
            let s = mask.count_ones() as usize;
            (present.clone(), kernel_weight(m, s), v)
        })
        .collect()
}

/// Paired sampling: a size is drawn from the kernel's size distribution, a
/// random subset of that size is taken, and both it and its complement are
/// kept with unit weight.
fn sample_coalitions<M: OutputModel<F>, F: Scalar>(
    game: &Game<'_, M, F>,
    m: usize,
    n_samples: usize,
    seed: u64,
) -> Vec<(Vec<bool>, f64, F)> {
    let mut rng = rng_from(seed);
    let size_weights: Vec<f64> = (1..m)
        .map(|s| (m - 1) as f64 / (s * (m - s)) as f64)
        .collect();
    let total: f64 = size_weights.iter().sum();
    let mut buf = vec![F::zero(); m];
    let mut order: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(n_samples + 1);
    while out.len() < n_samples {
        let mut u = rng.random::<f64>() * total;
        let mut size = m - 1;
        for (i, w) in size_weights.iter().enumerate() {
            if u < *w {
                size = i + 1;
                break;
            }
            u -= w;
        }
        order.shuffle(&mut rng);
        let mut present = vec![false; m];
        for &j in &order[..size] {
            present[j] = true;
        }
        let complement: Vec<bool> = present.iter().map(|p| !p).collect();
        let v = game.value(&present, &mut buf);
        let vc = game.value(&complement, &mut buf);
        out.push((present, 1.0, v));
        out.push((complement, 1.0, vc));
    }
    out
}

/// Model-agnostic Kernel SHAP. With at most [`MAX_FULL_ENUMERATION`]
/// features every coalition is used and the result equals the exact Shapley
/// values; beyond that `cfg.n_samples` paired coalitions are sampled per
/// instance. Local accuracy holds exactly in both modes.
pub fn kernel_shap<F: Scalar, M: OutputModel<F>>(
    model: &M,
    background: &Dataset<F>,
    instances: &Dataset<F>,
    cfg: &ShapConfig,
) -> Result<ShapMatrix<F>> {
    check_inputs(model, background, instances.n_features())?;
    let m = model.n_features();
    let exact = m <= MAX_FULL_ENUMERATION;
    if !exact && cfg.n_samples < m + 2 {
        return Err(Error::TooFewSamples {
            min: m + 2,
            found: cfg.n_samples,
        });
    }
    let bg = background_rows(background, cfg.max_background.max(1), cfg.seed);
    let base = bg
        .iter()
        .map(|r| model.output(r))
        .fold(F::zero(), |a, v| a + v)
        / F::of_usize(bg.len());

    let rows = (0..instances.n_rows())
        .into_par_iter()
        .map(|i| {
            let x = instances.row(i);
            let game = Game {
                model,
                background: &bg,
                instance: x,
            };
            let fx = model.output(x);
            let coalitions = if exact {
                enumerate_coalitions(&game, m)
            } else {
                sample_coalitions(
                    &game,
                    m,
                    cfg.n_samples,
                    derive_path(cfg.seed, &[1, i as u64]),
                )
            };
            Ok((solve_kernel(m, &coalitions, base, fx)?, fx))
        })
        .collect::<Result<Vec<_>>>()?;

    let (values, outputs): (Vec<Vec<F>>, Vec<F>) = rows.into_iter().unzip();
    Ok(ShapMatrix {
        feature_names: instances.feature_names().to_vec(),
        values: values.concat(),
        outputs,
        base_value: base,
        exact,
        n_samples: if exact { (1 << m) - 2 } else { cfg.n_samples },
        background_rows: bg.len(),
        seed: cfg.seed,
    })
}

/// Brute-force Shapley values of one instance: every subset, factorial
/// weights. The background is used in full.
pub fn exact_shapley<F: Scalar, M: OutputModel<F>>(
    model: &M,
    background: &Dataset<F>,
    instance: &[F],
) -> Result<Vec<F>> {
    check_inputs(model, background, instance.len())?;
    let m = model.n_features();
    if m > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            max: MAX_EXACT_FEATURES,
            found: m,
        });
    }
    let bg: Vec<&[F]> = background.rows().collect();
    let game = Game {
        model,
        background: &bg,
        instance,
    };
    let mut buf = vec![F::zero(); m];
    let mut present = vec![false; m];
    let values: Vec<F> = (0u32..1 << m)
        .map(|mask| game.value_of_mask(mask, &mut present, &mut buf))
        .collect();
    let factorial = |n: usize| (1..=n).fold(1.0f64, |a, k| a * k as f64);
    let weights: Vec<F> = (0..m)
        .map(|s| F::of(factorial(s) * factorial(m - s - 1) / factorial(m)))
        .collect();
    Ok((0..m)
        .map(|i| {
            let bit = 1u32 << i;
            (0u32..1 << m)
                .filter(|mask| mask & bit == 0)
                .fold(F::zero(), |acc, mask| {
                    let s = mask.count_ones() as usize;
                    acc + weights[s] * (values[(mask | bit) as usize] - values[mask as usize])
                })
        })
        .collect())
}

/// Mean |SHAP| per feature.
pub fn global_shap_importance<F: Scalar>(s: &ShapMatrix<F>) -> Result<ImportanceVector> {
    let n = s.n_instances();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let scores = (0..s.n_features())
        .map(|j| (0..n).map(|i| s.row(i)[j].abs().as_f64()).sum::<f64>() / n as f64)
        .collect();
    Ok(ImportanceVector::new(
        ImportanceMethod::ShapGlobal,
        s.feature_names.clone(),
        scores,
    )
    .with_meta(ImportanceMeta {
        seed: Some(s.seed),
        samples: Some(s.n_samples),
        background_rows: Some(s.background_rows),
        instances: Some(n),
        note: Some(
            if s.exact {
                "full coalition enumeration"
            } else {
                "paired coalition sampling"
            }
            .into(),
        ),
        ..ImportanceMeta::default()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[Vec<f64>]) -> Dataset<f64> {
        let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
        Dataset::from_rows(names, rows, vec![0; rows.len()]).unwrap()
    }

    fn linear() -> FnModel<impl Fn(&[f64]) -> f64 + Sync> {
        FnModel {
            n_features: 2,
            f: |x: &[f64]| 2.0 * x[0] - x[1] + 0.5,
        }
    }

    #[test]
    fn linear_model_attributions() {
        let bg = ds(&[vec![0.0, 0.0]]);
        let inst = ds(&[vec![1.0, 1.0]]);
        let s = kernel_shap(&linear(), &bg, &inst, &ShapConfig::default()).unwrap();
        assert!((s.row(0)[0] - 2.0).abs() < 1e-12);
        assert!((s.row(0)[1] + 1.0).abs() < 1e-12);
        assert_eq!(s.base_value, 0.5);
        assert_eq!(s.outputs[0], 1.5);
    }

    #[test]
    fn symmetric_max() {
        let m = FnModel {
            n_features: 2,
            f: |x: &[f64]| x[0].max(x[1]),
        };
        let s = kernel_shap(
            &m,
            &ds(&[vec![0.0, 0.0]]),
            &ds(&[vec![1.0, 1.0]]),
            &ShapConfig::default(),
        )
        .unwrap();
        assert!((s.row(0)[0] - 0.5).abs() < 1e-12);
        assert!((s.row(0)[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_feature_is_output_minus_base() {
        let m = FnModel {
            n_features: 1,
            f: |x: &[f64]| x[0] * x[0],
        };
        let bg = ds(&[vec![1.0], vec![3.0]]);
        let phi = exact_shapley(&m, &bg, &[4.0]).unwrap();
        assert_eq!(phi, vec![16.0 - 5.0]);
        let s = kernel_shap(&m, &bg, &ds(&[vec![4.0]]), &ShapConfig::default()).unwrap();
        assert_eq!(s.values, vec![11.0]);
    }

    #[test]
    fn additive_model_closed_form() {
        let g = |v: f64| v * v;
        let h = |v: f64| (2.0 * v).sin();
        let m = FnModel {
            n_features: 2,
            f: move |x: &[f64]| g(x[0]) + h(x[1]),
        };
        let bg_rows = vec![
            vec![0.0, 1.0],
            vec![1.0, -1.0],
            vec![2.0, 0.5],
            vec![-1.0, 2.0],
        ];
        let bg = ds(&bg_rows);
        let x = [1.5, 0.25];
        let eg = bg_rows.iter().map(|r| g(r[0])).sum::<f64>() / 4.0;
        let eh = bg_rows.iter().map(|r| h(r[1])).sum::<f64>() / 4.0;
        let phi = exact_shapley(&m, &bg, &x).unwrap();
        assert!((phi[0] - (g(x[0]) - eg)).abs() < 1e-12);
        assert!((phi[1] - (h(x[1]) - eh)).abs() < 1e-12);
    }

    #[test]
    fn sampled_mode_keeps_local_accuracy() {
        let m = FnModel {
            n_features: 14,
            f: |x: &[f64]| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64 + 1.0) * v)
                    .sum::<f64>()
                    + x[0] * x[1]
            },
        };
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|r| (0..14).map(|j| ((r * 14 + j) as f64).sin()).collect())
            .collect();
        let bg = ds(&rows);
        let inst = ds(&rows[..2]);
        let cfg = ShapConfig {
            n_samples: 600,
            ..ShapConfig::default()
        };
        let s = kernel_shap(&m, &bg, &inst, &cfg).unwrap();
        assert!(!s.exact);
        assert!(s.max_efficiency_gap() <= 1e-8);
        assert_eq!(s, kernel_shap(&m, &bg, &inst, &cfg).unwrap());
        let too_few = ShapConfig {
            n_samples: 15,
            ..ShapConfig::default()
        };
        assert!(matches!(
            kernel_shap(&m, &bg, &inst, &too_few),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn limits_and_arity() {
        let wide = FnModel {
            n_features: 16,
            f: |x: &[f64]| x[0],
        };
        let bg = Dataset::new(
            (0..16).map(|j| format!("x{j}")).collect(),
            vec![0.0; 16],
            vec![0],
        )
        .unwrap();
        assert!(matches!(
            exact_shapley(&wide, &bg, &[0.0; 16]),
            Err(Error::TooManyFeatures { .. })
        ));
        assert!(matches!(
            kernel_shap(
                &linear(),
                &ds(&[vec![0.0, 0.0, 0.0]]),
                &ds(&[vec![1.0, 1.0, 1.0]]),
                &ShapConfig::default()
            ),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn background_is_capped() {
        let rows: Vec<Vec<f64>> = (0..250).map(|i| vec![i as f64, 0.0]).collect();
        let s = kernel_shap(
            &linear(),
            &ds(&rows),
            &ds(&[vec![1.0, 1.0]]),
            &ShapConfig::default(),
        )
        .unwrap();
        assert_eq!(s.background_rows, 100);
    }

    #[test]
    fn global_importance() {
        let mk = |values: Vec<f64>, n: usize| ShapMatrix {
            feature_names: vec!["a".into(), "b".into()],
            values,
            outputs: vec![0.0; n],
            base_value: 0.0,
            exact: true,
            n_samples: 2,
            background_rows: 1,
            seed: 0,
        };
        assert_eq!(
            global_shap_importance(&mk(vec![2.0, -1.0], 1))
                .unwrap()
                .scores,
            vec![2.0, 1.0]
        );
        assert_eq!(
            global_shap_importance(&mk(vec![1.0, 0.0, -1.0, 0.0], 2))
                .unwrap()
                .scores,
            vec![1.0, 0.0]
        );
        assert!(global_shap_importance(&mk(vec![0.0; 4], 2))
            .unwrap()
            .is_degenerate());
        assert!(global_shap_importance(&mk(vec![], 0)).is_err());
    }
}
