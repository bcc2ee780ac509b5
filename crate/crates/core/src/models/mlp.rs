//! Fully connected network with two hidden ReLU layers of ten units and a
//! sigmoid output, trained on binary cross-entropy.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_path, derive_seed, rng_from};
use crate::scalar::sigmoid;
use crate::{Dataset, Error, Result, Scalar};

pub const HIDDEN_UNITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// decay 0.9, epsilon 1e-7
    #[default]
    RmsProp,
    /// beta1 0.9, beta2 0.999, epsilon 1e-7
    Adam,
}

impl Optimizer {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmsprop" => Some(Self::RmsProp),
            "adam" => Some(Self::Adam),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RmsProp => "rmsprop",
            Self::Adam => "adam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::RmsProp,
            learning_rate: 0.001,
            batch_size: 256,
            epochs: 5,
        }
    }
}

/// Dense layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<F> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Scalar> Dense<F> {
    fn glorot(inputs: usize, outputs: usize, rng: &mut crate::rng::Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| F::of(rng.random_range(-limit..limit)))
                .collect(),
            bias: vec![F::zero(); outputs],
        }
    }

    fn forward(&self, x: &[F], out: &mut [F]) {
        for (o, (w, &b)) in out
            .iter_mut()
            .zip(self.weights.chunks(self.inputs).zip(&self.bias))
        {
            *o = w.iter().zip(x).fold(b, |acc, (&wi, &xi)| acc + wi * xi);
        }
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel<F> {
    /// `[d -> 10, 10 -> 10, 10 -> 1]`
    pub layers: Vec<Dense<F>>,
    pub hyper: MlpHyper,
    pub seed: u64,
    /// Full training-set loss before the first update, then after each epoch.
    pub loss_history: Vec<f64>,
}

struct Trace<F> {
    z1: Vec<F>,
    a1: Vec<F>,
    z2: Vec<F>,
    a2: Vec<F>,
    logit: F,
}

fn relu<F: Scalar>(v: F) -> F {
    v.max(F::zero())
}

/// Binary cross-entropy from a logit, stable for large magnitudes.
fn bce_from_logit<F: Scalar>(z: F, y: u8) -> F {
    let t = if y == 1 { F::one() } else { F::zero() };
    z.max(F::zero()) - z * t + (F::one() + (-z.abs()).exp()).ln()
}

impl<F: Scalar> MlpModel<F> {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_features: usize, hyper: MlpHyper, seed: u64) -> Self {
        let mut rng = rng_from(derive_seed(seed, 0));
        let layers = vec![
            Dense::glorot(n_features, HIDDEN_UNITS, &mut rng),
            Dense::glorot(HIDDEN_UNITS, HIDDEN_UNITS, &mut rng),
            Dense::glorot(HIDDEN_UNITS, 1, &mut rng),
        ];
        Self {
            layers,
            hyper,
            seed,
            loss_history: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    fn trace(&self, x: &[F]) -> Trace<F> {
        let mut z1 = vec![F::zero(); HIDDEN_UNITS];
        self.layers[0].forward(x, &mut z1);
        let a1: Vec<F> = z1.iter().map(|&v| relu(v)).collect();
        let mut z2 = vec![F::zero(); HIDDEN_UNITS];
        self.layers[1].forward(&a1, &mut z2);
        let a2: Vec<F> = z2.iter().map(|&v| relu(v)).collect();
        let mut out = [F::zero()];
        self.layers[2].forward(&a2, &mut out);
        Trace {
            z1,
            a1,
            z2,
            a2,
            logit: out[0],
        }
    }

    pub fn logit(&self, x: &[F]) -> F {
        self.trace(x).logit
    }

    /// Attack probability in (0, 1).
    pub fn proba_row(&self, x: &[F]) -> F {
        sigmoid(self.logit(x))
    }

    pub fn predict_row(&self, x: &[F]) -> u8 {
        u8::from(self.proba_row(x) >= F::of(0.5))
    }

    /// Flattened parameters: per layer, weights then biases.
    pub fn params(&self) -> Vec<F> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, p: &[F]) {
        assert_eq!(p.len(), self.n_params());
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|v| *v = it.next().unwrap());
        }
    }

    /// Mean cross-entropy over the given rows (row-major `x`).
    pub fn loss(&self, x: &[F], y: &[u8]) -> F {
        let d = self.n_features();
        let total = x.chunks(d).zip(y).fold(F::zero(), |acc, (row, &t)| {
            acc + bce_from_logit(self.logit(row), t)
        });
        total / F::of_usize(y.len())
    }

    /// Mean loss and its gradient in [`Self::params`] order.
    #[allow(clippy::needless_range_loop)]
    pub fn loss_and_gradient(&self, x: &[F], y: &[u8]) -> (F, Vec<F>) {
        let d = self.n_features();
        let h = HIDDEN_UNITS;
        let mut grad = vec![F::zero(); self.n_params()];
        let (g1, rest) = grad.split_at_mut(h * d + h);
        let (g2, g3) = rest.split_at_mut(h * h + h);
        let mut loss = F::zero();
        let [_, l2, l3] = &self.layers[..] else {
            unreachable!("three layers")
        };
        let mut delta2 = vec![F::zero(); h];
        let mut delta1 = vec![F::zero(); h];
        for (row, &t) in x.chunks(d).zip(y) {
            let tr = self.trace(row);
            loss = loss + bce_from_logit(tr.logit, t);
            let target = if t == 1 { F::one() } else { F::zero() };
            let dz3 = sigmoid(tr.logit) - target;
            for k in 0..h {
                g3[k] = g3[k] + dz3 * tr.a2[k];
            }
            g3[h] = g3[h] + dz3;
            for k in 0..h {
                delta2[k] = if tr.z2[k] > F::zero() {
                    dz3 * l3.weights[k]
                } else {
                    F::zero()
                };
            }
            for k in 0..h {
                for j in 0..h {
                    g2[k * h + j] = g2[k * h + j] + delta2[k] * tr.a1[j];
                }
                g2[h * h + k] = g2[h * h + k] + delta2[k];
            }
            for j in 0..h {
                let back = (0..h).fold(F::zero(), |acc, k| acc + delta2[k] * l2.weights[k * h + j]);
                delta1[j] = if tr.z1[j] > F::zero() {
                    back
                } else {
                    F::zero()
                };
            }
            for j in 0..h {
                for i in 0..d {
                    g1[j * d + i] = g1[j * d + i] + delta1[j] * row[i];
                }
                g1[h * d + j] = g1[h * d + j] + delta1[j];
            }
        }
        let n = F::of_usize(y.len());
        grad.iter_mut().for_each(|g| *g = *g / n);
        (loss / n, grad)
    }
}

struct OptimState<F> {
    kind: Optimizer,
    lr: F,
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
}

const RHO: f64 = 0.9;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-7;

impl<F: Scalar> OptimState<F> {
    fn new(kind: Optimizer, lr: f64, n: usize) -> Self {
        Self {
            kind,
            lr: F::of(lr),
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [F], grad: &[F]) {
        let eps = F::of(EPSILON);
        match self.kind {
            Optimizer::RmsProp => {
                let rho = F::of(RHO);
                for ((p, &g), v) in params.iter_mut().zip(grad).zip(&mut self.v) {
                    *v = rho * *v + (F::one() - rho) * g * g;
                    *p = *p - self.lr * g / (*v + eps).sqrt();
                }
            }
            Optimizer::Adam => {
                self.t += 1;
                let (b1, b2) = (F::of(BETA1), F::of(BETA2));
                let alpha =
                    self.lr * (F::one() - b2.powi(self.t)).sqrt() / (F::one() - b1.powi(self.t));
                for (((p, &g), m), v) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(&mut self.m)
                    .zip(&mut self.v)
                {
                    *m = *m + (g - *m) * (F::one() - b1);
                    *v = *v + (g * g - *v) * (F::one() - b2);
                    *p = *p - alpha * *m / (v.sqrt() + eps);
                }
            }
        }
    }
}

/// Mini-batch training. Rows are reshuffled every epoch from a stream
/// derived from `seed`; the final partial batch is kept.
pub fn train_mlp<F: Scalar>(
    train: &Dataset<F>,
    hyper: &MlpHyper,
    seed: u64,
) -> Result<MlpModel<F>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if hyper.batch_size == 0 || !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "batch size {} / learning rate {} invalid",
            hyper.batch_size, hyper.learning_rate
        )));
    }
    let d = train.n_features();
    let mut model = MlpModel::init(d, hyper.clone(), seed);
    let mut opt = OptimState::new(hyper.optimizer, hyper.learning_rate, model.n_params());
    let mut params = model.params();
    model
        .loss_history
        .push(model.loss(train.values(), train.labels()).as_f64());

    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut bx = Vec::with_capacity(hyper.batch_size * d);
    let mut by = Vec::with_capacity(hyper.batch_size);
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng_from(derive_path(seed, &[1, epoch as u64])));
        for (batch, chunk) in order.chunks(hyper.batch_size).enumerate() {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(train.row(i));
                by.push(train.labels()[i]);
            }
            let (loss, grad) = model.loss_and_gradient(&bx, &by);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            opt.step(&mut params, &grad);
            model.set_params(&params);
        }
        let loss = model.loss(train.values(), train.labels());
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: order.len().div_ceil(hyper.batch_size),
            });
        }
        model.loss_history.push(loss.as_f64());
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};

    fn random_batch(seed: u64, n: usize, d: usize) -> (Vec<f64>, Vec<u8>) {
        let mut rng = rng_from(seed);
        let x = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        (x, y)
    }

    /// Central differences over every parameter.
    fn numeric_gradient(m: &MlpModel<f64>, x: &[f64], y: &[u8], h: f64) -> Vec<f64> {
        let base = m.params();
        let mut probe = m.clone();
        (0..base.len())
            .map(|k| {
                let mut p = base.clone();
                p[k] = base[k] + h;
                probe.set_params(&p);
                let up = probe.loss(x, y);
                p[k] = base[k] - h;
                probe.set_params(&p);
                let down = probe.loss(x, y);
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let m = MlpModel::<f64>::init(4, MlpHyper::default(), seed);
            let (x, y) = random_batch(100 + seed, 5, 4);
            let (_, analytic) = m.loss_and_gradient(&x, &y);
            let numeric = numeric_gradient(&m, &x, &y, 1e-6);
            for (a, n) in analytic.iter().zip(&numeric) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                assert!(rel <= 1e-4, "analytic {a} numeric {n}");
            }
        }
    }

    #[test]
    fn output_in_open_unit_interval() {
        let m = MlpModel::<f64>::init(3, MlpHyper::default(), 7);
        let (x, _) = random_batch(3, 200, 3);
        for row in x.chunks(3) {
            let p = m.proba_row(row);
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let spec = SyntheticSpec {
            n_rows: 600,
            n_noise: 2,
            n_correlated_pairs: 0,
            ..SyntheticSpec::default()
        };
        let d: Dataset<f64> = generate_synthetic(&spec, 1).unwrap();
        let hyper = MlpHyper {
            batch_size: 32,
            ..MlpHyper::default()
        };
        let a = train_mlp(&d, &hyper, 9).unwrap();
        let b = train_mlp(&d, &hyper, 9).unwrap();
        assert_eq!(a, b);
        let shapes: Vec<_> = a.layers.iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(shapes, vec![(5, 10), (10, 10), (10, 1)]);
        assert!(a.loss_history.last().unwrap() < &a.loss_history[0]);
        let c = train_mlp(&d, &hyper, 10).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn adam_also_descends() {
        let spec = SyntheticSpec {
            n_rows: 600,
            n_noise: 2,
            n_correlated_pairs: 0,
            ..SyntheticSpec::default()
        };
        let d: Dataset<f64> = generate_synthetic(&spec, 2).unwrap();
        let hyper = MlpHyper {
            optimizer: Optimizer::Adam,
            batch_size: 32,
            ..MlpHyper::default()
        };
        let m = train_mlp(&d, &hyper, 1).unwrap();
        assert!(m.loss_history.last().unwrap() < &m.loss_history[0]);
    }

    #[test]
    fn exploding_training_is_reported() {
        let d = Dataset::<f32>::new(vec!["a".into()], vec![1.0, -1.0], vec![1, 0]).unwrap();
        let hyper = MlpHyper {
            learning_rate: 1e36,
            ..MlpHyper::default()
        };
        assert!(matches!(
            train_mlp(&d, &hyper, 0),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let spec = SyntheticSpec {
            n_rows: 400,
            n_noise: 1,
            n_correlated_pairs: 0,
            ..SyntheticSpec::default()
        };
        let d: Dataset<f32> = generate_synthetic(&spec, 3).unwrap();
        let m = train_mlp(
            &d,
            &MlpHyper {
                batch_size: 16,
                ..MlpHyper::default()
            },
            0,
        )
        .unwrap();
        assert!(m.loss_history.last().unwrap() < &m.loss_history[0]);
    }
}
