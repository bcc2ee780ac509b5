use serde::{Deserialize, Serialize};

use crate::linalg::SquareMatrix;
use crate::{Dataset, Error, Result, Scalar};

/// Regularised least-squares classifier on targets coded -1/+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel<F> {
    pub coefficients: Vec<F>,
    pub intercept: F,
    pub alpha: F,
}

/// Closed-form ridge fit with an unpenalised intercept: features and targets
/// are centred, `(Xc'Xc + alpha I) w = Xc't_c` is solved, and the intercept
/// restores the means. Callers pass standardized features.
pub fn train_ridge<F: Scalar>(train: &Dataset<F>, alpha: F) -> Result<RidgeModel<F>> {
    if alpha < F::zero() || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge alpha {alpha} must be >= 0"
        )));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let (gram, rhs, x_mean, t_mean) = normal_equations(train, alpha);
    let w = gram.solve_spd(&rhs)?;
    let intercept = t_mean
        - w.iter()
            .zip(&x_mean)
            .fold(F::zero(), |a, (&wi, &mi)| a + wi * mi);
    Ok(RidgeModel {
        coefficients: w,
        intercept,
        alpha,
    })
}

/// Returns the centred system `(A, b)` together with feature and target
/// means.
pub fn normal_equations<F: Scalar>(
    train: &Dataset<F>,
    alpha: F,
) -> (SquareMatrix<F>, Vec<F>, Vec<F>, F) {
    let m = train.n_features();
    let n = F::of_usize(train.n_rows());
    let target = |label: u8| if label == 1 { F::one() } else { -F::one() };
    let mut x_mean = vec![F::zero(); m];
    for row in train.rows() {
        for (acc, &v) in x_mean.iter_mut().zip(row) {
            *acc = *acc + v;
        }
    }
    x_mean.iter_mut().for_each(|v| *v = *v / n);
    let t_mean = train.labels().iter().map(|&l| target(l)).sum::<F>() / n;

    let mut gram = SquareMatrix::zeros(m);
    let mut rhs = vec![F::zero(); m];
    let mut centred = vec![F::zero(); m];
    for (row, &label) in train.rows().zip(train.labels()) {
        for j in 0..m {
            centred[j] = row[j] - x_mean[j];
        }
        let t = target(label) - t_mean;
        for i in 0..m {
            rhs[i] = rhs[i] + centred[i] * t;
            for j in i..m {
                gram.add(i, j, centred[i] * centred[j]);
            }
        }
    }
    for i in 0..m {
        gram.add(i, i, alpha);
        for j in 0..i {
            let v = gram.get(j, i);
            gram.set(i, j, v);
        }
    }
    (gram, rhs, x_mean, t_mean)
}

impl<F: Scalar> RidgeModel<F> {
    pub fn decision(&self, x: &[F]) -> F {
        self.coefficients
            .iter()
            .zip(x)
            .fold(self.intercept, |acc, (&w, &v)| acc + w * v)
    }

    /// Attack iff the score is strictly positive; a zero score is benign.
    pub fn predict_row(&self, x: &[F]) -> u8 {
        u8::from(self.decision(x) > F::zero())
    }
}
