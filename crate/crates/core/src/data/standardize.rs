use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result, Scalar};

/// Per-column mean and population standard deviation learned on a training
/// partition. Columns with zero spread map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<F> {
    pub mean: Vec<F>,
    pub scale: Vec<F>,
}

impl<F: Scalar> Standardizer<F> {
    pub fn fit(train: &Dataset<F>) -> Result<Self> {
        let n = train.n_rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let nf = F::of_usize(n);
        let m = train.n_features();
        let mut mean = vec![F::zero(); m];
        for row in train.rows() {
            for (acc, &v) in mean.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        mean.iter_mut().for_each(|v| *v = *v / nf);
        let mut var = vec![F::zero(); m];
        for row in train.rows() {
            for ((acc, &v), &mu) in var.iter_mut().zip(row).zip(&mean) {
                *acc = *acc + (v - mu) * (v - mu);
            }
        }
        let scale = (0..m)
            .map(|j| {
                let first = train.row(0)[j];
                if train.rows().all(|r| r[j] == first) {
                    F::zero()
                } else {
                    (var[j] / nf).sqrt()
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn transform_value(&self, j: usize, v: F) -> F {
        if self.scale[j] == F::zero() {
            F::zero()
        } else {
            (v - self.mean[j]) / self.scale[j]
        }
    }

    pub fn transform_row_into(&self, row: &[F], out: &mut [F]) {
        for (j, (o, &v)) in out.iter_mut().zip(row).enumerate() {
            *o = self.transform_value(j, v);
        }
    }

    pub fn transform(&self, d: &Dataset<F>) -> Result<Dataset<F>> {
        if d.n_features() != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                found: d.n_features(),
            });
        }
        Ok(d.map_values(|j, v| self.transform_value(j, v)))
    }
}

/// Fits on `train` and applies the same parameters to both partitions.
pub fn standardize<F: Scalar>(
    train: &Dataset<F>,
    test: &Dataset<F>,
) -> Result<(Dataset<F>, Dataset<F>, Standardizer<F>)> {
    let params = Standardizer::fit(train)?;
    Ok((params.transform(train)?, params.transform(test)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> Dataset<f64> {
        Dataset::new(vec!["a".into()], v.to_vec(), vec![0; v.len()]).unwrap()
    }

    #[test]
    fn two_point_and_constant() {
        let (tr, te, p) = standardize(&col(&[2.0, 4.0]), &col(&[3.0])).unwrap();
        assert_eq!(tr.values(), &[-1.0, 1.0]);
        assert_eq!(te.values(), &[0.0]);
        assert_eq!((p.mean[0], p.scale[0]), (3.0, 1.0));

        let (tr, te, _) = standardize(&col(&[5.0, 5.0]), &col(&[9.0, -1.0])).unwrap();
        assert_eq!(tr.values(), &[0.0, 0.0]);
        assert_eq!(te.values(), &[0.0, 0.0]);
    }

    #[test]
    fn empty_train_rejected() {
        assert!(Standardizer::fit(&col(&[])).is_err());
    }

    proptest! {
        #[test]
        fn unit_moments(values in proptest::collection::vec(-1e3f64..1e3, 3..60)) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let d = col(&values);
            let out = Standardizer::fit(&d).unwrap().transform(&d).unwrap();
            let n = values.len() as f64;
            let mean = out.values().iter().sum::<f64>() / n;
            let sd = (out.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((sd - 1.0).abs() <= 1e-10);
        }
    }
}
