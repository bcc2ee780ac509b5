use rand::seq::SliceRandom;

use crate::rng::{derive_seed, rng_from};
use crate::{Dataset, Error, Result, Scalar};

/// Stratified train/test split. Each class contributes
/// `round(test_fraction * class_count)` rows to the test partition; both
/// partitions keep the original row order.
pub fn split<F: Scalar>(
    d: &Dataset<F>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<F>, Dataset<F>)> {
    let (train, test) = split_indices(d.labels(), test_fraction, seed)?;
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

pub(crate) fn split_indices(
    y: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut in_test = vec![false; y.len()];
    let mut present = 0;
    for label in 0..=1u8 {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        if idx.is_empty() {
            continue;
        }
        present += 1;
        let n_test = (test_fraction * idx.len() as f64).round() as usize;
        if n_test == 0 || n_test == idx.len() {
            return Err(Error::ClassTooSmall {
                label,
                count: idx.len(),
            });
        }
        idx.shuffle(&mut rng_from(derive_seed(seed, label as u64)));
        for &i in &idx[..n_test] {
            in_test[i] = true;
        }
    }
    if present < 2 {
        return Err(Error::SingleClass);
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| in_test[i]);
    Ok((train, test))
}
