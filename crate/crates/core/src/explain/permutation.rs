use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ImportanceMeta, ImportanceMethod, ImportanceVector};
use crate::metrics::{confusion, score, MetricKind};
use crate::models::TrainedModel;
use crate::rng::{derive_path, rng_from};
use crate::{Dataset, Error, Result, Scalar};

/// Drop in `metric` when one column of `data` is shuffled, averaged over
/// `repeats` shuffles. The shuffle for (feature j, repeat r) comes from a
/// stream derived from `(seed, j, r)`, so features can be processed in any
/// order. Negative values are kept.
pub fn permutation_importance<F: Scalar>(
    m: &TrainedModel<F>,
    data: &Dataset<F>,
    metric: MetricKind,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceVector> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter(
            "permutation repeats must be >= 1".into(),
        ));
    }
    let d = data.n_features();
    let evaluate = |cells: &[F]| -> Result<f64> {
        let pred = m.predict_labels(cells, d)?;
        Ok(score(&confusion(data.labels(), &pred)?)?.get(metric))
    };
    let base_pred = m.predict_labels(data.values(), d)?;
    let baseline_set = score(&confusion(data.labels(), &base_pred)?)?;
    if baseline_set.is_undefined(metric) {
        return Err(Error::MetricUndefined(metric.name().into()));
    }
    let baseline = baseline_set.get(metric);

    let scores = (0..d)
        .into_par_iter()
        .map(|j| {
            let column = data.column(j);
            let mut cells = data.values().to_vec();
            let mut total = 0.0;
            for r in 0..repeats {
                let mut shuffled = column.clone();
                shuffled.shuffle(&mut rng_from(derive_path(seed, &[j as u64, r as u64])));
                for (row, v) in cells.chunks_mut(d).zip(&shuffled) {
                    row[j] = *v;
                }
                total += baseline - evaluate(&cells)?;
            }
            Ok(total / repeats as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(
        ImportanceVector::new(ImportanceMethod::Pi, data.feature_names().to_vec(), scores)
            .with_meta(ImportanceMeta {
                seed: Some(seed),
                repeats: Some(repeats),
                metric: Some(metric),
                ..ImportanceMeta::default()
            }),
    )
}
