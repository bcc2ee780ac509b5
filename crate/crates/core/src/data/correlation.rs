use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result, Scalar};

/// Pairwise sample Pearson coefficients. Entries touching a constant column
/// are `None` rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix<F> {
    pub names: Vec<String>,
    r: Vec<Option<F>>,
}

impl<F: Scalar> CorrelationMatrix<F> {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<F> {
        self.r[i * self.dim() + j]
    }

    /// Columns with zero variance.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.get(i, i).is_none())
            .collect()
    }

    /// Largest defined |r| over distinct pairs, if any pair is defined.
    pub fn max_abs_off_diagonal(&self) -> Option<F> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j))
            .map(|v| v.abs())
            .fold(None, |m: Option<F>, v| Some(m.map_or(v, |m| m.max(v))))
    }
}

pub fn pearson_matrix<F: Scalar>(d: &Dataset<F>) -> Result<CorrelationMatrix<F>> {
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: n,
        });
    }
    let m = d.n_features();
    let nf = F::of_usize(n);
    let centred: Vec<Vec<F>> = (0..m)
        .map(|j| {
            let col = d.column(j);
            let mean = col.iter().copied().sum::<F>() / nf;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let constant: Vec<bool> = (0..m)
        .map(|j| {
            let first = d.row(0)[j];
            d.rows().all(|r| r[j] == first)
        })
        .collect();
    let ss: Vec<F> = centred
        .iter()
        .map(|c| c.iter().map(|&v| v * v).sum())
        .collect();

    let mut r = vec![None; m * m];
    for i in 0..m {
        if constant[i] {
            continue;
        }
        r[i * m + i] = Some(F::one());
        for j in i + 1..m {
            if constant[j] {
                continue;
            }
            let cross: F = centred[i]
                .iter()
                .zip(&centred[j])
                .map(|(&a, &b)| a * b)
                .sum();
            let v = (cross / (ss[i] * ss[j]).sqrt())
                .max(-F::one())
                .min(F::one());
            r[i * m + j] = Some(v);
            r[j * m + i] = Some(v);
        }
    }
    Ok(CorrelationMatrix {
        names: d.feature_names().to_vec(),
        r,
    })
}

/// How strong pairs are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PruneMode {
    /// Drop every feature that has at least one strong partner.
    #[default]
    DropAll,
    /// Scan in column order and keep a feature unless it is strongly
    /// correlated with one already kept.
    KeepFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub threshold: f64,
    pub mode: PruneMode,
    /// Removed for |r| >= threshold against some other feature.
    pub correlated: Vec<String>,
    /// Removed for having zero variance.
    pub constant: Vec<String>,
}

impl PruneReport {
    pub fn removed_count(&self) -> usize {
        self.correlated.len() + self.constant.len()
    }
}

pub fn prune_correlated<F: Scalar>(
    d: &Dataset<F>,
    threshold: f64,
    mode: PruneMode,
) -> Result<(Dataset<F>, PruneReport)> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation threshold {threshold} outside (0, 1]"
        )));
    }
    let cm = pearson_matrix(d)?;
    let m = d.n_features();
    let constant: BTreeSet<usize> = cm.constant_columns().into_iter().collect();
    let strong = |i: usize, j: usize| cm.get(i, j).is_some_and(|r| r.abs().as_f64() >= threshold);

    let mut correlated = BTreeSet::new();
    match mode {
        PruneMode::DropAll => {
            for i in 0..m {
                for j in i + 1..m {
                    if strong(i, j) {
                        correlated.insert(i);
                        correlated.insert(j);
                    }
                }
            }
        }
        PruneMode::KeepFirst => {
            let mut kept: Vec<usize> = Vec::new();
            for i in (0..m).filter(|i| !constant.contains(i)) {
                if kept.iter().any(|&k| strong(k, i)) {
                    correlated.insert(i);
                } else {
                    kept.push(i);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..m)
        .filter(|i| !constant.contains(i) && !correlated.contains(i))
        .collect();
    if keep.is_empty() {
        return Err(Error::AllFeaturesRemoved);
    }
    let names = d.feature_names();
    let report = PruneReport {
        threshold,
        mode,
        correlated: correlated.iter().map(|&i| names[i].clone()).collect(),
        constant: constant.iter().map(|&i| names[i].clone()).collect(),
    };
    Ok((d.select_columns(&keep), report))
}
