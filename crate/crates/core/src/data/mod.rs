//! Tabular binary datasets and the preprocessing steps applied before
//! training: ingestion, imbalance profiling, correlation pruning, stratified
//! splitting and standardization.

mod correlation;
mod csv_io;
mod profile;
mod split;
mod standardize;
mod synthetic;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub use correlation::{
    pearson_matrix, prune_correlated, CorrelationMatrix, PruneMode, PruneReport,
};
pub use csv_io::{load_csv, write_csv, CsvOptions};
pub use profile::{profile_imbalance, ImbalanceDegree, ImbalanceProfile};
pub use split::split;
pub use standardize::{standardize, Standardizer};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Feature matrix (row-major) with named columns and 0/1 labels, where 1
/// marks an attack and 0 benign traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<F> {
    feature_names: Vec<String>,
    x: Vec<F>,
    y: Vec<u8>,
}

impl<F: Scalar> Dataset<F> {
    /// Builds a dataset after checking shapes, finiteness, label values and
    /// name uniqueness.
    pub fn new(feature_names: Vec<String>, x: Vec<F>, y: Vec<u8>) -> Result<Self> {
        let n_cols = feature_names.len();
        if n_cols == 0 {
            if !x.is_empty() {
                return Err(Error::InvalidDataset(
                    "cells present without feature columns".into(),
                ));
            }
        } else if x.len() != n_cols * y.len() {
            return Err(Error::InvalidDataset(format!(
                "{} cells cannot form {} rows of {} columns",
                x.len(),
                y.len(),
                n_cols
            )));
        }
        let mut seen = HashSet::with_capacity(n_cols);
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos / n_cols, pos % n_cols);
            return Err(Error::NonFiniteCell {
                row,
                column: feature_names[col].clone(),
                value: format!("{}", x[pos]),
            });
        }
        if let Some(&bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::NonBinaryLabel(bad));
        }
        Ok(Self {
            feature_names,
            x,
            y,
        })
    }

    /// Builds a dataset from a slice of rows.
    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<F>], y: Vec<u8>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                y.len()
            )));
        }
        let n = feature_names.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} values, expected {n}",
                r.len()
            )));
        }
        Self::new(feature_names, rows.concat(), y)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    /// Row-major cell storage.
    pub fn values(&self) -> &[F] {
        &self.x
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        let n = self.n_features();
        &self.x[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> + '_ {
        let n = self.n_features().max(1);
        self.x.chunks(n).take(self.n_rows())
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.n_rows()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let n = self.n_features();
        let mut x = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Self {
            feature_names: self.feature_names.clone(),
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let x = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        Self {
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            x,
            y: self.y.clone(),
        }
    }

    /// Keeps the named columns, in the dataset's own column order.
    pub fn select_named(&self, names: &[String]) -> Result<Self> {
        let mut cols = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        cols.sort_unstable();
        cols.dedup();
        Ok(self.select_columns(&cols))
    }

    /// Same cells with a different label vector.
    pub fn with_labels(&self, y: Vec<u8>) -> Result<Self> {
        Self::new(self.feature_names.clone(), self.x.clone(), y)
    }

    pub fn map_values(&self, f: impl Fn(usize, F) -> F) -> Self {
        let n = self.n_features().max(1);
        Self {
            feature_names: self.feature_names.clone(),
            x: self
                .x
                .iter()
                .enumerate()
                .map(|(k, &v)| f(k % n, v))
                .collect(),
            y: self.y.clone(),
        }
    }

    /// Converts to another scalar type.
    pub fn cast<G: Scalar>(&self) -> Dataset<G> {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.iter().map(|v| G::of(v.as_f64())).collect(),
            y: self.y.clone(),
        }
    }
}
