use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::{Dataset, Error, Result, Scalar};

/// Ingestion options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    /// Raw label values mapped to 1 (attack); everything else becomes 0.
    pub positive_labels: HashSet<String>,
    /// Columns excluded from the feature set. Names absent from the header
    /// are ignored.
    pub drop_columns: HashSet<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            positive_labels: ["1".to_string()].into_iter().collect(),
            drop_columns: HashSet::new(),
        }
    }

    pub fn positive<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.positive_labels = labels.into_iter().map(Into::into).collect();
        self
    }

    pub fn drop<I, S>(mut self, cols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.drop_columns = cols.into_iter().map(Into::into).collect();
        self
    }
}

/// Reads a header-first, comma-delimited CSV into a [`Dataset`].
pub fn load_csv<F: Scalar>(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset<F>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, opts)
}

pub(crate) fn read_csv<F: Scalar, R: std::io::Read>(
    reader: R,
    opts: &CsvOptions,
) -> Result<Dataset<F>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();

    let mut seen = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        if seen.insert(h.as_str(), i).is_some() {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let label_idx = *seen
        .get(opts.label_column.as_str())
        .ok_or_else(|| Error::MissingLabelColumn(opts.label_column.clone()))?;
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && !opts.drop_columns.contains(&header[i]))
        .collect();

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let label = record.get(label_idx).unwrap_or("").trim();
        y.push(u8::from(opts.positive_labels.contains(label)));
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: header[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteCell {
                    row,
                    column: header[c].clone(),
                    value: cell.to_string(),
                });
            }
            x.push(F::of(v));
        }
    }
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    Dataset::new(names, x, y)
}

/// Writes the dataset with a trailing `Label` column holding 0/1. Values use
/// 17 significant digits so `f64` data reads back bit-for-bit.
pub fn write_csv<F: Scalar>(
    d: &Dataset<F>,
    path: impl AsRef<Path>,
    label_column: &str,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
    write_csv_to(d, &mut file, label_column).map_err(io_err)?;
    file.flush().map_err(io_err)
}

pub(crate) fn write_csv_to<F: Scalar, W: Write>(
    d: &Dataset<F>,
    w: &mut W,
    label_column: &str,
) -> std::io::Result<()> {
    let mut line = d.feature_names().join(",");
    if !line.is_empty() {
        line.push(',');
    }
    line.push_str(label_column);
    writeln!(w, "{line}")?;
    for (row, &label) in d.rows().zip(d.labels()) {
        for v in row {
            write!(w, "{:.16e},", v.as_f64())?;
        }
        writeln!(w, "{label}")?;
    }
    Ok(())
}
