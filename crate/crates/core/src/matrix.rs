//! Named, row-keyed feature matrices and their CSV form.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("{path}: row {row}: {reason}")]
    Import {
        path: PathBuf,
        row: usize,
        reason: String,
    },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("duplicate feature name {0:?}")]
    DuplicateName(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Dense row-major matrix. Rows are samples, columns are named features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    sample_ids: Vec<String>,
    feature_names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(
        sample_ids: Vec<String>,
        feature_names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self, MatrixError> {
        if values.len() != sample_ids.len() * feature_names.len() {
            return Err(MatrixError::Shape(format!(
                "{} values for {}x{} matrix",
                values.len(),
                sample_ids.len(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &sample_ids {
            if !seen.insert(id.as_str()) {
                return Err(MatrixError::DuplicateId(id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(MatrixError::DuplicateName(name.clone()));
            }
        }
        let width = feature_names.len();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: i / width,
                col: i % width,
            });
        }
        Ok(FeatureMatrix {
            sample_ids,
            feature_names,
            values,
        })
    }

    pub fn from_rows(
        sample_ids: Vec<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, MatrixError> {
        let width = feature_names.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(MatrixError::Shape(format!(
                "row {i} has {} values, expected {width}",
                r.len()
            )));
        }
        Self::new(sample_ids, feature_names, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.sample_ids.iter().position(|s| s == id)
    }

    /// New matrix with the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            values,
        }
    }

    /// Reorders rows to follow `ids`, which must be a permutation of the
    /// matrix's own ids.
    pub fn reorder(&self, ids: &[String]) -> Result<FeatureMatrix, MatrixError> {
        if ids.len() != self.n_rows() {
            return Err(MatrixError::Shape(format!(
                "{} ids requested from a {}-row matrix",
                ids.len(),
                self.n_rows()
            )));
        }
        let index: std::collections::HashMap<&str, usize> = self
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let idx = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| MatrixError::Shape(format!("unknown sample id {id:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.select_rows(&idx))
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self, MatrixError> {
        if names.len() != self.n_cols() {
            return Err(MatrixError::Shape("feature name count changed".into()));
        }
        self.feature_names = names;
        Ok(self)
    }

    /// CSV with header `sample_id,<name>...`. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sample_id".to_owned()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).expect("write to Vec");
        for (i, id) in self.sample_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).expect("write to Vec");
        }
        String::from_utf8(w.into_inner().expect("flush Vec")).expect("csv output is UTF-8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MatrixError> {
        let io = |source| MatrixError::Io {
            path: path.to_owned(),
            source,
        };
        let mut f = fs::File::create(path).map_err(io)?;
        f.write_all(self.to_csv_string().as_bytes()).map_err(io)
    }
}

/// Reads the CSV schema written by [`FeatureMatrix::write_csv`].
pub fn import_features(path: &Path) -> Result<FeatureMatrix, MatrixError> {
    let text = fs::read_to_string(path).map_err(|source| MatrixError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_features_csv(&text, path)
}

pub fn parse_features_csv(text: &str, path: &Path) -> Result<FeatureMatrix, MatrixError> {
    let err = |row: usize, reason: String| MatrixError::Import {
        path: path.to_owned(),
        row,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.get(0) != Some("sample_id") {
        return Err(err(1, "first header column must be sample_id".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(err(1, format!("duplicate feature name {n:?}")));
        }
    }
    let mut ids = Vec::new();
    let mut id_set = HashSet::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| err(row, e.to_string()))?;
        if rec.len() != names.len() + 1 {
            return Err(err(
                row,
                format!("ragged row: {} fields, expected {}", rec.len(), names.len() + 1),
            ));
        }
        let id = rec[0].to_owned();
        if !id_set.insert(id.clone()) {
            return Err(err(row, format!("duplicate sample_id {id:?}")));
        }
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| err(row, format!("non-numeric cell {cell:?} in {}", names[j])))?;
            if !v.is_finite() {
                return Err(err(row, format!("non-finite cell {cell:?} in {}", names[j])));
            }
            values.push(v);
        }
        ids.push(id);
    }
    FeatureMatrix::new(ids, names, values)
}
