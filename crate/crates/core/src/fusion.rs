//! Early fusion of acoustic and text feature matrices.

use std::collections::BTreeSet;

use crate::matrix::{FeatureMatrix, MatrixError};

pub const ACOUSTIC_PREFIX: &str = "ac:";
pub const TEXT_PREFIX: &str = "tx:";

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("sample ids differ; only in acoustic: {only_acoustic:?}; only in text: {only_text:?}")]
    IdMismatch {
        only_acoustic: Vec<String>,
        only_text: Vec<String>,
    },
    #[error("standardization needs at least one training row")]
    NoTrainingRows,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn prefixed<'a>(names: &'a [String], prefix: &str) -> impl Iterator<Item = String> + 'a {
    let prefix = prefix.to_owned();
    names.iter().map(move |n| format!("{prefix}{n}"))
}

/// Columns of `ac` then `tx`, rows in `ac` order, names prefixed `ac:`/`tx:`.
pub fn concat(ac: &FeatureMatrix, tx: &FeatureMatrix) -> Result<FeatureMatrix, FusionError> {
    let a: BTreeSet<&String> = ac.sample_ids().iter().collect();
    let t: BTreeSet<&String> = tx.sample_ids().iter().collect();
    if a != t {
        return Err(FusionError::IdMismatch {
            only_acoustic: a.difference(&t).map(|s| s.to_string()).collect(),
            only_text: t.difference(&a).map(|s| s.to_string()).collect(),
        });
    }
    let tx = tx.reorder(ac.sample_ids())?;
    let names = prefixed(ac.feature_names(), ACOUSTIC_PREFIX)
        .chain(prefixed(tx.feature_names(), TEXT_PREFIX))
        .collect();
    let mut values = Vec::with_capacity(ac.n_rows() * (ac.n_cols() + tx.n_cols()));
    for i in 0..ac.n_rows() {
        values.extend_from_slice(ac.row(i));
        values.extend_from_slice(tx.row(i));
    }
    Ok(FeatureMatrix::new(ac.sample_ids().to_vec(), names, values)?)
}

/// Per-column location and scale taken from training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &FeatureMatrix, train_rows: &[usize]) -> Result<Self, FusionError> {
        if train_rows.is_empty() {
            return Err(FusionError::NoTrainingRows);
        }
        let n = train_rows.len() as f64;
        let w = m.n_cols();
        let mut mean = vec![0.0; w];
        for &i in train_rows {
            for (s, x) in mean.iter_mut().zip(m.row(i)) {
                *s += x;
            }
        }
        mean.iter_mut().for_each(|s| *s /= n);
        let mut var = vec![0.0; w];
        for &i in train_rows {
            for ((s, x), mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
                *s += (x - mu) * (x - mu);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    /// Zero-variance columns are passed through unchanged.
    pub fn apply(&self, m: &FeatureMatrix) -> FeatureMatrix {
        let w = m.n_cols();
        let values: Vec<f64> = m
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = i % w;
                if self.std[c] > 0.0 {
                    (x - self.mean[c]) / self.std[c]
                } else {
                    x
                }
            })
            .collect();
        FeatureMatrix::new(m.sample_ids().to_vec(), m.feature_names().to_vec(), values)
            .expect("standardizing preserves shape and finiteness")
    }
}

pub fn standardize(m: &FeatureMatrix, train_rows: &[usize]) -> Result<FeatureMatrix, FusionError> {
    Ok(Standardizer::fit(m, train_rows)?.apply(m))
}
