//! Four classifiers behind one train / predict / score interface.
//!
//! Labels are class indices (`usize`). A trained model keeps the sorted list
//! of classes it saw; score columns follow that list.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::matrix::FeatureMatrix;

pub mod forest;
pub mod knn;
pub mod linsvc;
pub mod logreg;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training labels contain a single class ({0}); need at least two")]
    SingleClass(usize),
    #[error("{rows} feature rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("model expects {expected} features, got {found}")]
    Width { expected: usize, found: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Logreg,
    Linsvc,
    Rforest,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Logreg,
        ClassifierKind::Linsvc,
        ClassifierKind::Rforest,
        ClassifierKind::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Logreg => "logreg",
            ClassifierKind::Linsvc => "linsvc",
            ClassifierKind::Rforest => "rforest",
            ClassifierKind::Knn => "knn",
        }
    }
}

fn one() -> f64 {
    1.0
}
fn tol() -> f64 {
    1e-4
}
fn max_iter() -> usize {
    5000
}
fn n_trees() -> usize {
    100
}
fn min_split() -> usize {
    2
}
fn five() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Hyperparameters {
    Logreg {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "tol")]
        tol: f64,
        #[serde(default = "max_iter")]
        max_iter: usize,
    },
    Linsvc {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "tol")]
        tol: f64,
        #[serde(default = "max_iter")]
        max_iter: usize,
    },
    Rforest {
        #[serde(default = "n_trees")]
        n_trees: usize,
        /// Candidate features per split; `None` means floor(sqrt(d)).
        #[serde(default)]
        max_features: Option<usize>,
        #[serde(default = "min_split")]
        min_samples_split: usize,
    },
    Knn {
        #[serde(default = "five")]
        k: usize,
    },
}

impl Hyperparameters {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Logreg => Hyperparameters::Logreg {
                c: 1.0,
                tol: 1e-4,
                max_iter: 5000,
            },
            ClassifierKind::Linsvc => Hyperparameters::Linsvc {
                c: 1.0,
                tol: 1e-4,
                max_iter: 5000,
            },
            ClassifierKind::Rforest => Hyperparameters::Rforest {
                n_trees: 100,
                max_features: None,
                min_samples_split: 2,
            },
            ClassifierKind::Knn => Hyperparameters::Knn { k: 5 },
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::Logreg { .. } => ClassifierKind::Logreg,
            Hyperparameters::Linsvc { .. } => ClassifierKind::Linsvc,
            Hyperparameters::Rforest { .. } => ClassifierKind::Rforest,
            Hyperparameters::Knn { .. } => ClassifierKind::Knn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::Hyperparameter(m));
        match *self {
            Hyperparameters::Logreg { c, tol, max_iter }
            | Hyperparameters::Linsvc { c, tol, max_iter } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("C must be positive, got {c}"));
                }
                if !(tol > 0.0) {
                    return bad(format!("tol must be positive, got {tol}"));
                }
                if max_iter == 0 {
                    return bad("max_iter must be at least 1".into());
                }
            }
            Hyperparameters::Rforest {
                n_trees,
                max_features,
                min_samples_split,
            } => {
                if n_trees == 0 {
                    return bad("n_trees must be at least 1".into());
                }
                if max_features == Some(0) {
                    return bad("max_features must be at least 1".into());
                }
                if min_samples_split < 2 {
                    return bad("min_samples_split must be at least 2".into());
                }
            }
            Hyperparameters::Knn { k } => {
                if k == 0 {
                    return bad("k must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierSpec {
            params: Hyperparameters::default_for(kind),
            seed,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }
}

/// Borrowed row-major training data.
#[derive(Debug, Clone, Copy)]
pub struct Dense<'a> {
    pub values: &'a [f64],
    pub n_rows: usize,
    pub n_cols: usize,
}

impl<'a> Dense<'a> {
    pub fn new(values: &'a [f64], n_cols: usize) -> Self {
        let n_rows = if n_cols == 0 { 0 } else { values.len() / n_cols };
        Dense {
            values,
            n_rows,
            n_cols,
        }
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }
}

impl<'a> From<&'a FeatureMatrix> for Dense<'a> {
    fn from(m: &'a FeatureMatrix) -> Self {
        Dense {
            values: m.values(),
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Params {
    Logreg(logreg::LinearParams),
    Linsvc(logreg::LinearParams),
    Rforest(forest::Forest),
    Knn(knn::KnnIndex),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    /// Sorted class indices; score columns follow this order.
    pub classes: Vec<usize>,
    pub n_features: usize,
    pub params: Params,
}

fn check_finite(x: Dense<'_>) -> Result<()> {
    if let Some(i) = x.values.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite {
            row: i / x.n_cols.max(1),
            col: i % x.n_cols.max(1),
        });
    }
    Ok(())
}

/// Maps labels to positions in the sorted class list.
pub(crate) fn encode_labels(y: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let encoded = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();
    (classes, encoded)
}

pub fn train(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[usize]) -> Result<TrainedModel> {
    train_dense(spec, x.into(), y)
}

pub fn train_dense(spec: &ClassifierSpec, x: Dense<'_>, y: &[usize]) -> Result<TrainedModel> {
    spec.params.validate()?;
    if x.n_rows != y.len() {
        return Err(ModelError::LabelCount {
            rows: x.n_rows,
            labels: y.len(),
        });
    }
    check_finite(x)?;
    let (classes, yk) = encode_labels(y);
    if classes.len() < 2 {
        return Err(ModelError::SingleClass(classes.first().copied().unwrap_or(0)));
    }
    let k = classes.len();
    let params = match spec.params {
        Hyperparameters::Logreg { c, tol, max_iter } => {
            Params::Logreg(logreg::fit(x, &yk, k, c, tol, max_iter).params)
        }
        Hyperparameters::Linsvc { c, tol, max_iter } => {
            Params::Linsvc(linsvc::fit(x, &yk, k, c, tol, max_iter, spec.seed))
        }
        Hyperparameters::Rforest {
            n_trees,
            max_features,
            min_samples_split,
        } => {
            let mf = max_features.unwrap_or_else(|| forest::default_max_features(x.n_cols));
            Params::Rforest(forest::fit(
                x,
                &yk,
                k,
                &forest::ForestConfig {
                    n_trees,
                    max_features: mf,
                    min_samples_split,
                    seed: spec.seed,
                },
            ))
        }
        Hyperparameters::Knn { k: neighbours } => {
            Params::Knn(knn::KnnIndex::new(x, &yk, k, neighbours))
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: *spec,
        classes,
        n_features: x.n_cols,
        params,
    })
}

impl TrainedModel {
    fn check_width(&self, x: Dense<'_>) -> Result<()> {
        if x.n_cols != self.n_features {
            return Err(ModelError::Width {
                expected: self.n_features,
                found: x.n_cols,
            });
        }
        check_finite(x)
    }

    /// Row-major `n × classes.len()` scores.
    pub fn decision_scores(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.decision_scores_dense(x.into())
    }

    pub fn decision_scores_dense(&self, x: Dense<'_>) -> Result<Vec<Vec<f64>>> {
        self.check_width(x)?;
        Ok((0..x.n_rows)
            .map(|i| {
                let row = x.row(i);
                match &self.params {
                    Params::Logreg(p) => logreg::probabilities(p, row),
                    Params::Linsvc(p) => p.margins(row),
                    Params::Rforest(f) => f.vote_fractions(row),
                    Params::Knn(k) => k.query(row).fractions,
                }
            })
            .collect())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        self.predict_dense(x.into())
    }

    pub fn predict_dense(&self, x: Dense<'_>) -> Result<Vec<usize>> {
        self.check_width(x)?;
        Ok((0..x.n_rows)
            .map(|i| {
                let row = x.row(i);
                let pos = match &self.params {
                    Params::Knn(k) => k.query(row).winner,
                    Params::Logreg(p) => argmax(&logreg::probabilities(p, row)),
                    Params::Linsvc(p) => argmax(&p.margins(row)),
                    Params::Rforest(f) => argmax(&f.vote_fractions(row)),
                };
                self.classes[pos]
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel =
            serde_json::from_str(s).map_err(|e| ModelError::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}
