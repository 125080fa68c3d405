//! Repeated stratified k-fold cross-validation.
//!
//! Run `r` shuffles with seed `base_seed + r`. Every (run, fold) pair is an
//! isolated job: it builds its own design matrix from the training rows
//! (TF-IDF, standardization) and trains every classifier on it. Jobs may run
//! in parallel; results are assembled in (run, fold) order so the report does
//! not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{self, split};
use super::metrics::{self, Averaging};
use super::EvalError;
use crate::features::FeatureSet;
use crate::models::{self, ClassifierSpec};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    None,
    ByInterview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvPlan {
    pub k: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub grouping: Grouping,
}

impl Default for CvPlan {
    fn default() -> Self {
        CvPlan {
            k: 5,
            runs: 5,
            base_seed: 0,
            grouping: Grouping::None,
        }
    }
}

impl CvPlan {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.k < 2 {
            return Err(EvalError::Plan(format!("k must be at least 2, got {}", self.k)));
        }
        if self.runs < 1 {
            return Err(EvalError::Plan("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    /// Fold id per sample for one run.
    pub fn assign(&self, y: &[usize], groups: &[String], run: usize) -> Result<Vec<usize>, EvalError> {
        match self.grouping {
            Grouping::None => folds::stratified_kfold(y, self.k, self.run_seed(run)),
            Grouping::ByInterview => {
                folds::stratified_group_kfold(y, groups, self.k, self.run_seed(run))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub sample_ids: Vec<String>,
    /// Class index per sample, into `class_names`.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Source interview per sample.
    pub groups: Vec<String>,
    pub features: FeatureSet,
}

impl Dataset {
    fn validate(&self) -> Result<(), EvalError> {
        let n = self.sample_ids.len();
        for len in [self.labels.len(), self.groups.len(), self.features.sample_ids.len()] {
            if len != n {
                return Err(EvalError::LengthMismatch { left: n, right: len });
            }
        }
        if self.features.sample_ids != self.sample_ids {
            return Err(EvalError::Plan(
                "feature set rows are not in dataset sample order".into(),
            ));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(EvalError::UnknownLabel(l));
        }
        Ok(())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.class_names.len()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldScores {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub micro_f1: f64,
}

impl FoldScores {
    pub fn get(&self, a: Averaging) -> f64 {
        match a {
            Averaging::Macro => self.macro_f1,
            Averaging::Weighted => self.weighted_f1,
            Averaging::Micro => self.micro_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub class: String,
    /// `None` when the class is absent (or the only class) in the run.
    pub auc: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub seed: u64,
    pub folds: Vec<FoldScores>,
    /// Out-of-fold prediction per sample.
    pub predictions: Vec<usize>,
    /// Out-of-fold decision scores per sample, one column per class.
    pub scores: Vec<Vec<f64>>,
    pub confusion: Vec<Vec<usize>>,
    pub roc: Vec<RocReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub run_means: Vec<f64>,
    /// Mean and population std over the run means.
    pub mean: f64,
    pub std: f64,
    /// Mean and population std over all fold scores.
    pub fold_mean: f64,
    pub fold_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub macro_f1: Aggregate,
    pub weighted_f1: Aggregate,
    pub micro_f1: Aggregate,
}

impl Summary {
    pub fn get(&self, a: Averaging) -> &Aggregate {
        match a {
            Averaging::Macro => &self.macro_f1,
            Averaging::Weighted => &self.weighted_f1,
            Averaging::Micro => &self.micro_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub name: String,
    pub spec: ClassifierSpec,
    pub runs: Vec<RunReport>,
    pub summary: Summary,
}

impl ClassifierReport {
    /// Fold scores in (run, fold) order.
    pub fn fold_scores(&self, a: Averaging) -> Vec<f64> {
        self.runs
            .iter()
            .flat_map(|r| r.folds.iter().map(move |f| f.get(a)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub format_version: u32,
    /// Free-form description of the feature set, filled in by the caller.
    pub features: String,
    pub headline_averaging: Averaging,
    pub plan: CvPlan,
    pub seeds: Vec<u64>,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub sample_ids: Vec<String>,
    pub labels: Vec<usize>,
    /// Fold id per sample, per run.
    pub fold_assignments: Vec<Vec<usize>>,
    pub classifiers: Vec<ClassifierReport>,
}

impl CvReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn classifier(&self, name: &str) -> Option<&ClassifierReport> {
        self.classifiers.iter().find(|c| c.name == name)
    }
}

fn mean_pstd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

pub fn aggregate(runs: &[RunReport], a: Averaging) -> Aggregate {
    let run_means: Vec<f64> = runs
        .iter()
        .map(|r| r.folds.iter().map(|f| f.get(a)).sum::<f64>() / r.folds.len() as f64)
        .collect();
    let all: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.folds.iter().map(move |f| f.get(a)))
        .collect();
    let (mean, std) = mean_pstd(&run_means);
    let (fold_mean, fold_std) = mean_pstd(&all);
    Aggregate {
        run_means,
        mean,
        std,
        fold_mean,
        fold_std,
    }
}

/// Unique display names: `kind`, or `kind#i` when a kind repeats.
pub fn classifier_names(specs: &[ClassifierSpec]) -> Vec<String> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let name = s.kind().name();
            if specs.iter().filter(|o| o.kind() == s.kind()).count() > 1 {
                format!("{name}#{i}")
            } else {
                name.to_owned()
            }
        })
        .collect()
}

struct FoldOutput {
    test: Vec<usize>,
    n_train: usize,
    n_features: usize,
    /// Per classifier: predictions and full-width scores for `test` rows.
    per_spec: Vec<(Vec<usize>, Vec<Vec<f64>>)>,
}

fn run_fold(
    ds: &Dataset,
    specs: &[ClassifierSpec],
    assignment: &[usize],
    fold: usize,
) -> Result<FoldOutput, EvalError> {
    let (train, test) = split(assignment, fold);
    let x = ds.features.materialize(&train)?;
    let xtr = x.select_rows(&train);
    let xte = x.select_rows(&test);
    let ytr: Vec<usize> = train.iter().map(|&i| ds.labels[i]).collect();
    let n_classes = ds.class_names.len();
    let per_spec = specs
        .iter()
        .map(|spec| {
            let model = models::train(spec, &xtr, &ytr)?;
            let preds = model.predict(&xte)?;
            let raw = model.decision_scores(&xte)?;
            let missing = match spec.kind() {
                models::ClassifierKind::Linsvc => f64::MIN,
                _ => 0.0,
            };
            let scores = raw
                .into_iter()
                .map(|row| {
                    let mut full = vec![missing; n_classes];
                    for (col, &c) in model.classes.iter().enumerate() {
                        full[c] = row[col];
                    }
                    full
                })
                .collect();
            Ok((preds, scores))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(FoldOutput {
        n_train: train.len(),
        n_features: x.n_cols(),
        test,
        per_spec,
    })
}

pub fn run_cv(ds: &Dataset, specs: &[ClassifierSpec], plan: &CvPlan) -> Result<CvReport, EvalError> {
    plan.validate()?;
    ds.validate()?;
    for s in specs {
        s.params.validate()?;
    }
    let n = ds.sample_ids.len();
    let n_classes = ds.class_names.len();
    let assignments = (0..plan.runs)
        .map(|r| plan.assign(&ds.labels, &ds.groups, r))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..plan.runs)
        .flat_map(|r| (0..plan.k).map(move |f| (r, f)))
        .collect();
    let outputs = jobs
        .par_iter()
        .map(|&(r, f)| run_fold(ds, specs, &assignments[r], f))
        .collect::<Result<Vec<_>, _>>()?;

    let names = classifier_names(specs);
    let mut classifiers = Vec::with_capacity(specs.len());
    for (s, spec) in specs.iter().enumerate() {
        let mut runs = Vec::with_capacity(plan.runs);
        for r in 0..plan.runs {
            let mut predictions = vec![usize::MAX; n];
            let mut scores = vec![Vec::new(); n];
            let mut fold_scores = Vec::with_capacity(plan.k);
            for f in 0..plan.k {
                let out = &outputs[r * plan.k + f];
                let (preds, sc) = &out.per_spec[s];
                let y_true: Vec<usize> = out.test.iter().map(|&i| ds.labels[i]).collect();
                let cm = metrics::confusion_matrix(&y_true, preds, n_classes)?;
                fold_scores.push(FoldScores {
                    fold: f,
                    n_train: out.n_train,
                    n_test: out.test.len(),
                    n_features: out.n_features,
                    macro_f1: metrics::f1_from_confusion(&cm, Averaging::Macro),
                    weighted_f1: metrics::f1_from_confusion(&cm, Averaging::Weighted),
                    micro_f1: metrics::f1_from_confusion(&cm, Averaging::Micro),
                });
                for (j, &i) in out.test.iter().enumerate() {
                    predictions[i] = preds[j];
                    scores[i] = sc[j].clone();
                }
            }
            debug_assert!(predictions.iter().all(|&p| p != usize::MAX));
            let confusion = metrics::confusion_matrix(&ds.labels, &predictions, n_classes)?;
            let roc = (0..n_classes)
                .map(|c| {
                    let col: Vec<f64> = scores.iter().map(|row| row[c]).collect();
                    match metrics::roc_curve(&ds.labels, &col, c) {
                        Ok(roc) => Ok(RocReport {
                            class: ds.class_names[c].clone(),
                            auc: Some(roc.auc),
                            points: roc.points,
                        }),
                        Err(EvalError::UndefinedAuc(_)) => Ok(RocReport {
                            class: ds.class_names[c].clone(),
                            auc: None,
                            points: Vec::new(),
                        }),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>, EvalError>>()?;
            runs.push(RunReport {
                run: r,
                seed: plan.run_seed(r),
                folds: fold_scores,
                predictions,
                scores,
                confusion,
                roc,
            });
        }
        let summary = Summary {
            macro_f1: aggregate(&runs, Averaging::Macro),
            weighted_f1: aggregate(&runs, Averaging::Weighted),
            micro_f1: aggregate(&runs, Averaging::Micro),
        };
        classifiers.push(ClassifierReport {
            name: names[s].clone(),
            spec: *spec,
            runs,
            summary,
        });
    }
    Ok(CvReport {
        format_version: REPORT_FORMAT_VERSION,
        features: String::new(),
        headline_averaging: Averaging::Weighted,
        plan: *plan,
        seeds: (0..plan.runs).map(|r| plan.run_seed(r)).collect(),
        class_names: ds.class_names.clone(),
        class_counts: ds.class_counts(),
        sample_ids: ds.sample_ids.clone(),
        labels: ds.labels.clone(),
        fold_assignments: assignments,
        classifiers,
    })
}
