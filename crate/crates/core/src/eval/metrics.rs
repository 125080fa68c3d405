//! F1 scores, confusion matrices and one-vs-rest ROC curves.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Macro,
    Weighted,
    Micro,
}

impl Averaging {
    pub const ALL: [Averaging; 3] = [Averaging::Macro, Averaging::Weighted, Averaging::Micro];

    pub fn name(self) -> &'static str {
        match self {
            Averaging::Macro => "macro",
            Averaging::Weighted => "weighted",
            Averaging::Micro => "micro",
        }
    }
}

fn check(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<(), EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if let Some(&l) = y_true.iter().chain(y_pred).find(|&&l| l >= n_classes) {
        return Err(EvalError::UnknownLabel(l));
    }
    Ok(())
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<usize>>, EvalError> {
    check(y_true, y_pred, n_classes)?;
    let mut cm = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm[t][p] += 1;
    }
    Ok(cm)
}

/// Per-class F1 from a confusion matrix; 0 when a class has no true or
/// predicted members.
pub fn per_class_f1(cm: &[Vec<usize>]) -> Vec<f64> {
    (0..cm.len())
        .map(|c| {
            let tp = cm[c][c];
            let predicted: usize = cm.iter().map(|r| r[c]).sum();
            let actual: usize = cm[c].iter().sum();
            let denom = predicted + actual;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        })
        .collect()
}

/// F1 from a confusion matrix. Macro averages over classes that occur in
/// either the truth or the predictions.
pub fn f1_from_confusion(cm: &[Vec<usize>], averaging: Averaging) -> f64 {
    let total: usize = cm.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    match averaging {
        Averaging::Micro => {
            let correct: usize = (0..cm.len()).map(|c| cm[c][c]).sum();
            correct as f64 / total as f64
        }
        Averaging::Macro => {
            let f1 = per_class_f1(cm);
            let present: Vec<usize> = (0..cm.len())
                .filter(|&c| cm[c].iter().sum::<usize>() + cm.iter().map(|r| r[c]).sum::<usize>() > 0)
                .collect();
            present.iter().map(|&c| f1[c]).sum::<f64>() / present.len() as f64
        }
        Averaging::Weighted => {
            let f1 = per_class_f1(cm);
            (0..cm.len())
                .map(|c| f1[c] * cm[c].iter().sum::<usize>() as f64)
                .sum::<f64>()
                / total as f64
        }
    }
}

pub fn f1_score(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    averaging: Averaging,
) -> Result<f64, EvalError> {
    let cm = confusion_matrix(y_true, y_pred, n_classes)?;
    Ok(f1_from_confusion(&cm, averaging))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    /// `(false positive rate, true positive rate)` from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// One-vs-rest ROC for `positive`, sweeping thresholds from the highest
/// score down. Tied scores move as one step; AUC is the trapezoid area.
pub fn roc_curve(y_true: &[usize], scores: &[f64], positive: usize) -> Result<Roc, EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let pos = y_true.iter().filter(|&&l| l == positive).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::UndefinedAuc(positive));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == positive {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (px, py) = *points.last().unwrap();
        let (x, y) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (x - px) * (y + py) / 2.0;
        points.push((x, y));
    }
    Ok(Roc { points, auc })
}
