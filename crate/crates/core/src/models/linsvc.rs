//! One-vs-rest linear SVM with squared hinge loss and L2 penalty.
//!
//! Each binary problem minimizes `0.5·||w||² + C·Σ max(0, 1 − yᵢ·w·x̃ᵢ)²`
//! where `x̃` carries a constant 1 so the bias is learned (and penalized)
//! like any other weight. It is solved in the dual by cyclic coordinate
//! descent over a seeded, fixed permutation of the samples. Training stops
//! when the spread of projected dual gradients over an epoch is at most
//! `tol`, or after `max_iter` epochs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::logreg::{dot, LinearParams};
use super::Dense;

pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    pub dual_trace: Vec<f64>,
}

pub fn fit_binary(
    x: Dense<'_>,
    positive: &[bool],
    c: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> BinaryFit {
    let n = x.n_rows;
    let d = x.n_cols;
    let diag = 1.0 / (2.0 * c);
    let sign: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let qii: Vec<f64> = (0..n)
        .map(|i| dot(x.row(i), x.row(i)) + 1.0 + diag)
        .collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // Dual objective in minimization form.
    let dual = |w: &[f64], b: f64, alpha: &[f64]| {
        0.5 * (dot(w, w) + b * b) + 0.5 * diag * dot(alpha, alpha) - alpha.iter().sum::<f64>()
    };
    let mut trace = vec![dual(&w, b, &alpha)];
    let mut epochs = 0;
    while epochs < max_iter {
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let row = x.row(i);
            let g = sign[i] * (dot(&w, row) + b) - 1.0 + diag * alpha[i];
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).max(0.0);
                let delta = (alpha[i] - old) * sign[i];
                if delta != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(row) {
                        *wj += delta * xj;
                    }
                    b += delta;
                }
            }
        }
        epochs += 1;
        trace.push(dual(&w, b, &alpha));
        if pg_max - pg_min <= tol {
            break;
        }
    }
    BinaryFit {
        weights: w,
        bias: b,
        epochs,
        dual_trace: trace,
    }
}

pub fn fit(
    x: Dense<'_>,
    y: &[usize],
    n_classes: usize,
    c: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> LinearParams {
    let mut params = LinearParams::zeros(n_classes, x.n_cols);
    // Two classes share one separating hyperplane, stored with opposite signs.
    let problems = if n_classes == 2 { 1 } else { n_classes };
    for k in 0..problems {
        let target = if n_classes == 2 { 1 } else { k };
        let positive: Vec<bool> = y.iter().map(|&l| l == target).collect();
        let fit = fit_binary(x, &positive, c, tol, max_iter, seed.wrapping_add(k as u64));
        if n_classes == 2 {
            params.weights[x.n_cols..].copy_from_slice(&fit.weights);
            params.bias[1] = fit.bias;
            for (dst, src) in params.weights[..x.n_cols].iter_mut().zip(&fit.weights) {
                *dst = -src;
            }
            params.bias[0] = -fit.bias;
        } else {
            params.weights[k * x.n_cols..(k + 1) * x.n_cols].copy_from_slice(&fit.weights);
            params.bias[k] = fit.bias;
        }
    }
    params
}
