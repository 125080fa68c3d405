//! Multinomial logistic regression with an L2 penalty, fitted by L-BFGS.
//!
//! The minimized objective is the mean cross-entropy plus
//! `||W||² / (2·C·n)`; biases are not penalized. Every accepted step
//! satisfies the Armijo condition, so the objective never increases.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Dense;

/// Weights for `n_classes` linear scorers, row-major `n_classes × n_features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub n_classes: usize,
    pub n_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        LinearParams {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn class_weights(&self, k: usize) -> &[f64] {
        &self.weights[k * self.n_features..(k + 1) * self.n_features]
    }

    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| dot(self.class_weights(k), x) + self.bias[k])
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

pub fn probabilities(p: &LinearParams, x: &[f64]) -> Vec<f64> {
    let mut z = p.margins(x);
    softmax_in_place(&mut z);
    z
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub params: LinearParams,
    /// Objective value at the start and after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem<'a> {
    x: Dense<'a>,
    y: &'a [usize],
    k: usize,
    reg: f64,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.k * (self.x.n_cols + 1)
    }

    fn unpack(&self, theta: &[f64]) -> LinearParams {
        let d = self.x.n_cols;
        LinearParams {
            n_classes: self.k,
            n_features: d,
            weights: theta[..self.k * d].to_vec(),
            bias: theta[self.k * d..].to_vec(),
        }
    }

    /// Objective and gradient at `theta` (weights then biases).
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.x.n_cols;
        let n = self.x.n_rows as f64;
        let (w, b) = theta.split_at(self.k * d);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut z = vec![0.0; self.k];
        for i in 0..self.x.n_rows {
            let row = self.x.row(i);
            for c in 0..self.k {
                z[c] = dot(&w[c * d..(c + 1) * d], row) + b[c];
            }
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - z[self.y[i]];
            for c in 0..self.k {
                let r = (z[c] - lse).exp() - if c == self.y[i] { 1.0 } else { 0.0 };
                let r = r / n;
                if r != 0.0 {
                    for (g, x) in grad[c * d..(c + 1) * d].iter_mut().zip(row) {
                        *g += r * x;
                    }
                }
                grad[self.k * d + c] += r;
            }
        }
        let mut pen = 0.0;
        for (g, wv) in grad[..self.k * d].iter_mut().zip(w) {
            *g += self.reg * wv;
            pen += wv * wv;
        }
        loss / n + 0.5 * self.reg * pen
    }
}

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;

pub fn fit(x: Dense<'_>, y: &[usize], n_classes: usize, c: f64, tol: f64, max_iter: usize) -> Fit {
    let prob = Problem {
        x,
        y,
        k: n_classes,
        reg: 1.0 / (c * x.n_rows as f64),
    };
    let np = prob.n_params();
    let mut theta = vec![0.0; np];
    let mut grad = vec![0.0; np];
    let mut f = prob.eval(&theta, &mut grad);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut new_theta = vec![0.0; np];
    let mut new_grad = vec![0.0; np];

    while iterations < max_iter {
        if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < tol {
            converged = true;
            break;
        }
        // Two-loop recursion for the search direction.
        let mut q: Vec<f64> = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map(|(s, yv, _)| dot(s, yv) / dot(yv, yv))
            .unwrap_or_else(|| 1.0 / grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let bcoef = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - bcoef) * si;
            }
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }

        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-20 {
            for ((t, th), dv) in new_theta.iter_mut().zip(&theta).zip(&dir) {
                *t = th + step * dv;
            }
            let nf = prob.eval(&new_theta, &mut new_grad);
            if nf.is_finite() && nf <= f + ARMIJO * step * slope {
                let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
                    if history.len() == HISTORY {
                        history.pop_front();
                    }
                    history.push_back((s, yv, 1.0 / sy));
                }
                std::mem::swap(&mut theta, &mut new_theta);
                std::mem::swap(&mut grad, &mut new_grad);
                f = nf;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        trace.push(f);
        if !accepted {
            if history.is_empty() {
                break;
            }
            history.clear();
        }
    }
    if !converged && grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < tol {
        converged = true;
    }
    if !converged {
        log::debug!("logreg stopped after {iterations} iterations without reaching tol {tol}");
    }
    Fit {
        params: prob.unpack(&theta),
        objective_trace: trace,
        iterations,
        converged,
    }
}
