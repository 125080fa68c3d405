//! Shuffled stratified k-fold assignment, optionally keeping groups intact.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;

/// Fold id per sample. Each class is shuffled with `seed`, then the classes
/// are dealt round-robin over the folds in sequence, so every fold's count
/// of class `c` is `floor(n_c/k)` or `ceil(n_c/k)` and fold sizes differ by
/// at most one.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if k < 2 {
        return Err(EvalError::Plan(format!("k must be at least 2, got {k}")));
    }
    if y.len() < k {
        return Err(EvalError::TooFewSamples { n: y.len(), k });
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in y.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Like [`stratified_kfold`] but every sample of a group lands in the same
/// fold. Groups are shuffled, then placed greedily (largest first) in the
/// fold where they least increase the squared deviation from per-class
/// targets.
pub fn stratified_group_kfold(
    y: &[usize],
    groups: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    if k < 2 {
        return Err(EvalError::Plan(format!("k must be at least 2, got {k}")));
    }
    if groups.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: y.len(),
            right: groups.len(),
        });
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g.as_str()).or_default().push(i);
    }
    if members.len() < k {
        return Err(EvalError::TooFewSamples {
            n: members.len(),
            k,
        });
    }
    let mut order: Vec<Vec<usize>> = members.into_values().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|m| std::cmp::Reverse(m.len()));

    let mut totals = vec![0.0; n_classes];
    for &c in y {
        totals[c] += 1.0;
    }
    let target: Vec<f64> = totals.iter().map(|t| t / k as f64).collect();
    let mut counts = vec![vec![0.0; n_classes]; k];
    let mut sizes = vec![0usize; k];
    let mut fold = vec![0; y.len()];
    for group in order {
        let mut add = vec![0.0; n_classes];
        for &i in &group {
            add[y[i]] += 1.0;
        }
        let cost = |f: usize| -> f64 {
            (0..n_classes)
                .map(|c| {
                    let after = counts[f][c] + add[c] - target[c];
                    let before = counts[f][c] - target[c];
                    after * after - before * before
                })
                .sum()
        };
        let best = (0..k)
            .min_by(|&a, &b| {
                cost(a)
                    .total_cmp(&cost(b))
                    .then(sizes[a].cmp(&sizes[b]))
                    .then(a.cmp(&b))
            })
            .expect("k >= 2");
        for c in 0..n_classes {
            counts[best][c] += add[c];
        }
        sizes[best] += group.len();
        for &i in &group {
            fold[i] = best;
        }
    }
    Ok(fold)
}

/// `(train, test)` index lists for fold `f`.
pub fn split(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != f)
}
