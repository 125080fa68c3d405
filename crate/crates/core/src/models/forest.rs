//! Random forest of unpruned Gini trees on bootstrap samples.
//!
//! Tree `t` draws all of its randomness from a ChaCha stream keyed by
//! `(seed, t)`, so trees can be grown in parallel without changing the result.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Dense;

pub fn default_max_features(n_features: usize) -> usize {
    ((n_features as f64).sqrt().floor() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Fraction of trees voting for each class.
    pub fn vote_fractions(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        let n = self.trees.len() as f64;
        votes.into_iter().map(|v| v as f64 / n).collect()
    }
}

pub fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

pub fn fit(x: Dense<'_>, y: &[usize], n_classes: usize, cfg: &ForestConfig) -> Forest {
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(cfg.seed, t);
            let sample: Vec<usize> = (0..x.n_rows).map(|_| rng.gen_range(0..x.n_rows)).collect();
            grow_tree(x, y, n_classes, sample, cfg, &mut rng)
        })
        .collect();
    Forest { n_classes, trees }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Best threshold on one feature by weighted child Gini; `None` when the
/// feature is constant on `idx`.
fn best_threshold(
    x: Dense<'_>,
    y: &[usize],
    n_classes: usize,
    idx: &[usize],
    feature: usize,
    parent: &[usize],
) -> Option<(f64, f64)> {
    let mut vals: Vec<(f64, usize)> = idx.iter().map(|&i| (x.row(i)[feature], y[i])).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    if vals.first()?.0 == vals.last()?.0 {
        return None;
    }
    let n = vals.len();
    let mut left = vec![0usize; n_classes];
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        left[vals[i].1] += 1;
        if vals[i].0 == vals[i + 1].0 {
            continue;
        }
        let nl = i + 1;
        let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
        let score = nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl);
        if best.map_or(true, |(s, _)| score < s) {
            let (a, b) = (vals[i].0, vals[i + 1].0);
            let mut mid = a + (b - a) / 2.0;
            if mid >= b {
                mid = a;
            }
            best = Some((score, mid));
        }
    }
    best
}

fn grow_tree(
    x: Dense<'_>,
    y: &[usize],
    n_classes: usize,
    sample: Vec<usize>,
    cfg: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes = Vec::new();
    let mut stack = vec![(sample, None::<(usize, bool)>)];
    let mut features: Vec<usize> = (0..x.n_cols).collect();
    while let Some((idx, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = id;
                } else {
                    *right = id;
                }
            }
        }
        let mut counts = vec![0usize; n_classes];
        for &i in &idx {
            counts[y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let mut choice: Option<SplitChoice> = None;
        if !pure && idx.len() >= cfg.min_samples_split {
            features.shuffle(rng);
            let mut tried = 0;
            for &f in features.iter() {
                if tried >= cfg.max_features {
                    break;
                }
                if let Some((score, threshold)) = best_threshold(x, y, n_classes, &idx, f, &counts) {
                    tried += 1;
                    if choice.as_ref().map_or(true, |c| score < c.score) {
                        choice = Some(SplitChoice {
                            feature: f,
                            threshold,
                            score,
                        });
                    }
                }
            }
        }
        match choice {
            Some(c) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| x.row(i)[c.feature] <= c.threshold);
                nodes.push(Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                stack.push((r, Some((id, false))));
                stack.push((l, Some((id, true))));
            }
            None => nodes.push(Node::Leaf {
                class: majority(&counts),
            }),
        }
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0], 4), 0.0);
        assert_eq!(gini(&[2, 2], 4), 0.5);
        assert!((gini(&[1, 1, 1], 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_tree_memorizes_distinct_rows() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0, 1, 0, 1, 1, 0];
        let cfg = ForestConfig {
            n_trees: 1,
            max_features: 1,
            min_samples_split: 2,
            seed: 0,
        };
        let mut rng = tree_rng(0, 0);
        let t = grow_tree(Dense::new(&x, 1), &y, 2, (0..6).collect(), &cfg, &mut rng);
        for i in 0..6 {
            assert_eq!(t.predict(&x[i..i + 1]), y[i]);
        }
    }

    #[test]
    fn threshold_between_distinct_values() {
        let x = [1.0, 1.0, 3.0, 3.0];
        let y = [0, 0, 1, 1];
        let (score, thr) =
            best_threshold(Dense::new(&x, 1), &y, 2, &[0, 1, 2, 3], 0, &[2, 2]).unwrap();
        assert_eq!(score, 0.0);
        assert_eq!(thr, 2.0);
        assert!(best_threshold(Dense::new(&x, 1), &y, 2, &[0, 1], 0, &[2, 0]).is_none());
    }

    #[test]
    fn schedule_independent() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
        let y: Vec<usize> = (0..100).map(|i| (i * 7) % 3).collect();
        let cfg = ForestConfig {
            n_trees: 20,
            max_features: 1,
            min_samples_split: 2,
            seed: 42,
        };
        let par = fit(Dense::new(&x, 2), &y, 3, &cfg);
        let one_thread = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| fit(Dense::new(&x, 2), &y, 3, &cfg));
        assert_eq!(par, one_thread);
    }
}
