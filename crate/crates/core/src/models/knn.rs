//! k-nearest-neighbour vote under Euclidean distance.
//!
//! Neighbours are ranked by distance; equal distances are ordered by class
//! and then by the stored feature vector, so the result does not depend on
//! the order of training rows. A vote tie goes to the tied class that owns
//! the nearest neighbour.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Dense;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnIndex {
    pub n_classes: usize,
    pub k: usize,
    pub n_features: usize,
    pub x: Vec<f64>,
    pub y: Vec<usize>,
}

pub struct Query {
    /// Neighbour vote fraction per class.
    pub fractions: Vec<f64>,
    pub winner: usize,
}

impl KnnIndex {
    pub fn new(x: Dense<'_>, y: &[usize], n_classes: usize, k: usize) -> Self {
        KnnIndex {
            n_classes,
            k,
            n_features: x.n_cols,
            x: x.values.to_vec(),
            y: y.to_vec(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    fn rank(&self, a: &(f64, usize), b: &(f64, usize)) -> Ordering {
        a.0.total_cmp(&b.0)
            .then(self.y[a.1].cmp(&self.y[b.1]))
            .then_with(|| {
                self.row(a.1)
                    .iter()
                    .zip(self.row(b.1))
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }

    /// Indices of the `k` nearest stored rows, nearest first.
    pub fn neighbours(&self, q: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..self.y.len())
            .map(|i| {
                let dist = self
                    .row(i)
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (dist, i)
            })
            .collect();
        let k = self.k.min(d.len());
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, |a, b| self.rank(a, b));
            d.truncate(k);
        }
        d.sort_by(|a, b| self.rank(a, b));
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn query(&self, q: &[f64]) -> Query {
        let nn = self.neighbours(q);
        let mut votes = vec![0usize; self.n_classes];
        for &i in &nn {
            votes[self.y[i]] += 1;
        }
        let top = *votes.iter().max().expect("at least one class");
        let winner = nn
            .iter()
            .map(|&i| self.y[i])
            .find(|&c| votes[c] == top)
            .expect("a neighbour holds the top vote");
        let n = nn.len() as f64;
        Query {
            fractions: votes.into_iter().map(|v| v as f64 / n).collect(),
            winner,
        }
    }
}
