//! Bradley-Terry scoring of pairwise win counts and Pearson correlation
//! between score vectors.

mod bradley_terry;
mod correlation;
pub mod published;
mod report;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bradley_terry::{
    fit_bradley_terry, fit_bradley_terry_with, gradient, log_likelihood, observed_information,
    preference_probability, Anchor, FitOptions,
};
pub use correlation::{pearson, CorrelationReport};
pub use report::{read_scores_csv, render_table, write_scores_csv};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("win matrix has {items} items, need at least 2")]
    TooFewItems { items: usize },

    #[error("win matrix is malformed: {0}")]
    Malformed(String),

    #[error("comparison graph is disconnected: components {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },

    /// Some scores run off to infinity. `above` never lose against the rest,
    /// `below` never win.
    #[error("degenerate win matrix, MLE does not exist: unbounded above {above:?}, below {below:?}")]
    Degenerate { above: Vec<usize>, below: Vec<usize> },

    #[error("MM iteration stopped after {iterations} iterations, gradient norm {gradient:e}")]
    NotConverged { iterations: usize, gradient: f64 },

    #[error("anchor index {anchor} out of range for {items} items")]
    InvalidAnchor { anchor: usize, items: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("correlation needs at least 3 samples, got {0}")]
    TooFewSamples(usize),

    #[error("correlation undefined: zero variance")]
    ZeroVariance,

    #[error("score files disagree on items: {0}")]
    ItemMismatch(String),
}

/// Pairwise win counts. `get(i, j)` is how often item i was preferred over j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinMatrix {
    pub items: Vec<String>,
    counts: Vec<u64>,
}

impl WinMatrix {
    pub fn zeros(items: Vec<String>) -> Self {
        let m = items.len();
        Self { items, counts: vec![0; m * m] }
    }

    /// Items are named `0`, `1`, ...
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, AnalyticsError> {
        let items = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::with_items(items, rows)
    }

    pub fn with_items(items: Vec<String>, rows: &[Vec<u64>]) -> Result<Self, AnalyticsError> {
        let m = items.len();
        if rows.len() != m {
            return Err(AnalyticsError::LengthMismatch(rows.len(), m));
        }
        let mut w = Self::zeros(items);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(AnalyticsError::Malformed(format!("row {i} has {} entries", row.len())));
            }
            if row[i] != 0 {
                return Err(AnalyticsError::Malformed(format!("nonzero diagonal at {i}")));
            }
            w.counts[i * m..(i + 1) * m].copy_from_slice(row);
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.len() + j]
    }

    pub fn add(&mut self, winner: usize, loser: usize, n: u64) {
        assert_ne!(winner, loser, "an item cannot beat itself");
        let m = self.len();
        self.counts[winner * m + loser] += n;
    }

    /// Comparisons between i and j in either direction.
    #[inline]
    pub fn games(&self, i: usize, j: usize) -> u64 {
        self.get(i, j) + self.get(j, i)
    }

    pub fn wins(&self, i: usize) -> u64 {
        (0..self.len()).map(|j| self.get(i, j)).sum()
    }

    pub fn losses(&self, i: usize) -> u64 {
        (0..self.len()).map(|j| self.get(j, i)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.len().max(1)).map(<[u64]>::to_vec).collect()
    }

    /// Relabels items so that new item `k` is old item `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.len();
        assert_eq!(perm.len(), m);
        let mut out = Self::zeros(perm.iter().map(|&p| self.items[p].clone()).collect());
        for a in 0..m {
            for b in 0..m {
                out.counts[a * m + b] = self.get(perm[a], perm[b]);
            }
        }
        out
    }
}

/// Fitted scores with standard errors. The anchor item sits at 0 with SE 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub items: Vec<String>,
    pub scores: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub anchor: usize,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score_of(&self, item: &str) -> Option<f64> {
        self.items.iter().position(|x| x == item).map(|i| self.scores[i])
    }

    /// Scores of `other`'s items in `other`'s order, for pairing two studies.
    pub fn aligned_to(&self, other: &ScoreVector) -> Result<Vec<f64>, AnalyticsError> {
        if self.len() != other.len() {
            return Err(AnalyticsError::ItemMismatch(format!("{} vs {} items", self.len(), other.len())));
        }
        other
            .items
            .iter()
            .map(|id| self.score_of(id).ok_or_else(|| AnalyticsError::ItemMismatch(format!("missing item {id:?}"))))
            .collect()
    }
}
