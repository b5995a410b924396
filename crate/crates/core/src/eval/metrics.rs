//! One-vs-rest precision, recall and F1 with a 3x3 confusion matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASS_COUNT: usize = 3;

/// Rows are ground truth, columns are predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; CLASS_COUNT]; CLASS_COUNT],
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Input(format!(
                "{} ground-truth labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= CLASS_COUNT || p >= CLASS_COUNT {
                return Err(Error::Input(format!("class index {} out of range", t.max(p))));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..CLASS_COUNT).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    /// Each row divided by its support; rows without support stay zero.
    pub fn normalized(&self) -> [[f64; CLASS_COUNT]; CLASS_COUNT] {
        let mut out = [[0.0; CLASS_COUNT]; CLASS_COUNT];
        for (i, row) in self.counts.iter().enumerate() {
            let s = self.support(i);
            for (j, &c) in row.iter().enumerate() {
                out[i][j] = ratio(c, s);
            }
        }
        out
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }
}

/// `num / den`, or 0 when `den` is 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth examples of this class.
    pub support: u64,
    /// Set when the class never occurs in the ground truth, so recall is 0 by convention.
    pub zero_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub classes: [ClassMetrics; CLASS_COUNT],
    pub confusion: ConfusionMatrix,
    pub normalized_confusion: [[f64; CLASS_COUNT]; CLASS_COUNT],
}

impl Metrics {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let classes = std::array::from_fn(|k| {
            let tp = confusion.counts[k][k];
            let precision = ratio(tp, confusion.predicted(k));
            let recall = ratio(tp, confusion.support(k));
            ClassMetrics {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: confusion.support(k),
                zero_support: confusion.support(k) == 0,
            }
        });
        Self {
            accuracy: confusion.accuracy(),
            classes,
            normalized_confusion: confusion.normalized(),
            confusion,
        }
    }
}

/// Per-class metrics for equal-length, non-empty label vectors.
pub fn compute_metrics(truth: &[usize], predicted: &[usize]) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::Input("no labels to score".into()));
    }
    Ok(Metrics::from_confusion(ConfusionMatrix::from_labels(truth, predicted)?))
}
