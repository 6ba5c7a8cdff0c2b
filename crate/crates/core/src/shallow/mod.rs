//! Baseline classifiers over fixed-length feature vectors.

mod forest;
mod gnb;
mod knn;

pub use forest::{rf_fit_predict, DecisionTree, RandomForest, RandomForestConfig};
pub use gnb::{gnb_fit_predict, GaussianNb};
pub use knn::{knn_predict, Knn, DEFAULT_K};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature rows with integer class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::contract("dataset is empty"));
        }
        if features.len() != labels.len() {
            return Err(Error::contract(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::contract("feature rows are empty"));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::contract(format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!("row {i} has a non-finite feature")));
            }
        }
        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        Ok(LabeledDataset {
            features,
            labels,
            classes,
        })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub(crate) fn class_index(&self, label: usize) -> usize {
        self.classes
            .binary_search(&label)
            .expect("label belongs to the class set")
    }

    pub(crate) fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.dim() {
            return Err(Error::contract(format!(
                "query has {} features, model expects {}",
                query.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A predicted label with one probability per training class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    pub classes: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    /// Highest probability wins; ties go to the smaller label.
    pub(crate) fn from_probabilities(classes: Vec<usize>, probabilities: Vec<f64>) -> Self {
        let mut best = 0;
        for (i, p) in probabilities.iter().enumerate() {
            if *p > probabilities[best] {
                best = i;
            }
        }
        Prediction {
            label: classes[best],
            classes,
            probabilities,
        }
    }

    /// Probability of `class`, zero when it never appeared in training.
    pub fn probability_of(&self, class: usize) -> f64 {
        self.classes
            .iter()
            .position(|&c| c == class)
            .map_or(0.0, |i| self.probabilities[i])
    }
}

pub trait Classifier: Send + Sync {
    fn predict(&self, query: &[f64]) -> Result<Prediction>;
}
