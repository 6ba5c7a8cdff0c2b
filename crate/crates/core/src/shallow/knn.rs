use super::{Classifier, LabeledDataset, Prediction};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 3;

/// K-nearest neighbours under Euclidean distance.
#[derive(Debug, Clone)]
pub struct Knn {
    data: LabeledDataset,
    k: usize,
}

impl Knn {
    pub fn fit(data: &LabeledDataset, k: usize) -> Result<Self> {
        if k == 0 || k > data.len() {
            return Err(Error::contract(format!(
                "k = {k} must be between 1 and the number of training samples ({})",
                data.len()
            )));
        }
        Ok(Knn { data: data.clone(), k })
    }
}

impl Classifier for Knn {
    /// Vote fractions among the k nearest; equal vote counts are broken by
    /// the smaller mean distance, then by the smaller label.
    fn predict(&self, query: &[f64]) -> Result<Prediction> {
        self.data.check_query(query)?;
        let mut dist: Vec<(f64, usize)> = self
            .data
            .features()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let classes = self.data.classes().to_vec();
        let mut votes = vec![0usize; classes.len()];
        let mut dist_sum = vec![0.0; classes.len()];
        for &(d, i) in &dist[..self.k] {
            let c = self.data.class_index(self.data.labels()[i]);
            votes[c] += 1;
            dist_sum[c] += d;
        }
        let mut best = 0;
        for c in 1..classes.len() {
            let better = votes[c] > votes[best]
                || (votes[c] == votes[best]
                    && votes[c] > 0
                    && dist_sum[c] / (votes[c] as f64) < dist_sum[best] / (votes[best] as f64));
            if better {
                best = c;
            }
        }
        let probabilities = votes.iter().map(|&v| v as f64 / self.k as f64).collect();
        Ok(Prediction {
            label: classes[best],
            classes,
            probabilities,
        })
    }
}

pub fn knn_predict(train: &LabeledDataset, query: &[f64], k: usize) -> Result<Prediction> {
    Knn::fit(train, k)?.predict(query)
}
