use serde::{Deserialize, Serialize};

use super::{Classifier, LabeledDataset, Prediction};
use crate::error::{Error, Result};

const VAR_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with per-class feature means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    classes: Vec<usize>,
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(data: &LabeledDataset) -> Result<Self> {
        let classes = data.classes().to_vec();
        let dim = data.dim();
        let mut counts = vec![0usize; classes.len()];
        let mut means = vec![vec![0.0; dim]; classes.len()];
        for (row, &y) in data.features().iter().zip(data.labels()) {
            let c = data.class_index(y);
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        if counts.contains(&0) {
            return Err(Error::contract("every class needs at least one sample"));
        }
        for (m, &n) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
        let mut variances = vec![vec![0.0; dim]; classes.len()];
        for (row, &y) in data.features().iter().zip(data.labels()) {
            let c = data.class_index(y);
            for ((s, v), m) in variances[c].iter_mut().zip(row).zip(&means[c]) {
                *s += (v - m).powi(2);
            }
        }
        for (var, &n) in variances.iter_mut().zip(&counts) {
            var.iter_mut().for_each(|v| *v = (*v / n as f64).max(VAR_FLOOR));
        }
        let total = data.len() as f64;
        let log_priors = counts.iter().map(|&n| (n as f64 / total).ln()).collect();
        Ok(GaussianNb {
            classes,
            log_priors,
            means,
            variances,
        })
    }

    /// Unnormalised log posterior of each class.
    pub fn joint_log_likelihood(&self, query: &[f64]) -> Vec<f64> {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.log_priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(lp, (mu, var))| {
                lp + query
                    .iter()
                    .zip(mu.iter().zip(var))
                    .map(|(x, (m, v))| -0.5 * (ln_2pi + v.ln() + (x - m).powi(2) / v))
                    .sum::<f64>()
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn predict(&self, query: &[f64]) -> Result<Prediction> {
        if query.len() != self.means[0].len() {
            return Err(Error::contract(format!(
                "query has {} features, model expects {}",
                query.len(),
                self.means[0].len()
            )));
        }
        let jll = self.joint_log_likelihood(query);
        let top = jll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = jll.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = exp.iter().sum();
        let probs = exp.into_iter().map(|e| e / z).collect();
        Ok(Prediction::from_probabilities(self.classes.clone(), probs))
    }
}

pub fn gnb_fit_predict(train: &LabeledDataset, query: &[f64]) -> Result<Prediction> {
    train.check_query(query)?;
    GaussianNb::fit(train)?.predict(query)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicated_points_floor_the_variance() {
        let ds = LabeledDataset::new(vec![vec![1.0], vec![1.0], vec![5.0], vec![5.0]], vec![0, 0, 1, 1]).unwrap();
        let p = gnb_fit_predict(&ds, &[1.2]).unwrap();
        assert_eq!(p.label, 0);
        assert!(p.probabilities.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn symmetric_midpoint() {
        let ds = LabeledDataset::new(vec![vec![-1.0], vec![1.0], vec![9.0], vec![11.0]], vec![0, 0, 1, 1]).unwrap();
        let p = gnb_fit_predict(&ds, &[5.0]).unwrap();
        assert!((p.probabilities[0] - 0.5).abs() < 1e-9);
    }
}
