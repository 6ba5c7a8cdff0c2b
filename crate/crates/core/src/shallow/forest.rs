use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Classifier, LabeledDataset, Prediction};
use crate::error::Result;
use crate::rng::{derive_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`, at least 1.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        RandomForestConfig {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART tree with Gini splits grown until every leaf is pure or unsplittable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: Node,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: Vec<usize>,
    n_classes: usize,
    max_features: usize,
    rng: Rng,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

impl Builder<'_> {
    fn distribution(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Best (feature, threshold, weighted child impurity) over a random
    /// feature order; constant features do not count towards `max_features`.
    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut tried = 0;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
        for &f in &order {
            if tried == self.max_features {
                break;
            }
            sorted.clear();
            sorted.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            tried += 1;
            let n = sorted.len();
            let mut left = vec![0usize; self.n_classes];
            let mut right = self.distribution(idx);
            for s in 0..n - 1 {
                left[sorted[s].1] += 1;
                right[sorted[s].1] -= 1;
                if sorted[s].0 == sorted[s + 1].0 {
                    continue;
                }
                let nl = s + 1;
                let score = nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl);
                if best.is_none_or(|b| score < b.2) {
                    let mut threshold = 0.5 * (sorted[s].0 + sorted[s + 1].0);
                    if threshold >= sorted[s + 1].0 {
                        threshold = sorted[s].0;
                    }
                    best = Some((f, threshold, score));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, idx: &[usize]) -> Node {
        let counts = self.distribution(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let leaf = || Node::Leaf(counts.iter().map(|&c| c as f64 / idx.len() as f64).collect());
        if pure || idx.len() < 2 {
            return leaf();
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            return leaf();
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(&l)),
            right: Box::new(self.grow(&r)),
        }
    }
}

impl DecisionTree {
    /// Fits on the rows `sample` (repeats allowed). Class distributions are
    /// indexed by position in `data.classes()`.
    pub fn fit_on(data: &LabeledDataset, sample: &[usize], max_features: usize, seed: u64) -> Self {
        let y = data.labels().iter().map(|&l| data.class_index(l)).collect();
        let mut b = Builder {
            x: data.features(),
            y,
            n_classes: data.classes().len(),
            max_features: max_features.max(1),
            rng: Rng::seed_from_u64(seed),
        };
        DecisionTree { root: b.grow(sample) }
    }

    pub fn fit(data: &LabeledDataset, seed: u64) -> Self {
        let all: Vec<usize> = (0..data.len()).collect();
        DecisionTree::fit_on(data, &all, data.dim(), seed)
    }

    pub fn distribution(&self, query: &[f64]) -> &[f64] {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if query[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

/// Bagged Gini trees; each tree draws its bootstrap sample and feature
/// orders from its own seed derived from the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    classes: Vec<usize>,
    dim: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(data: &LabeledDataset, config: &RandomForestConfig) -> Result<Self> {
        let d = data.dim();
        let max_features = config
            .max_features
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
            .min(d);
        let n = data.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = crate::rng::stream(config.seed, "forest-bootstrap", t as u64);
                let sample: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let seed = derive_seed(config.seed, "forest-split", t as u64);
                DecisionTree::fit_on(data, &sample, max_features, seed)
            })
            .collect();
        Ok(RandomForest {
            classes: data.classes().to_vec(),
            dim: d,
            trees,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Classifier for RandomForest {
    fn predict(&self, query: &[f64]) -> Result<Prediction> {
        if query.len() != self.dim {
            return Err(crate::Error::contract(format!(
                "query has {} features, model expects {}",
                query.len(),
                self.dim
            )));
        }
        let mut probs = vec![0.0; self.classes.len()];
        for tree in &self.trees {
            for (p, v) in probs.iter_mut().zip(tree.distribution(query)) {
                *p += v;
            }
        }
        let n = self.trees.len() as f64;
        probs.iter_mut().for_each(|p| *p /= n);
        Ok(Prediction::from_probabilities(self.classes.clone(), probs))
    }
}

pub fn rf_fit_predict(train: &LabeledDataset, query: &[f64], n_trees: usize, seed: u64) -> Result<Prediction> {
    let config = RandomForestConfig {
        n_trees,
        seed,
        ..RandomForestConfig::default()
    };
    RandomForest::fit(train, &config)?.predict(query)
}
