//! Mini-batch training with Adam and early stopping on validation loss.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::tensor::{restore_params, snapshot_params, Adam, Module, Tensor};

const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Squared error on a linear output.
    Mse,
    /// Binary cross-entropy on a sigmoid output (soft targets allowed).
    Bce,
}

impl LossKind {
    pub fn value(self, y: f64, target: f64) -> f64 {
        match self {
            LossKind::Mse => (y - target).powi(2),
            LossKind::Bce => {
                let p = y.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
            }
        }
    }

    /// Derivative with respect to the network output `y`.
    pub fn grad(self, y: f64, target: f64) -> f64 {
        match self {
            LossKind::Mse => 2.0 * (y - target),
            LossKind::Bce => {
                let p = y.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                (p - target) / (p * (1.0 - p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Adam 1e-4, batch 16, up to 100 epochs, patience 10.
    pub fn spatial() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 16,
            max_epochs: 100,
            patience: 10,
            min_delta: 1e-4,
            seed: 0,
        }
    }

    /// As [`TrainConfig::spatial`] with batch size 1.
    pub fn temporal() -> Self {
        TrainConfig {
            batch_size: 1,
            ..TrainConfig::spatial()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            writeln!(s, "{},{},{}", e.epoch, e.train_loss, e.val_loss).expect("write to string");
        }
        s
    }
}

/// Trains `model` on `(input, target)` pairs produced by `prepare`.
///
/// `prepare` receives a generator while training (for augmentation) and
/// `None` for validation. When `val` is empty the training loss is
/// monitored instead. The weights of the best monitored epoch are restored
/// before returning.
pub fn fit<S, F>(
    model: &mut dyn Module,
    train: &[S],
    val: &[S],
    prepare: F,
    loss: LossKind,
    cfg: &TrainConfig,
) -> Result<TrainingCurve>
where
    F: Fn(&S, Option<&mut Rng>) -> Result<(Tensor, f64)>,
{
    if train.is_empty() {
        return Err(Error::data("no training samples"));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::contract("batch size and epoch count must be positive"));
    }
    let mut adam = Adam::new(cfg.learning_rate);
    for p in model.params_mut() {
        p.zero_grad();
    }
    let mut curve = TrainingCurve::default();
    let mut best = f64::INFINITY;
    let mut best_params = snapshot_params(model);
    let mut wait = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut stream(cfg.seed, "epoch-order", epoch as u64));
        let mut aug = stream(cfg.seed, "augment", epoch as u64);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for &i in batch {
                let (x, target) = prepare(&train[i], Some(&mut aug))?;
                let y = model.forward(&x, true)?.data()[0];
                total += loss.value(y, target);
                model.backward(&Tensor::vector(vec![loss.grad(y, target)]))?;
            }
            adam.step(model.params_mut(), batch.len())?;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = if val.is_empty() {
            train_loss
        } else {
            evaluate(model, val, &prepare, loss)?
        };
        curve.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best - cfg.min_delta {
            best = val_loss;
            best_params = snapshot_params(model);
            curve.best_epoch = epoch;
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                curve.stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    restore_params(model, &best_params)?;
    Ok(curve)
}

/// Mean loss in inference mode.
pub fn evaluate<S, F>(model: &dyn Module, samples: &[S], prepare: &F, loss: LossKind) -> Result<f64>
where
    F: Fn(&S, Option<&mut Rng>) -> Result<(Tensor, f64)>,
{
    let mut total = 0.0;
    for s in samples {
        let (x, target) = prepare(s, None)?;
        total += loss.value(model.infer(&x)?.data()[0], target);
    }
    Ok(total / samples.len().max(1) as f64)
}
