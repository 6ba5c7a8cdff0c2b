//! Independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use neopain::fusion::{Indicator, IndicatorDecision};
use neopain::scales::PainLabel;
use neopain::tensor::{Module, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn grad_close(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= 1e-6 || diff <= 1e-3 * analytic.abs().max(numeric.abs())
}

/// Central difference, or at a kink (ReLU at exactly zero, a max-pool tie)
/// whichever one-sided difference the analytic value matches.
fn agrees(analytic: f64, plus: f64, base: f64, minus: f64, h: f64) -> Option<f64> {
    let central = (plus - minus) / (2.0 * h);
    let one_sided = [(plus - base) / h, (base - minus) / h];
    if grad_close(analytic, central) || one_sided.iter().any(|&d| grad_close(analytic, d)) {
        None
    } else {
        Some(central)
    }
}

/// Compares analytic input and parameter gradients of `module` (inference
/// mode) with finite differences of `L = sum(r * y)`. Returns the first
/// mismatch as a message.
pub fn check_gradients(module: &mut dyn Module, input_shape: &[usize], rng: &mut ChaCha8Rng) -> Result<(), String> {
    let x = random_tensor(input_shape, rng);
    let y = module.forward(&x, false).map_err(|e| e.to_string())?;
    let r = random_tensor(y.shape(), rng);
    let loss = |m: &dyn Module, x: &Tensor| -> f64 {
        let y = m.infer(x).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    };
    for p in module.params_mut() {
        p.zero_grad();
    }
    let gx = module.backward(&r).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let base = loss(module, &x);
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp.data_mut()[i] += h;
        xm.data_mut()[i] -= h;
        if let Some(num) = agrees(gx.data()[i], loss(module, &xp), base, loss(module, &xm), h) {
            return Err(format!(
                "{} input {i}: analytic {} numeric {num}",
                module.name(),
                gx.data()[i]
            ));
        }
    }
    let analytic: Vec<Vec<f64>> = module
        .params()
        .iter()
        .map(|p| p.grad().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &g) in grads.iter().enumerate() {
            let orig = module.params()[pi].data()[j];
            module.params_mut()[pi].data_mut()[j] = orig + h;
            let lp = loss(module, &x);
            module.params_mut()[pi].data_mut()[j] = orig - h;
            let lm = loss(module, &x);
            module.params_mut()[pi].data_mut()[j] = orig;
            if let Some(num) = agrees(g, lp, base, lm, h) {
                return Err(format!("{} param {pi}[{j}]: analytic {g} numeric {num}", module.name()));
            }
        }
    }
    Ok(())
}

/// Periodic Hann window, written out independently.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// `|X_k|` for `k = 0..=n/2` of a windowed frame by the direct DFT sum.
pub fn dft_magnitudes(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, x) in frame.iter().enumerate() {
                let a = -2.0 * PI * (k * t) as f64 / n as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn pairwise_auc(truth: &[PainLabel], scores: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (ti, si) in truth.iter().zip(scores) {
        for (tj, sj) in truth.iter().zip(scores) {
            if ti.is_pain() && !tj.is_pain() {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Majority vote over present decisions; a tie goes to the side holding
/// the most confident single decision, then to the mean probability.
pub fn brute_force_fusion(decisions: &[Option<(bool, f64)>]) -> Option<(bool, f64)> {
    let present: Vec<(bool, f64)> = decisions.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let mean = present.iter().map(|d| d.1).sum::<f64>() / present.len() as f64;
    let votes_pain = present.iter().filter(|d| d.0).count();
    let votes_calm = present.len() - votes_pain;
    let label = if votes_pain * 2 > present.len() {
        true
    } else if votes_calm * 2 > present.len() {
        false
    } else {
        let conf = |p: f64| if p >= 0.5 { p } else { 1.0 - p };
        let best_pain = present.iter().filter(|d| d.0).map(|d| conf(d.1)).fold(-1.0, f64::max);
        let best_calm = present.iter().filter(|d| !d.0).map(|d| conf(d.1)).fold(-1.0, f64::max);
        if best_pain != best_calm {
            best_pain > best_calm
        } else {
            mean >= 0.5
        }
    };
    Some((label, mean))
}

pub fn decision(ind: Indicator, p: f64) -> IndicatorDecision {
    IndicatorDecision::new(ind, p)
}

/// Support-weighted precision, recall, F1 and accuracy from explicit
/// per-class counts.
pub fn weighted_oracle(truth: &[bool], pred: &[bool]) -> [f64; 4] {
    let n = truth.len() as f64;
    let mut out = [0.0; 4];
    let acc = truth.iter().zip(pred).filter(|(a, b)| a == b).count() as f64 / n;
    for class in [true, false] {
        let tp = truth
            .iter()
            .zip(pred)
            .filter(|&(&t, &p)| t == class && p == class)
            .count() as f64;
        let predicted = pred.iter().filter(|&&p| p == class).count() as f64;
        let support = truth.iter().filter(|&&t| t == class).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if support > 0.0 { tp / support } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        out[0] += support / n * precision;
        out[1] += support / n * recall;
        out[2] += support / n * f1;
    }
    out[3] = acc;
    out
}
