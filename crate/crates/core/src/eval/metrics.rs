use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scales::PainLabel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Confusion {
    pub fn from_labels(truth: &[PainLabel], pred: &[PainLabel]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::contract("no labels to score"));
        }
        if truth.len() != pred.len() {
            return Err(Error::contract(format!(
                "{} truths but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        let mut c = Confusion::default();
        for (t, p) in truth.iter().zip(pred) {
            match (t.is_pain(), p.is_pain()) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Pain-class true positive rate (0 without positives).
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Pain-class false positive rate (0 without negatives).
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

/// Support-weighted binary metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class precision, recall and F1 averaged with class-support weights;
/// undefined ratios count as 0.
pub fn weighted_metrics(truth: &[PainLabel], pred: &[PainLabel]) -> Result<WeightedMetrics> {
    let c = Confusion::from_labels(truth, pred)?;
    let n = c.total() as f64;
    // (true positives, predicted count, support) per class
    let classes = [(c.tp, c.tp + c.fp, c.tp + c.fn_), (c.tn, c.tn + c.fn_, c.tn + c.fp)];
    let mut m = WeightedMetrics {
        accuracy: (c.tp + c.tn) as f64 / n,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for (hit, predicted, support) in classes {
        let w = support as f64 / n;
        let p = ratio(hit, predicted);
        let r = ratio(hit, support);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        m.precision += w * p;
        m.recall += w * r;
        m.f1 += w * f;
    }
    Ok(m)
}

/// One operating point: pain is predicted when `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

fn ser_threshold<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum T {
        Num(f64),
        Text(String),
    }
    match T::deserialize(d)? {
        T::Num(v) => Ok(v),
        T::Text(s) if s == "inf" => Ok(f64::INFINITY),
        T::Text(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        T::Text(s) => Err(serde::de::Error::custom(format!("bad threshold {s:?}"))),
    }
}

/// ROC over thresholds `+inf`, midpoints between consecutive distinct
/// scores (descending) and `-inf`; AUC by the trapezoid rule.
pub fn roc_auc(truth: &[PainLabel], scores: &[f64]) -> Result<(Vec<RocPoint>, f64)> {
    if truth.len() != scores.len() {
        return Err(Error::contract(format!(
            "{} truths but {} scores",
            truth.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::contract("scores must be finite"));
    }
    let pos = truth.iter().filter(|t| t.is_pain()).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::contract("ROC needs at least one positive and one negative"));
    }
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    let mut thresholds = vec![f64::INFINITY];
    thresholds.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    thresholds.push(f64::NEG_INFINITY);
    let points: Vec<RocPoint> = thresholds
        .into_iter()
        .map(|th| {
            let (mut tp, mut fp) = (0, 0);
            for (t, s) in truth.iter().zip(scores) {
                if *s >= th {
                    if t.is_pain() {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            RocPoint {
                threshold: th,
                fpr: fp as f64 / neg as f64,
                tpr: tp as f64 / pos as f64,
            }
        })
        .collect();
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * 0.5 * (w[0].tpr + w[1].tpr))
        .sum();
    Ok((points, auc))
}

/// Cohen's kappa between two labelings.
pub fn kappa<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::contract("kappa needs two non-empty labelings of equal length"));
    }
    let n = a.len() as f64;
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut ma: BTreeMap<&T, f64> = BTreeMap::new();
    let mut mb: BTreeMap<&T, f64> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1.0 / n;
        *mb.entry(y).or_default() += 1.0 / n;
    }
    let pe: f64 = ma.iter().map(|(k, p)| p * mb.get(k).copied().unwrap_or(0.0)).sum();
    if (1.0 - pe).abs() < 1e-12 {
        return if po == 1.0 {
            Ok(1.0)
        } else {
            Err(Error::contract("kappa is undefined when chance agreement is 1"))
        };
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::contract("pearson needs two series of equal length >= 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::contract("pearson is undefined for a constant series"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
