//! Experiments over pooled out-of-fold predictions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::metrics::{roc_auc, weighted_metrics, Confusion, RocPoint, WeightedMetrics};
use crate::error::{Error, Result};
use crate::fusion::{fuse, Indicator, IndicatorDecision};
use crate::rng::stream;
use crate::scales::PainLabel;

pub const RANDOM_DROP_TRIALS: usize = 10;
pub const RANDOM_DROP_FRACTION: f64 = 0.25;
pub const FUSION_NAME: &str = "(F+B+S) + Decision Fusion";

/// Out-of-fold pain probabilities of one segment; an approach whose
/// modality is absent has no entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub sample_id: String,
    pub subject_id: String,
    pub label: PainLabel,
    pub probabilities: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionTable {
    pub rows: Vec<PredictionRow>,
}

impl PredictionTable {
    /// Adds every row of `other`, merging probabilities of shared samples.
    pub fn merge(&mut self, other: PredictionTable) -> Result<()> {
        let mut index: BTreeMap<String, usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.sample_id.clone(), i))
            .collect();
        for row in other.rows {
            match index.get(&row.sample_id) {
                Some(&i) => {
                    let mine = &mut self.rows[i];
                    if mine.label != row.label || mine.subject_id != row.subject_id {
                        return Err(Error::data(format!(
                            "sample {} disagrees between tables",
                            row.sample_id
                        )));
                    }
                    mine.probabilities.extend(row.probabilities);
                }
                None => {
                    index.insert(row.sample_id.clone(), self.rows.len());
                    self.rows.push(row);
                }
            }
        }
        self.rows.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        Ok(())
    }

    /// Approach names in first-seen order.
    pub fn approaches(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            for k in r.probabilities.keys() {
                if !out.contains(k) {
                    out.push(k.clone());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Unimodal,
    Multimodal,
    AllPresent,
    RandomDrop,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Unimodal,
        ExperimentKind::Multimodal,
        ExperimentKind::AllPresent,
        ExperimentKind::RandomDrop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Unimodal => "unimodal",
            ExperimentKind::Multimodal => "multimodal",
            ExperimentKind::AllPresent => "all-present",
            ExperimentKind::RandomDrop => "random-drop",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Which approach supplies each modality's decision for fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionPlan {
    pub face: String,
    pub body: String,
    pub sound: String,
}

impl FusionPlan {
    pub fn approach(&self, ind: Indicator) -> &str {
        match ind {
            Indicator::Face => &self.face,
            Indicator::Body => &self.body,
            Indicator::Sound => &self.sound,
            Indicator::Fused => FUSION_NAME,
        }
    }

    fn decision(&self, row: &PredictionRow, ind: Indicator) -> Option<IndicatorDecision> {
        row.probabilities
            .get(self.approach(ind))
            .map(|&p| IndicatorDecision::new(ind, p))
    }

    /// Fused decision over `subset`, `None` when every member is absent.
    pub fn fuse_row(&self, row: &PredictionRow, subset: &[Indicator]) -> Option<IndicatorDecision> {
        let d: Vec<Option<IndicatorDecision>> = subset.iter().map(|&i| self.decision(row, i)).collect();
        fuse(&d).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub subject: String,
    pub n: usize,
    pub accuracy: f64,
    /// Absent when the held-out subject has a single class.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub n: usize,
    pub confusion: Confusion,
    pub metrics: WeightedMetrics,
    pub tpr: f64,
    pub fpr: f64,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub per_fold: Vec<FoldMetrics>,
}

/// One scored segment: subject, truth, predicted label, pain probability.
pub type Scored<'a> = (&'a str, PainLabel, PainLabel, f64);

/// Pooled metrics plus a per-subject breakdown.
pub fn evaluate_scored(name: &str, scored: &[Scored<'_>]) -> Result<EvalReport> {
    if scored.is_empty() {
        return Err(Error::data(format!("{name}: no samples to evaluate")));
    }
    let truth: Vec<PainLabel> = scored.iter().map(|s| s.1).collect();
    let pred: Vec<PainLabel> = scored.iter().map(|s| s.2).collect();
    let probs: Vec<f64> = scored.iter().map(|s| s.3).collect();
    let confusion = Confusion::from_labels(&truth, &pred)?;
    let metrics = weighted_metrics(&truth, &pred)?;
    let (roc, auc) = roc_auc(&truth, &probs).map_err(|e| e.in_stage(name.to_string()))?;
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in scored.iter().enumerate() {
        by_subject.entry(s.0).or_default().push(i);
    }
    let per_fold = by_subject
        .into_iter()
        .map(|(subject, idx)| {
            let t: Vec<PainLabel> = idx.iter().map(|&i| truth[i]).collect();
            let correct = idx.iter().filter(|&&i| truth[i] == pred[i]).count();
            let p: Vec<f64> = idx.iter().map(|&i| probs[i]).collect();
            FoldMetrics {
                subject: subject.to_string(),
                n: idx.len(),
                accuracy: correct as f64 / idx.len() as f64,
                auc: roc_auc(&t, &p).ok().map(|r| r.1),
            }
        })
        .collect();
    Ok(EvalReport {
        name: name.to_string(),
        n: scored.len(),
        tpr: confusion.tpr(),
        fpr: confusion.fpr(),
        confusion,
        metrics,
        auc,
        roc,
        per_fold,
    })
}

fn unimodal(name: &str, approach: &str, rows: &[&PredictionRow]) -> Result<EvalReport> {
    let scored: Vec<Scored> = rows
        .iter()
        .filter_map(|r| {
            r.probabilities
                .get(approach)
                .map(|&p| (r.subject_id.as_str(), r.label, PainLabel::from_probability(p), p))
        })
        .collect();
    evaluate_scored(name, &scored)
}

fn fused(name: &str, plan: &FusionPlan, subset: &[Indicator], rows: &[&PredictionRow]) -> Result<EvalReport> {
    let scored: Vec<Scored> = rows
        .iter()
        .filter_map(|r| {
            plan.fuse_row(r, subset)
                .map(|d| (r.subject_id.as_str(), r.label, d.label, d.pain_probability))
        })
        .collect();
    evaluate_scored(name, &scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over trials.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub tpr: MeanStd,
    pub fpr: MeanStd,
    pub auc: MeanStd,
}

impl SummaryStats {
    pub fn of(reports: &[EvalReport]) -> Self {
        let s = |f: fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
        SummaryStats {
            accuracy: s(|r| r.metrics.accuracy),
            precision: s(|r| r.metrics.precision),
            recall: s(|r| r.metrics.recall),
            f1: s(|r| r.metrics.f1),
            tpr: s(|r| r.tpr),
            fpr: s(|r| r.fpr),
            auc: s(|r| r.auc),
        }
    }
}

/// Unimodal vs fused performance on the segments where `indicator`
/// survived the drop, aggregated over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropColumn {
    pub indicator: Indicator,
    pub unimodal: SummaryStats,
    pub multimodal: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDropReport {
    pub trials: usize,
    pub drop_fraction: f64,
    pub seed: u64,
    pub columns: Vec<DropColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub n_samples: usize,
    pub reports: Vec<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_drop: Option<RandomDropReport>,
}

const COMBINATIONS: [(&str, &[Indicator]); 7] = [
    ("F", &[Indicator::Face]),
    ("B", &[Indicator::Body]),
    ("S", &[Indicator::Sound]),
    ("F+B", &[Indicator::Face, Indicator::Body]),
    ("B+S", &[Indicator::Body, Indicator::Sound]),
    ("S+F", &[Indicator::Sound, Indicator::Face]),
    ("F+B+S", &[Indicator::Face, Indicator::Body, Indicator::Sound]),
];

/// Runs one experiment. `approaches` lists the unimodal rows in order.
pub fn run_experiment(
    kind: ExperimentKind,
    table: &PredictionTable,
    approaches: &[String],
    plan: &FusionPlan,
    seed: u64,
) -> Result<ExperimentReport> {
    let rows: Vec<&PredictionRow> = table.rows.iter().collect();
    let mut out = ExperimentReport {
        experiment: kind,
        n_samples: rows.len(),
        reports: Vec::new(),
        random_drop: None,
    };
    match kind {
        ExperimentKind::Unimodal => {
            for a in approaches {
                out.reports.push(unimodal(a, a, &rows)?);
            }
        }
        ExperimentKind::Multimodal => {
            for ind in Indicator::MODALITIES {
                let a = plan.approach(ind);
                out.reports.push(unimodal(a, a, &rows)?);
            }
            out.reports
                .push(fused(FUSION_NAME, plan, &Indicator::MODALITIES, &rows)?);
        }
        ExperimentKind::AllPresent => {
            let full: Vec<&PredictionRow> = rows
                .iter()
                .copied()
                .filter(|r| {
                    Indicator::MODALITIES
                        .iter()
                        .all(|&i| r.probabilities.contains_key(plan.approach(i)))
                })
                .collect();
            if full.is_empty() {
                return Err(Error::data("no segment has every modality present"));
            }
            out.n_samples = full.len();
            for (name, subset) in COMBINATIONS {
                out.reports.push(fused(name, plan, subset, &full)?);
            }
        }
        ExperimentKind::RandomDrop => {
            out.random_drop = Some(random_drop(&rows, plan, seed)?);
        }
    }
    Ok(out)
}

fn random_drop(rows: &[&PredictionRow], plan: &FusionPlan, seed: u64) -> Result<RandomDropReport> {
    let mut uni: BTreeMap<Indicator, Vec<EvalReport>> = BTreeMap::new();
    let mut multi: BTreeMap<Indicator, Vec<EvalReport>> = BTreeMap::new();
    for trial in 0..RANDOM_DROP_TRIALS {
        let mut rng = stream(seed.wrapping_add(trial as u64), "random-drop", 0);
        let mut degraded: Vec<PredictionRow> = rows.iter().map(|r| (*r).clone()).collect();
        for ind in Indicator::MODALITIES {
            let key = plan.approach(ind);
            let present: Vec<usize> = (0..degraded.len())
                .filter(|&i| degraded[i].probabilities.contains_key(key))
                .collect();
            let k = (present.len() as f64 * RANDOM_DROP_FRACTION).floor() as usize;
            for j in sample(&mut rng, present.len(), k) {
                degraded[present[j]].probabilities.remove(key);
            }
        }
        for ind in Indicator::MODALITIES {
            let key = plan.approach(ind);
            let kept: Vec<&PredictionRow> = degraded.iter().filter(|r| r.probabilities.contains_key(key)).collect();
            uni.entry(ind).or_default().push(unimodal(key, key, &kept)?);
            multi
                .entry(ind)
                .or_default()
                .push(fused(FUSION_NAME, plan, &Indicator::MODALITIES, &kept)?);
        }
    }
    let columns = Indicator::MODALITIES
        .iter()
        .map(|ind| DropColumn {
            indicator: *ind,
            unimodal: SummaryStats::of(&uni[ind]),
            multimodal: SummaryStats::of(&multi[ind]),
        })
        .collect();
    Ok(RandomDropReport {
        trials: RANDOM_DROP_TRIALS,
        drop_fraction: RANDOM_DROP_FRACTION,
        seed,
        columns,
    })
}
