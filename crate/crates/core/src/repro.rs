//! Experiment orchestration: evaluation of saved predictions, report
//! files, and the end-to-end synthetic reproduction run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{
    roc_csv, roc_svg, run_experiment, EvalReport, ExperimentKind, ExperimentReport, PredictionTable, FUSION_NAME,
};
use crate::fusion::Indicator;
use crate::manifest::Manifest;
use crate::pipeline::{fusion_plan, prepare, train_indicator, Approach};
use crate::synth::generate_synthetic;

/// Runs one experiment over pooled predictions, with the unimodal rows in
/// reporting order.
pub fn run_eval(table: &PredictionTable, kind: ExperimentKind, seed: u64) -> Result<ExperimentReport> {
    let present = table.approaches();
    let approaches: Vec<String> = Approach::ALL
        .iter()
        .map(|a| a.name().to_string())
        .filter(|n| present.contains(n))
        .collect();
    run_experiment(kind, table, &approaches, &fusion_plan(), seed)
}

fn svg_for(report: &ExperimentReport) -> String {
    let curves: Vec<&EvalReport> = report.reports.iter().collect();
    roc_svg(&format!("ROC: {}", report.experiment), &curves)
}

/// Writes `report.json`, `roc.csv` and `roc.svg` into `dir`.
pub fn write_experiment(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    write_plots(report, dir)
}

/// Renders `roc.csv` and `roc.svg` for a report.
pub fn write_plots(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("roc.csv"), roc_csv(std::slice::from_ref(report)))?;
    fs::write(dir.join("roc.svg"), svg_for(report))?;
    Ok(())
}

/// One row of the approach summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub modality: String,
    pub approach: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub auc: f64,
}

impl SummaryRow {
    fn of(modality: &str, r: &EvalReport) -> Self {
        SummaryRow {
            modality: modality.to_string(),
            approach: r.name.clone(),
            accuracy: r.metrics.accuracy,
            precision: r.metrics.precision,
            recall: r.metrics.recall,
            f1: r.metrics.f1,
            tpr: r.tpr,
            fpr: r.fpr,
            auc: r.auc,
        }
    }
}

/// Every unimodal approach followed by the fused decision.
pub fn summary_rows(unimodal: &ExperimentReport, multimodal: &ExperimentReport) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for r in &unimodal.reports {
        let a = Approach::from_name(&r.name).ok_or_else(|| Error::data(format!("unknown approach {:?}", r.name)))?;
        rows.push(SummaryRow::of(&capitalise(a.indicator().as_str()), r));
    }
    let fused = multimodal
        .reports
        .iter()
        .find(|r| r.name == FUSION_NAME)
        .ok_or_else(|| Error::data("multimodal report has no fused row"))?;
    rows.push(SummaryRow::of("Multimodal", fused));
    Ok(rows)
}

fn capitalise(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

pub fn summary_markdown(rows: &[SummaryRow]) -> String {
    let mut s = String::from("| Modality | Approach | Accuracy | Precision | Recall | F1 | TPR | FPR | AUC |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            r.modality, r.approach, r.accuracy, r.precision, r.recall, r.f1, r.tpr, r.fpr, r.auc
        );
    }
    s
}

/// Everything `repro_all` measured; serialised as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub seed: u64,
    pub n_segments: usize,
    /// Segments left out for lacking a binary label.
    pub excluded: Vec<String>,
    pub summary: Vec<SummaryRow>,
    pub experiments: Vec<ExperimentReport>,
}

impl ReproReport {
    pub fn experiment(&self, kind: ExperimentKind) -> Option<&ExperimentReport> {
        self.experiments.iter().find(|e| e.experiment == kind)
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Trains and evaluates every approach on an existing manifest, writing
/// models under `out/models`, per-experiment reports under
/// `out/experiments/<kind>`, and `report.json`, `summary.md`, `roc.csv`,
/// `roc.svg` at the top of `out`.
pub fn run_all(manifest: &Manifest, cfg: &RunConfig, out: impl AsRef<Path>) -> Result<ReproReport> {
    let out = out.as_ref();
    let data = stage("prepare", prepare(manifest, cfg, &Indicator::MODALITIES))?;
    let mut table = PredictionTable::default();
    for ind in Indicator::MODALITIES {
        let name = format!("train {ind}");
        let run = stage(&name, train_indicator(&data, ind, cfg))?;
        stage(&name, run.save(out.join("models")))?;
        stage(&name, table.merge(run.table))?;
    }
    let mut experiments = Vec::new();
    for kind in ExperimentKind::ALL {
        let name = format!("eval {kind}");
        let report = stage(&name, run_eval(&table, kind, cfg.seed))?;
        stage(
            &name,
            write_experiment(&report, out.join("experiments").join(kind.as_str())),
        )?;
        experiments.push(report);
    }
    let find = |k| {
        experiments
            .iter()
            .find(|e: &&ExperimentReport| e.experiment == k)
            .expect("all kinds ran")
    };
    let summary = stage(
        "summary",
        summary_rows(find(ExperimentKind::Unimodal), find(ExperimentKind::Multimodal)),
    )?;
    let report = ReproReport {
        seed: cfg.seed,
        n_segments: data.samples.len(),
        excluded: data.excluded,
        summary,
        experiments,
    };
    stage("report", write_bundle(&report, out))?;
    Ok(report)
}

fn write_bundle(report: &ReproReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(report)?)?;
    fs::write(out.join("summary.md"), summary_markdown(&report.summary))?;
    fs::write(out.join("roc.csv"), roc_csv(&report.experiments))?;
    if let Some(m) = report.experiment(ExperimentKind::Multimodal) {
        fs::write(out.join("roc.svg"), svg_for(m))?;
    }
    Ok(())
}

/// Generates the synthetic dataset under `out/data` and runs
/// [`run_all`] on it.
pub fn repro_all(cfg: &RunConfig, out: impl AsRef<Path>) -> Result<ReproReport> {
    let out = out.as_ref();
    let manifest = stage("synth", generate_synthetic(&cfg.synth, cfg.seed, out.join("data")))?;
    run_all(&manifest, cfg, out)
}
