//! Report files and console tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::{AggregateMetrics, EvalReport, FoldStatus, Timing};
use super::metrics::{ConfusionMatrix, CLASS_COUNT};
use crate::data::{LabelMode, SkillLevel};
use crate::error::{Error, Result};

pub fn labeling_code(mode: LabelMode) -> &'static str {
    match mode {
        LabelMode::SelfProclaimed => "self",
        LabelMode::GrsThreshold => "grs",
    }
}

/// `su_loso_w60_self_seed0`: task, scheme, window, labeling and seed.
pub fn report_stem(report: &EvalReport) -> String {
    format!(
        "{}_{}_w{}_{}_seed{}",
        report.task.code().to_ascii_lowercase(),
        report.scheme.code(),
        report.window_width,
        labeling_code(report.labeling),
        report.seed
    )
}

fn class_names() -> [&'static str; CLASS_COUNT] {
    std::array::from_fn(|k| SkillLevel::from_index(k).map_or("?", |l| l.name()))
}

/// Counts with a header row of predicted classes and a leading ground-truth column.
pub fn confusion_csv(m: &ConfusionMatrix) -> String {
    let names = class_names();
    let mut out = format!("truth,{}\n", names.join(","));
    for (name, row) in names.iter().zip(&m.counts) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{name},{}", cells.join(","));
    }
    out
}

/// Row-normalized probabilities, same layout as [`confusion_csv`].
pub fn normalized_confusion_csv(m: &ConfusionMatrix) -> String {
    let names = class_names();
    let mut out = format!("truth,{}\n", names.join(","));
    for (name, row) in names.iter().zip(m.normalized()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(out, "{name},{}", cells.join(","));
    }
    out
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the JSON report and confusion matrices into `dir`. Timing goes to a
/// separate `<stem>_timing.json` because it varies between runs.
pub fn write_report(dir: &Path, report: &EvalReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = report_stem(report);
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::InternalState(e.to_string()))? + "\n";
    write(dir.join(format!("{stem}.json")), &json, &mut written)?;
    for fold in &report.folds {
        if let Some(m) = &fold.metrics {
            write(
                dir.join(format!("{stem}_fold{}_confusion.csv", fold.fold)),
                &confusion_csv(&m.confusion),
                &mut written,
            )?;
        }
    }
    if let Some(agg) = &report.aggregate {
        write(
            dir.join(format!("{stem}_aggregate_confusion.csv")),
            &confusion_csv(&agg.confusion),
            &mut written,
        )?;
        write(
            dir.join(format!("{stem}_aggregate_confusion_normalized.csv")),
            &normalized_confusion_csv(&agg.confusion),
            &mut written,
        )?;
    }
    write(dir.join(format!("{stem}_timing.json")), &timing_json(report)?, &mut written)?;
    Ok(written)
}

pub fn timing_json(report: &EvalReport) -> Result<String> {
    #[derive(serde::Serialize)]
    struct FoldTiming<'a> {
        fold: usize,
        timing: Option<&'a Timing>,
    }
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        folds: Vec<FoldTiming<'a>>,
        mean: Option<Timing>,
    }
    let doc = Doc {
        folds: report
            .folds
            .iter()
            .map(|f| FoldTiming {
                fold: f.fold,
                timing: f.timing.as_ref(),
            })
            .collect(),
        mean: report.mean_running_time(),
    };
    Ok(serde_json::to_string_pretty(&doc).map_err(|e| Error::InternalState(e.to_string()))? + "\n")
}

fn metrics_line(out: &mut String, label: &str, accuracy: f64, agg_classes: &[super::metrics::ClassMetrics; CLASS_COUNT]) {
    let f1: Vec<String> = agg_classes.iter().map(|c| format!("{:>6.3}", c.f1)).collect();
    let _ = writeln!(out, "{label:<10} {:>8.4}  {}", accuracy, f1.join(" "));
}

/// Aligned per-fold and aggregate summary for the console.
pub fn format_report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} W={} labeling={} seed={}",
        report.task,
        report.scheme,
        report.window_width,
        labeling_code(report.labeling),
        report.seed
    );
    let _ = writeln!(out, "{:<10} {:>8}  {:>6} {:>6} {:>6}", "fold", "accuracy", "f1 N", "f1 I", "f1 E");
    for fold in &report.folds {
        match (&fold.status, &fold.metrics) {
            (FoldStatus::Completed, Some(m)) => metrics_line(&mut out, &fold.fold.to_string(), m.accuracy, &m.classes),
            (FoldStatus::Completed, None) => {
                let _ = writeln!(out, "{:<10} (no test crops)", fold.fold);
            }
            (FoldStatus::Failed { reason }, _) => {
                let _ = writeln!(out, "{:<10} FAILED: {reason}", fold.fold);
            }
        }
        for w in &fold.warnings {
            let _ = writeln!(out, "{:<10} warning: {w}", "");
        }
    }
    let agg: Option<&AggregateMetrics> = report.aggregate.as_ref();
    match agg {
        Some(a) => metrics_line(&mut out, "mean", a.accuracy, &a.classes),
        None => {
            let _ = writeln!(out, "mean       (no completed folds)");
        }
    }
    if let Some(a) = &report.trial_vote_aggregate {
        metrics_line(&mut out, "per-trial", a.accuracy, &a.classes);
    }
    if let Some(t) = report.mean_running_time() {
        let _ = writeln!(out, "classification time {:.2} ms (std {:.2}) over {} crops", t.mean_ms, t.std_ms, t.samples);
    }
    out
}
