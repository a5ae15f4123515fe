//! Experiment reports: per-run accuracy tables, aggregate statistics,
//! and row-normalized confusion matrices.

use crate::error::{CoreError, Result};
use crate::experiments::split::Evaluation;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    MultimodalFacilitation,
    UnimodalEnhancement,
    CrossModal,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::MultimodalFacilitation => "multimodal-facilitation",
            TaskKind::UnimodalEnhancement => "unimodal-enhancement",
            TaskKind::CrossModal => "cross-modal",
        }
    }
}

/// One run's named accuracy measures (e.g. "bdae", "eeg_raw").
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub id: String,
    pub measures: Vec<(String, f64)>,
}

impl RunRecord {
    pub fn measure(&self, name: &str) -> Option<f64> {
        self.measures
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Published numbers quoted for context next to our results. They are
/// annotations, never assertions: they come from datasets this code has
/// no access to.
#[derive(Debug, Clone)]
pub struct ReferenceLine {
    pub label: String,
    pub value_pct: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub task: TaskKind,
    pub seed: u64,
    /// config snapshot as key/value lines
    pub config: Vec<(String, String)>,
    pub runs: Vec<RunRecord>,
    /// name of the measure the confusion matrix belongs to
    pub primary_measure: String,
    /// evaluation of the primary measure, pooled over all runs
    pub pooled: Evaluation,
    pub chance: f64,
    pub references: Vec<ReferenceLine>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ExperimentReport {
    /// Mean and population standard deviation of one measure across runs.
    pub fn measure_stats(&self, name: &str) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self.runs.iter().filter_map(|r| r.measure(name)).collect();
        if vals.is_empty() {
            None
        } else {
            Some(mean_std(&vals))
        }
    }

    pub fn measure_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for run in &self.runs {
            for (n, _) in &run.measures {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        names
    }

    /// Checks the report invariants: confusion rows with mass sum to 1
    /// and the pooled accuracy matches the priors-weighted diagonal.
    pub fn validate(&self) -> Result<()> {
        let conf = &self.pooled.confusion;
        for i in 0..conf.rows() {
            let sum: f64 = conf.row(i).iter().sum();
            if self.pooled.priors[i] > 0.0 && (sum - 1.0).abs() > 1e-9 {
                return Err(CoreError::Data(format!(
                    "confusion row {i} sums to {sum}, expected 1"
                )));
            }
        }
        let diag: f64 = (0..conf.rows())
            .map(|i| self.pooled.priors[i] * conf.get(i, i))
            .sum();
        if (diag - self.pooled.accuracy).abs() > 1e-9 {
            return Err(CoreError::Data(format!(
                "accuracy {} inconsistent with confusion diagonal {diag}",
                self.pooled.accuracy
            )));
        }
        Ok(())
    }

    /// Structured plain-text rendering: config snapshot, per-run table,
    /// mean/std, confusion matrix, reference annotations.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task: {}", self.task.as_str());
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "chance level: {:.2}%", 100.0 * self.chance);
        s.push_str("\n[config]\n");
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push_str("\n[runs]\n");
        let names = self.measure_names();
        let _ = writeln!(s, "run\t{}", names.join("\t"));
        let mut sorted: Vec<&RunRecord> = self.runs.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        for run in sorted {
            let cells: Vec<String> = names
                .iter()
                .map(|n| {
                    run.measure(n)
                        .map(|v| format!("{:.2}%", 100.0 * v))
                        .unwrap_or_else(|| "-".into())
                })
                .collect();
            let _ = writeln!(s, "{}\t{}", run.id, cells.join("\t"));
        }
        s.push_str("\n[aggregate]\n");
        for n in &names {
            if let Some((mean, std)) = self.measure_stats(n) {
                let _ = writeln!(
                    s,
                    "{n}: mean {:.2}% / std {:.2}%",
                    100.0 * mean,
                    100.0 * std
                );
            }
        }
        let _ = writeln!(
            s,
            "\n[confusion: {} (pooled, rows = true class)]",
            self.primary_measure
        );
        let _ = writeln!(
            s,
            "true\\pred\t{}",
            self.pooled
                .classes
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("\t")
        );
        for (i, c) in self.pooled.classes.iter().enumerate() {
            let cells: Vec<String> = (0..self.pooled.classes.len())
                .map(|j| format!("{:.2}%", 100.0 * self.pooled.confusion.get(i, j)))
                .collect();
            let _ = writeln!(s, "{c}\t{}", cells.join("\t"));
        }
        if !self.references.is_empty() {
            s.push_str("\n[published reference points, not reproduced here]\n");
            for r in &self.references {
                let _ = writeln!(s, "{}: {:.2}%", r.label, r.value_pct);
            }
        }
        s
    }

    /// Per-run accuracies as CSV for plotting.
    pub fn to_csv(&self) -> String {
        let names = self.measure_names();
        let mut s = format!("run,{}\n", names.join(","));
        let mut sorted: Vec<&RunRecord> = self.runs.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        for run in sorted {
            let cells: Vec<String> = names
                .iter()
                .map(|n| run.measure(n).map(|v| format!("{v:?}")).unwrap_or_default())
                .collect();
            let _ = writeln!(s, "{},{}", run.id, cells.join(","));
        }
        s
    }

    /// Merges same-task reports into one: runs are concatenated and the
    /// primary-measure predictions re-pooled. Order-independent: runs
    /// are sorted by id before aggregation.
    pub fn merge(reports: &[ExperimentReport]) -> Result<ExperimentReport> {
        let first = reports
            .first()
            .ok_or_else(|| CoreError::InvalidArgument("merge of zero reports".into()))?;
        let mut runs = Vec::new();
        let mut predictions = Vec::new();
        let mut truth = Vec::new();
        let mut ordered: Vec<&ExperimentReport> = reports.iter().collect();
        ordered.sort_by_key(|r| r.seed);
        for r in ordered {
            if r.task != first.task {
                return Err(CoreError::InvalidArgument(
                    "cannot merge reports from different tasks".into(),
                ));
            }
            if r.pooled.classes != first.pooled.classes {
                return Err(CoreError::InvalidArgument(
                    "cannot merge reports with different class sets".into(),
                ));
            }
            runs.extend(r.runs.iter().cloned());
            predictions.extend(r.pooled.predictions.iter().copied());
            truth.extend(r.pooled.truth.iter().copied());
        }
        let pooled = pool_evaluation(&predictions, &truth, &first.pooled.classes)?;
        Ok(ExperimentReport {
            task: first.task,
            seed: first.seed,
            config: first.config.clone(),
            runs,
            primary_measure: first.primary_measure.clone(),
            pooled,
            chance: first.chance,
            references: first.references.clone(),
        })
    }
}

/// Builds an [`Evaluation`] directly from stored prediction/truth lists
/// (used when pooling across runs or replaying recorded predictions).
pub fn pool_evaluation(predictions: &[i64], truth: &[i64], classes: &[i64]) -> Result<Evaluation> {
    if predictions.len() != truth.len() || truth.is_empty() {
        return Err(CoreError::InvalidArgument(
            "pooled evaluation needs equal-length nonempty lists".into(),
        ));
    }
    let confusion = super::split::confusion_matrix(predictions, truth, classes)?;
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    let priors: Vec<f64> = classes
        .iter()
        .map(|c| truth.iter().filter(|&t| t == c).count() as f64 / truth.len() as f64)
        .collect();
    Ok(Evaluation {
        accuracy: hits as f64 / truth.len() as f64,
        classes: classes.to_vec(),
        confusion,
        priors,
        predictions: predictions.to_vec(),
        truth: truth.to_vec(),
    })
}
