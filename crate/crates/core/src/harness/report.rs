//! Comparison tables across replicas and plot-ready series.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mean, sample_std};
use crate::training::Algorithm;

use super::run::RunRecord;

/// Mean and sample standard deviation over replicas; `n` counts the
/// replicas that reported a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        (!values.is_empty()).then(|| Stat {
            mean: mean(values),
            std: sample_std(values),
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run: String,
    pub task: String,
    pub algorithm: Algorithm,
    pub replicas: usize,
    pub accuracy: Option<Stat>,
    pub reward: Option<Stat>,
    pub coding_level: Option<Stat>,
    pub theta_mean: Option<Stat>,
    pub theta_std: Option<Stat>,
    pub specificity_before: Option<Stat>,
    pub specificity_after: Option<Stat>,
}

/// Replica mean and spread of a metric at one logged episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub run: String,
    pub algorithm: Algorithm,
    pub episode: usize,
    pub replicas: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub reward_mean: Option<f64>,
    pub reward_std: Option<f64>,
    pub coding_level_mean: Option<f64>,
    pub theta_mean: Option<f64>,
    pub theta_std: Option<f64>,
    pub theta_g: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub series: Vec<SeriesPoint>,
}

fn collect<I>(values: I) -> Option<Stat>
where
    I: IntoIterator<Item = Option<f64>>,
{
    let v: Vec<f64> = values.into_iter().flatten().collect();
    Stat::of(&v)
}

/// Records sharing a run name are pooled, so replicas written by separate
/// invocations aggregate into one row.
pub fn report(records: &[RunRecord]) -> Report {
    let mut groups: Vec<(&RunRecord, Vec<&super::run::ArmRecord>)> = Vec::new();
    for record in records {
        match groups.iter_mut().find(|(r, _)| r.config.name == record.config.name) {
            Some((_, arms)) => arms.extend(&record.arms),
            None => groups.push((record, record.arms.iter().collect())),
        }
    }
    let mut out = Report::default();
    for (record, all_arms) in &groups {
        let run = record.config.name.clone();
        let task = record.config.task.name().to_string();
        for &algorithm in &record.config.algorithms {
            let arms: Vec<_> = all_arms.iter().copied().filter(|a| a.algorithm == algorithm).collect();
            if arms.is_empty() {
                continue;
            }
            let s = |f: &dyn Fn(&super::run::ArmSummary) -> Option<f64>| collect(arms.iter().map(|a| f(&a.summary)));
            out.rows.push(ReportRow {
                run: run.clone(),
                task: task.clone(),
                algorithm,
                replicas: arms.len(),
                accuracy: s(&|x| x.final_accuracy),
                reward: s(&|x| x.final_reward),
                coding_level: s(&|x| x.coding_level),
                theta_mean: s(&|x| Some(x.theta_mean)),
                theta_std: s(&|x| Some(x.theta_std)),
                specificity_before: s(&|x| x.specificity_before),
                specificity_after: s(&|x| x.specificity_after),
            });

            let mut by_episode: BTreeMap<usize, Vec<&crate::metrics::MetricsRecord>> = BTreeMap::new();
            for arm in &arms {
                for m in &arm.metrics {
                    by_episode.entry(m.episode).or_default().push(m);
                }
            }
            for (episode, ms) in by_episode {
                let acc = collect(ms.iter().map(|m| m.accuracy_running_avg));
                let rew = collect(ms.iter().map(|m| m.reward_running_avg));
                out.series.push(SeriesPoint {
                    run: run.clone(),
                    algorithm,
                    episode,
                    replicas: ms.len(),
                    accuracy_mean: acc.map(|s| s.mean),
                    accuracy_std: acc.map(|s| s.std),
                    reward_mean: rew.map(|s| s.mean),
                    reward_std: rew.map(|s| s.std),
                    coding_level_mean: collect(ms.iter().map(|m| m.coding_level)).map(|s| s.mean),
                    theta_mean: collect(ms.iter().map(|m| Some(m.theta_mean))).map(|s| s.mean),
                    theta_std: collect(ms.iter().map(|m| Some(m.theta_std))).map(|s| s.mean),
                    theta_g: collect(ms.iter().map(|m| Some(m.theta_g))).map(|s| s.mean),
                });
            }
        }
    }
    out
}

fn cell(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.4} ± {:.4}", s.mean, s.std),
        None => "-".into(),
    }
}

impl Report {
    /// Plain-text table, one row per run and algorithm.
    pub fn table(&self) -> String {
        let header = [
            "run",
            "task",
            "algorithm",
            "n",
            "accuracy",
            "reward",
            "coding level",
            "theta mean",
            "theta std",
            "Sp before",
            "Sp after",
        ];
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.run.clone(),
                    r.task.clone(),
                    r.algorithm.to_string(),
                    r.replicas.to_string(),
                    cell(r.accuracy),
                    cell(r.reward),
                    cell(r.coding_level),
                    cell(r.theta_mean),
                    cell(r.theta_std),
                    cell(r.specificity_before),
                    cell(r.specificity_after),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].chars().count())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut s = String::new();
        let line = |s: &mut String, cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(s, "{}", padded.join("  ").trim_end());
        };
        line(&mut s, &header.map(String::from));
        for r in &rows {
            line(&mut s, r);
        }
        s
    }

    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_rows(&dir.join("comparison.csv"), self.rows.iter().map(FlatRow::from))?;
        write_rows(&dir.join("series.csv"), self.series.iter())
    }
}

/// Flat CSV view of a [`ReportRow`].
#[derive(Serialize)]
struct FlatRow {
    run: String,
    task: String,
    algorithm: Algorithm,
    replicas: usize,
    accuracy_mean: Option<f64>,
    accuracy_std: Option<f64>,
    reward_mean: Option<f64>,
    reward_std: Option<f64>,
    coding_level_mean: Option<f64>,
    coding_level_std: Option<f64>,
    theta_mean_mean: Option<f64>,
    theta_mean_std: Option<f64>,
    theta_std_mean: Option<f64>,
    theta_std_std: Option<f64>,
    specificity_before_mean: Option<f64>,
    specificity_after_mean: Option<f64>,
    specificity_after_std: Option<f64>,
}

impl From<&ReportRow> for FlatRow {
    fn from(r: &ReportRow) -> Self {
        Self {
            run: r.run.clone(),
            task: r.task.clone(),
            algorithm: r.algorithm,
            replicas: r.replicas,
            accuracy_mean: r.accuracy.map(|s| s.mean),
            accuracy_std: r.accuracy.map(|s| s.std),
            reward_mean: r.reward.map(|s| s.mean),
            reward_std: r.reward.map(|s| s.std),
            coding_level_mean: r.coding_level.map(|s| s.mean),
            coding_level_std: r.coding_level.map(|s| s.std),
            theta_mean_mean: r.theta_mean.map(|s| s.mean),
            theta_mean_std: r.theta_mean.map(|s| s.std),
            theta_std_mean: r.theta_std.map(|s| s.mean),
            theta_std_std: r.theta_std.map(|s| s.std),
            specificity_before_mean: r.specificity_before.map(|s| s.mean),
            specificity_after_mean: r.specificity_after.map(|s| s.mean),
            specificity_after_std: r.specificity_after.map(|s| s.std),
        }
    }
}

fn write_rows<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Format {
        what: "csv",
        message: format!("{}: {e}", path.display()),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-arm summary of a single run, one CSV line per (replica, algorithm).
pub fn write_summary_csv(record: &RunRecord, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Line {
        replica: usize,
        algorithm: Algorithm,
        episodes: usize,
        final_accuracy: Option<f64>,
        final_reward: Option<f64>,
        final_loss: Option<f64>,
        coding_level: Option<f64>,
        theta_mean: f64,
        theta_std: f64,
        theta_g: f64,
        acceptance_rate: Option<f64>,
        specificity_before: Option<f64>,
        specificity_after: Option<f64>,
    }
    write_rows(
        path,
        record.arms.iter().map(|a| Line {
            replica: a.replica,
            algorithm: a.algorithm,
            episodes: a.summary.episodes,
            final_accuracy: a.summary.final_accuracy,
            final_reward: a.summary.final_reward,
            final_loss: a.summary.final_loss,
            coding_level: a.summary.coding_level,
            theta_mean: a.summary.theta_mean,
            theta_std: a.summary.theta_std,
            theta_g: a.summary.theta_g,
            acceptance_rate: a.summary.acceptance_rate,
            specificity_before: a.summary.specificity_before,
            specificity_after: a.summary.specificity_after,
        }),
    )
}
