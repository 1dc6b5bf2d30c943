//! Task-appropriate metric suites and the on-disk report bundle.
//!
//! Scalars are reported per partition (`in`, `shifted`, `full`) in
//! `metrics.json`; every retention curve is written as `curves/<name>.csv`
//! and plotted with its random and optimal baselines as `plots/<name>.svg`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Partition, RegressionRecord, ShiftTag, TrajectoryRecord, TranslationRecord, Valid};
use crate::plot::{line_plot, Series};
use crate::records::{Dataset, Task};
use crate::regression::{self, UncertaintyMeasureKind};
use crate::retention::{
    roc_auc, summarize, RetentionCurve, RetentionSummary, ScoredSample, PLOT_POINTS, PLOT_THINNING_LIMIT,
    REGRESSION_MSE_THRESHOLD,
};
use crate::trajectory::{
    self, agg_displacement, top1_displacement, weighted_displacement, AggregationKind, Displacement,
};
use crate::translation::{self, Gleu};

/// Grid used for the curve CSV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurveGrid {
    /// Every k / N point.
    #[default]
    Exact,
    /// At most this many evenly spaced points.
    Thinned(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Acceptability threshold on the per-sample error. Regression falls
    /// back to MSE < 1.0; the other tasks require it.
    pub threshold: Option<f64>,
    pub seed: u64,
    pub grid: CurveGrid,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { threshold: None, seed: 0, grid: CurveGrid::Exact }
    }
}

impl EvalOptions {
    pub fn resolved_threshold(&self, task: Task) -> Result<f64> {
        let t = match (self.threshold, task) {
            (Some(t), _) => t,
            (None, Task::Regression) => REGRESSION_MSE_THRESHOLD,
            (None, task) => {
                return Err(Error::Config(format!("an acceptability threshold is required for {task} records")));
            }
        };
        if !t.is_finite() {
            return Err(Error::Config(format!("threshold {t} is not finite")));
        }
        Ok(t)
    }
}

pub const PARTITIONS: [&str; 3] = ["in", "shifted", "full"];

/// metric name -> partition -> value (`null` when undefined on that partition).
pub type MetricTable = BTreeMap<String, BTreeMap<String, Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub task: Task,
    pub seed: u64,
    pub threshold: f64,
    pub counts: BTreeMap<String, usize>,
    pub metrics: MetricTable,
}

impl MetricsReport {
    pub fn get(&self, metric: &str, partition: &str) -> Option<f64> {
        self.metrics.get(metric).and_then(|p| p.get(partition).copied().flatten())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metric values are finite or null");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub name: String,
    pub curve: RetentionCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub name: String,
    pub title: String,
    pub y_label: String,
    /// `(legend label, curve file name)`.
    pub series: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metrics: MetricsReport,
    pub curves: Vec<CurveFile>,
    pub plots: Vec<PlotSpec>,
}

struct Builder {
    metrics: MetricTable,
    curves: Vec<CurveFile>,
    plots: Vec<PlotSpec>,
}

impl Builder {
    fn new() -> Self {
        Builder { metrics: MetricTable::new(), curves: Vec::new(), plots: Vec::new() }
    }

    fn set(&mut self, metric: impl Into<String>, partition: &str, value: Option<f64>) {
        self.metrics.entry(metric.into()).or_default().insert(partition.to_string(), value);
    }

    fn curve(&mut self, name: String, curve: &RetentionCurve) -> String {
        self.curves.push(CurveFile { name: name.clone(), curve: curve.clone() });
        name
    }

    /// Records R-AUC / F1-AUC / F1@95% and the curves of one retention
    /// summary. `measure` names the uncertainty when there are several.
    fn retention(&mut self, error_name: &str, measure: Option<&str>, partition: &str, summary: &RetentionSummary) {
        let suffix = measure.map(|m| format!(".{m}")).unwrap_or_default();
        let label = measure.unwrap_or("uncertainty");
        let f1 = summary.f1.as_ref().expect("suites always pass a threshold");
        self.set(format!("r_auc{suffix}"), partition, Some(summary.error_curve.auc));
        self.set(format!("f1_auc{suffix}"), partition, Some(f1.curve.auc));
        self.set(format!("f1_at_95{suffix}"), partition, Some(f1.f1_at_95));

        let base = format!("{error_name}_retention");
        let f1_base = format!("f1_{error_name}_retention");
        let random = format!("{base}.baseline_random.{partition}");
        let optimal = format!("{base}.baseline_optimal.{partition}");
        let f1_random = format!("{f1_base}.baseline_random.{partition}");
        let f1_optimal = format!("{f1_base}.baseline_optimal.{partition}");
        if !self.curves.iter().any(|c| c.name == random) {
            self.set("baseline_random.r_auc", partition, Some(summary.random_error_curve.auc));
            self.set("baseline_optimal.r_auc", partition, Some(summary.optimal_error_curve.auc));
            self.set("baseline_random.f1_auc", partition, Some(f1.random_curve.auc));
            self.set("baseline_optimal.f1_auc", partition, Some(f1.optimal_curve.auc));
            self.curve(random.clone(), &summary.random_error_curve);
            self.curve(optimal.clone(), &summary.optimal_error_curve);
            self.curve(f1_random.clone(), &f1.random_curve);
            self.curve(f1_optimal.clone(), &f1.optimal_curve);
        }

        let main = self.curve(format!("{base}{suffix}.{partition}"), &summary.error_curve);
        let f1_main = self.curve(format!("{f1_base}{suffix}.{partition}"), &f1.curve);
        let pretty = error_name.replace('_', " ");
        self.plots.push(PlotSpec {
            name: main.clone(),
            title: format!("{pretty} retention ({partition}, {label})"),
            y_label: pretty.clone(),
            series: vec![
                (label.to_string(), main),
                ("random baseline".into(), random),
                ("optimal baseline".into(), optimal),
            ],
        });
        self.plots.push(PlotSpec {
            name: f1_main.clone(),
            title: format!("F1 {pretty} retention ({partition}, {label})"),
            y_label: "F1".into(),
            series: vec![
                (label.to_string(), f1_main),
                ("random baseline".into(), f1_random),
                ("optimal baseline".into(), f1_optimal),
            ],
        });
    }
}

fn in_partition(tag: &ShiftTag, partition: &str) -> bool {
    match partition {
        "in" => tag.partition == Partition::InDomain,
        "shifted" => tag.partition == Partition::Shifted,
        _ => true,
    }
}

fn subset<T: Clone>(items: &[T], tag: impl Fn(&T) -> &ShiftTag, partition: &str) -> Vec<T> {
    items.iter().filter(|x| in_partition(tag(x), partition)).cloned().collect()
}

fn counts<T>(items: &[T], tag: impl Fn(&T) -> &ShiftTag, skipped: usize) -> BTreeMap<String, usize> {
    let mut c: BTreeMap<String, usize> =
        PARTITIONS.iter().map(|p| (p.to_string(), items.iter().filter(|x| in_partition(tag(x), p)).count())).collect();
    c.insert("skipped".into(), skipped);
    c
}

/// ROC-AUC over the full dataset, `None` when a partition is empty.
fn shift_detection(samples: &[ScoredSample]) -> Option<f64> {
    roc_auc(samples).ok()
}

pub fn evaluate(dataset: &Dataset, options: &EvalOptions) -> Result<Report> {
    let threshold = options.resolved_threshold(dataset.task())?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut b = Builder::new();
    let counts = match dataset {
        Dataset::Regression(records) => {
            regression_suite(&mut b, records, threshold, options.seed)?;
            counts(records, |r| &r.tag, 0)
        }
        Dataset::Trajectory { records, skipped } => {
            trajectory_suite(&mut b, records, threshold, options.seed)?;
            counts(records, |r| &r.tag, skipped.len())
        }
        Dataset::Translation(records) => {
            translation_suite(&mut b, records, threshold, options.seed)?;
            counts(records, |r| &r.tag, 0)
        }
    };
    Ok(Report {
        metrics: MetricsReport { task: dataset.task(), seed: options.seed, threshold, counts, metrics: b.metrics },
        curves: b.curves,
        plots: b.plots,
    })
}

fn regression_suite(b: &mut Builder, records: &[Valid<RegressionRecord>], threshold: f64, seed: u64) -> Result<()> {
    let errors: Vec<f64> = records.par_iter().map(regression::per_sample_mse).collect();
    let measures = UncertaintyMeasureKind::ALL;
    let uncertainties: Vec<Vec<f64>> = measures
        .iter()
        .map(|&m| records.par_iter().map(|r| regression::uncertainty(r, m, Some(seed))).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;

    for partition in PARTITIONS {
        let part = subset(records, |r| &r.tag, partition);
        if part.is_empty() {
            b.set("rmse", partition, None);
            b.set("mae", partition, None);
            continue;
        }
        b.set("rmse", partition, Some(regression::rmse(&part)?));
        b.set("mae", partition, Some(regression::mae(&part)?));
        for (m, unc) in measures.iter().zip(&uncertainties) {
            let samples = scored(records, &errors, unc, |r| (&r.id, &r.tag), partition);
            let summary = summarize(&samples, Some(threshold), seed)?;
            b.retention("mse", Some(m.name()), partition, &summary);
        }
    }
    for (m, unc) in measures.iter().zip(&uncertainties) {
        let samples = scored(records, &errors, unc, |r| (&r.id, &r.tag), "full");
        b.set(format!("roc_auc.{}", m.name()), "full", shift_detection(&samples));
    }
    Ok(())
}

fn scored<T>(
    records: &[T],
    errors: &[f64],
    uncertainties: &[f64],
    key: impl Fn(&T) -> (&String, &ShiftTag),
    partition: &str,
) -> Vec<ScoredSample> {
    records
        .iter()
        .zip(errors.iter().zip(uncertainties))
        .filter_map(|(r, (&e, &u))| {
            let (id, tag) = key(r);
            in_partition(tag, partition).then(|| ScoredSample::new(id.clone(), e, u, tag.clone()))
        })
        .collect()
}

/// The displacement metrics reported for trajectory records, by name.
pub fn trajectory_metric(name: &str) -> Option<fn(&Valid<TrajectoryRecord>) -> f64> {
    Some(match name {
        "min_ade" => |r| agg_displacement(r, AggregationKind::Min, Displacement::Ade),
        "avg_ade" => |r| agg_displacement(r, AggregationKind::Avg, Displacement::Ade),
        "top1_ade" => |r| top1_displacement(r, Displacement::Ade),
        "weighted_ade" => |r| weighted_displacement(r, Displacement::Ade),
        "min_fde" => |r| agg_displacement(r, AggregationKind::Min, Displacement::Fde),
        "avg_fde" => |r| agg_displacement(r, AggregationKind::Avg, Displacement::Fde),
        "top1_fde" => |r| top1_displacement(r, Displacement::Fde),
        "weighted_fde" => |r| weighted_displacement(r, Displacement::Fde),
        _ => return None,
    })
}

pub const TRAJECTORY_METRICS: [&str; 8] =
    ["min_ade", "avg_ade", "top1_ade", "weighted_ade", "min_fde", "avg_fde", "top1_fde", "weighted_fde"];

fn trajectory_suite(b: &mut Builder, records: &[Valid<TrajectoryRecord>], threshold: f64, seed: u64) -> Result<()> {
    let weighted_ade = trajectory_metric("weighted_ade").expect("known metric");
    let errors: Vec<f64> = records.par_iter().map(weighted_ade).collect();
    let uncertainties: Vec<f64> = records.iter().map(|r| r.request_uncertainty).collect();
    for partition in PARTITIONS {
        let part = subset(records, |r| &r.tag, partition);
        for name in TRAJECTORY_METRICS {
            let f = trajectory_metric(name).expect("known metric");
            b.set(name, partition, trajectory::dataset_mean(&part, f).ok());
        }
        if part.is_empty() {
            continue;
        }
        let samples = scored(records, &errors, &uncertainties, |r| (&r.id, &r.tag), partition);
        b.retention("weighted_ade", None, partition, &summarize(&samples, Some(threshold), seed)?);
    }
    let samples = scored(records, &errors, &uncertainties, |r| (&r.id, &r.tag), "full");
    b.set("roc_auc", "full", shift_detection(&samples));
    Ok(())
}

fn translation_suite(b: &mut Builder, records: &[Valid<TranslationRecord>], threshold: f64, seed: u64) -> Result<()> {
    let scorer = Gleu::default();
    let errors: Vec<f64> = records.par_iter().map(|r| translation::record_egleu_error(r, &scorer)).collect();
    let uncertainties: Vec<f64> = records.iter().map(|r| translation::record_uncertainty(r)).collect();
    for partition in PARTITIONS {
        let part = subset(records, |r| &r.tag, partition);
        b.set("egleu", partition, translation::egleu_with(&part, &scorer).ok());
        b.set("max_gleu", partition, translation::max_gleu_with(&part, &scorer).ok());
        b.set("egleu_error", partition, translation::egleu_with(&part, &scorer).ok().map(|e| 100.0 - e));
        if part.is_empty() {
            continue;
        }
        let samples = scored(records, &errors, &uncertainties, |r| (&r.id, &r.tag), partition);
        b.retention("egleu_error", None, partition, &summarize(&samples, Some(threshold), seed)?);
    }
    let samples = scored(records, &errors, &uncertainties, |r| (&r.id, &r.tag), "full");
    b.set("roc_auc", "full", shift_detection(&samples));
    Ok(())
}

/// Per-sample errors and uncertainties of a dataset under a named error
/// metric: `mse` (regression, with `measure`), any trajectory displacement
/// metric, or `egleu_error` (translation).
pub fn scored_samples(
    dataset: &Dataset,
    metric: &str,
    measure: UncertaintyMeasureKind,
    seed: u64,
) -> Result<Vec<ScoredSample>> {
    let unknown = || Error::Config(format!("metric {metric:?} is not defined for {} records", dataset.task()));
    Ok(match dataset {
        Dataset::Regression(records) => {
            if metric != "mse" {
                return Err(unknown());
            }
            records
                .iter()
                .map(|r| {
                    let u = regression::uncertainty(r, measure, Some(seed))?;
                    Ok(ScoredSample::new(r.id.clone(), regression::per_sample_mse(r), u, r.tag.clone()))
                })
                .collect::<Result<_>>()?
        }
        Dataset::Trajectory { records, .. } => {
            let f = trajectory_metric(metric).ok_or_else(unknown)?;
            records
                .iter()
                .map(|r| ScoredSample::new(r.id.clone(), f(r), r.request_uncertainty, r.tag.clone()))
                .collect()
        }
        Dataset::Translation(records) => {
            if metric != "egleu_error" {
                return Err(unknown());
            }
            let scorer = Gleu::default();
            records
                .iter()
                .map(|r| {
                    ScoredSample::new(
                        r.id.clone(),
                        translation::record_egleu_error(r, &scorer),
                        translation::record_uncertainty(r),
                        r.tag.clone(),
                    )
                })
                .collect()
        }
    })
}

/// Retention curves only, for one error metric, per partition. The F1
/// curves are included when a threshold is available.
pub fn retention_report(
    dataset: &Dataset,
    metric: &str,
    measure: UncertaintyMeasureKind,
    options: &EvalOptions,
) -> Result<Report> {
    let samples = scored_samples(dataset, metric, measure, options.seed)?;
    let threshold = options.resolved_threshold(dataset.task())?;
    let mut b = Builder::new();
    let measure_name = matches!(dataset, Dataset::Regression(_)).then(|| measure.name());
    for partition in PARTITIONS {
        let part: Vec<ScoredSample> = samples.iter().filter(|s| in_partition(&s.tag, partition)).cloned().collect();
        if part.is_empty() {
            continue;
        }
        b.retention(metric, measure_name, partition, &summarize(&part, Some(threshold), options.seed)?);
    }
    let counts = counts(&samples, |s| &s.tag, dataset.skipped());
    Ok(Report {
        metrics: MetricsReport { task: dataset.task(), seed: options.seed, threshold, counts, metrics: b.metrics },
        curves: b.curves,
        plots: b.plots,
    })
}

const COLOURS: [&str; 3] = ["#1f77b4", "#7f7f7f", "#2ca02c"];

/// Writes `metrics.json` (when asked), `curves/*.csv` and `plots/*.svg`.
pub fn write_bundle(report: &Report, dir: &Path, grid: CurveGrid, with_metrics: bool) -> io::Result<()> {
    fs::create_dir_all(dir.join("curves"))?;
    fs::create_dir_all(dir.join("plots"))?;
    if with_metrics {
        fs::write(dir.join("metrics.json"), report.metrics.to_json())?;
    }
    for c in &report.curves {
        let curve = match grid {
            CurveGrid::Exact => c.curve.clone(),
            CurveGrid::Thinned(n) => c.curve.thinned(n),
        };
        fs::write(dir.join("curves").join(format!("{}.csv", c.name)), curve.to_csv())?;
    }
    for p in &report.plots {
        let thinned: Vec<RetentionCurve> = p
            .series
            .iter()
            .map(|(_, name)| {
                let curve =
                    &report.curves.iter().find(|c| &c.name == name).expect("plot refers to a known curve").curve;
                if curve.sample_count() > PLOT_THINNING_LIMIT {
                    curve.thinned(PLOT_POINTS)
                } else {
                    curve.clone()
                }
            })
            .collect();
        let series: Vec<Series<'_>> = p
            .series
            .iter()
            .zip(&thinned)
            .enumerate()
            .map(|(i, ((label, _), curve))| Series {
                label: format!("{label} (AUC {:.4})", curve.auc),
                colour: COLOURS[i % COLOURS.len()],
                dashed: i > 0,
                points: &curve.points,
            })
            .collect();
        fs::write(dir.join("plots").join(format!("{}.svg", p.name)), line_plot(&p.title, &p.y_label, &series))?;
    }
    Ok(())
}
