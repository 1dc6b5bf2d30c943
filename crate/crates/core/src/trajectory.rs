//! Displacement-error metrics for multi-hypothesis trajectory prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Trajectory, TrajectoryRecord, Valid};

/// Aggregation over the D hypotheses of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    Min,
    Avg,
}

/// Which displacement error to compute per hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Displacement {
    Ade,
    Fde,
}

fn check_pair(pred: &Trajectory, truth: &Trajectory) -> Result<()> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::Shape(format!("prediction has T={} but ground truth has T={}", pred.len(), truth.len())));
    }
    Ok(())
}

/// Average displacement error: mean Euclidean distance over all T steps.
pub fn ade(pred: &Trajectory, truth: &Trajectory) -> Result<f64> {
    check_pair(pred, truth)?;
    let mut total = 0.0;
    for (p, q) in pred.states.iter().zip(&truth.states) {
        total += p.distance(*q);
    }
    Ok(total / pred.len() as f64)
}

/// Final displacement error: Euclidean distance at the last step.
pub fn fde(pred: &Trajectory, truth: &Trajectory) -> Result<f64> {
    check_pair(pred, truth)?;
    let last = pred.len() - 1;
    Ok(pred.states[last].distance(truth.states[last]))
}

pub fn displacement(pred: &Trajectory, truth: &Trajectory, which: Displacement) -> Result<f64> {
    match which {
        Displacement::Ade => ade(pred, truth),
        Displacement::Fde => fde(pred, truth),
    }
}

/// Per-hypothesis displacement errors of a validated record, in index order.
pub fn per_hypothesis(record: &Valid<TrajectoryRecord>, which: Displacement) -> Vec<f64> {
    record
        .predictions
        .iter()
        .map(|p| displacement(p, &record.ground_truth, which).expect("validated record has matching horizons"))
        .collect()
}

/// minADE_D / avgADE_D (or the FDE analogues).
pub fn agg_displacement(record: &Valid<TrajectoryRecord>, kind: AggregationKind, which: Displacement) -> f64 {
    let values = per_hypothesis(record, which);
    match kind {
        AggregationKind::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        AggregationKind::Avg => {
            let mut total = 0.0;
            for v in &values {
                total += v;
            }
            total / values.len() as f64
        }
    }
}

/// Index of the most confident hypothesis; the lowest index wins ties.
pub fn top1_index(confidences: &[f64]) -> usize {
    let mut best = 0;
    for (d, &c) in confidences.iter().enumerate().skip(1) {
        if c > confidences[best] {
            best = d;
        }
    }
    best
}

pub fn top1_displacement(record: &Valid<TrajectoryRecord>, which: Displacement) -> f64 {
    let best = top1_index(&record.confidences);
    displacement(&record.predictions[best], &record.ground_truth, which)
        .expect("validated record has matching horizons")
}

/// Confidence-weighted displacement, sum over d of c_d * disp_d.
pub fn weighted_displacement(record: &Valid<TrajectoryRecord>, which: Displacement) -> f64 {
    let values = per_hypothesis(record, which);
    let mut total = 0.0;
    for (c, v) in record.confidences.iter().zip(&values) {
        total += c * v;
    }
    total
}

/// Dataset mean of a per-record metric, summed in record order.
pub fn dataset_mean<F>(records: &[Valid<TrajectoryRecord>], per_record: F) -> Result<f64>
where
    F: Fn(&Valid<TrajectoryRecord>) -> f64,
{
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for r in records {
        total += per_record(r);
    }
    Ok(total / records.len() as f64)
}
