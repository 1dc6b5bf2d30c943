//! Joint robustness / uncertainty assessment.
//!
//! An error-retention curve replaces predictions with ground truth (zero
//! error) in order of decreasing uncertainty and tracks the dataset error
//! as a function of the fraction of predictions retained. The F1-retention
//! curve instead treats "retained" as "predicted acceptable" and tracks the
//! F1 of that classification against the ground-truth acceptability
//! `error < threshold`.
//!
//! Both curves are evaluated on the exact grid `k / N`, `k = 0..=N`, and
//! integrated with the trapezoidal rule.

use std::cmp::Ordering as CmpOrdering;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::slice::ParallelSliceMut;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Partition, ShiftTag};
use crate::rng::{keyed_rng, streams};

/// Default acceptability threshold on per-sample MSE for regression.
pub const REGRESSION_MSE_THRESHOLD: f64 = 1.0;

/// Retention rate used for the F1@95% operating point.
pub const F1_OPERATING_RETENTION: f64 = 0.95;

/// Above this many samples the plotted curves are thinned.
pub const PLOT_THINNING_LIMIT: usize = 1_000_000;

/// Number of grid points in a thinned plotting curve.
pub const PLOT_POINTS: usize = 1000;

/// Per-sample task error paired with its uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub id: String,
    pub error: f64,
    /// Larger = more uncertain.
    pub uncertainty: f64,
    pub tag: ShiftTag,
}

impl ScoredSample {
    pub fn new(id: impl Into<String>, error: f64, uncertainty: f64, tag: ShiftTag) -> Self {
        ScoredSample { id: id.into(), error, uncertainty, tag }
    }
}

/// Order in which predictions are replaced by ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetentionOrdering {
    /// Most uncertain first; ties broken by ascending id.
    ByUncertainty,
    /// Seeded shuffle, the non-informative baseline.
    Random(u64),
    /// Largest error first, the oracle baseline.
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetentionCurve {
    /// `(retention fraction, value)` for `k = 0..=N`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    let mut area = 0.0;
    for w in points.windows(2) {
        let (r0, v0) = w[0];
        let (r1, v1) = w[1];
        area += (r1 - r0) * (v0 + v1) / 2.0;
    }
    area
}

impl RetentionCurve {
    fn from_values(values: Vec<f64>) -> Self {
        let n = (values.len() - 1) as f64;
        let points: Vec<(f64, f64)> = values.into_iter().enumerate().map(|(k, v)| (k as f64 / n, v)).collect();
        let auc = trapezoid(&points);
        RetentionCurve { points, auc }
    }

    pub fn sample_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Evenly spaced subset of the grid for plotting. The AUC is carried over
    /// from the exact curve.
    pub fn thinned(&self, max_points: usize) -> RetentionCurve {
        let n = self.sample_count();
        if max_points < 2 || n < max_points {
            return self.clone();
        }
        let last = max_points - 1;
        let points = (0..max_points)
            .map(|i| {
                let k = ((i as u128 * n as u128 + last as u128 / 2) / last as u128) as usize;
                self.points[k]
            })
            .collect();
        RetentionCurve { points, auc: self.auc }
    }

    /// CSV with a `retention,value` header; floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("retention,value\n");
        for (r, v) in &self.points {
            writeln!(out, "{r},{v}").expect("writing to a String cannot fail");
        }
        out
    }

    pub fn from_csv(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some("retention,value") => {}
            other => return Err(format!("unexpected header {other:?}")),
        }
        lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                let (r, v) = line.split_once(',').ok_or_else(|| format!("line {}: expected two columns", i + 2))?;
                let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
                Ok((parse(r)?, parse(v)?))
            })
            .collect()
    }
}

fn check_samples(samples: &[ScoredSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for s in samples {
        if !s.error.is_finite() || s.error < 0.0 {
            return Err(Error::InvalidSample {
                id: s.id.clone(),
                reason: format!("error {} is not finite and >= 0", s.error),
            });
        }
        if !s.uncertainty.is_finite() {
            return Err(Error::InvalidSample {
                id: s.id.clone(),
                reason: format!("uncertainty {} is not finite", s.uncertainty),
            });
        }
    }
    Ok(())
}

fn descending_then_id(samples: &[ScoredSample], key: impl Fn(&ScoredSample) -> f64 + Sync) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.par_sort_unstable_by(|&a, &b| {
        let (sa, sb) = (&samples[a], &samples[b]);
        key(sb).total_cmp(&key(sa)).then_with(|| sa.id.cmp(&sb.id)).then_with(|| a.cmp(&b))
    });
    order
}

/// Sample indices in replacement order: `order[0]` is replaced by ground
/// truth first, `order[N-1]` is the last one retained.
pub fn rejection_order(samples: &[ScoredSample], ordering: RetentionOrdering) -> Vec<usize> {
    match ordering {
        RetentionOrdering::ByUncertainty => descending_then_id(samples, |s| s.uncertainty),
        RetentionOrdering::Optimal => descending_then_id(samples, |s| s.error),
        RetentionOrdering::Random(seed) => {
            // Canonicalise on id first so the shuffle ignores input order.
            let mut order: Vec<usize> = (0..samples.len()).collect();
            order.sort_by(|&a, &b| samples[a].id.cmp(&samples[b].id).then(a.cmp(&b)));
            order.shuffle(&mut keyed_rng(seed, 0, streams::RANDOM_ORDERING));
            order
        }
    }
}

/// Values at retention k/N for k = 0..=N, with the `k` last entries of
/// `order` retained and the per-retained-sample contribution given by `f`.
fn retained_prefix<F: FnMut(usize, usize) -> f64>(order: &[usize], mut f: F) -> Vec<f64> {
    let mut values = Vec::with_capacity(order.len() + 1);
    values.push(f(usize::MAX, 0));
    for (k, &idx) in order.iter().rev().enumerate() {
        values.push(f(idx, k + 1));
    }
    values
}

pub fn error_retention_curve(samples: &[ScoredSample], ordering: RetentionOrdering) -> Result<RetentionCurve> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let order = rejection_order(samples, ordering);
    let mut retained_error = 0.0;
    let values = retained_prefix(&order, |idx, k| {
        if k > 0 {
            retained_error += samples[idx].error;
        }
        retained_error / n
    });
    Ok(RetentionCurve::from_values(values))
}

pub fn r_auc(curve: &RetentionCurve) -> f64 {
    trapezoid(&curve.points)
}

/// F1 of predicting `retained` samples acceptable when `positives` are
/// acceptable in truth and `true_positives` of the retained ones are.
pub fn f1_score(true_positives: usize, retained: usize, positives: usize) -> f64 {
    if retained + positives == 0 {
        0.0
    } else {
        2.0 * true_positives as f64 / (retained + positives) as f64
    }
}

pub fn f1_retention_curve_ordered(
    samples: &[ScoredSample],
    threshold: f64,
    ordering: RetentionOrdering,
) -> Result<RetentionCurve> {
    check_samples(samples)?;
    if threshold.is_nan() {
        return Err(Error::Config("acceptability threshold is NaN".into()));
    }
    let positives = samples.iter().filter(|s| s.error < threshold).count();
    let order = rejection_order(samples, ordering);
    let mut true_positives = 0;
    let values = retained_prefix(&order, |idx, k| {
        if k > 0 && samples[idx].error < threshold {
            true_positives += 1;
        }
        f1_score(true_positives, k, positives)
    });
    Ok(RetentionCurve::from_values(values))
}

/// F1-retention curve under the uncertainty ordering.
pub fn f1_retention_curve(samples: &[ScoredSample], threshold: f64) -> Result<RetentionCurve> {
    f1_retention_curve_ordered(samples, threshold, RetentionOrdering::ByUncertainty)
}

/// Curve value at the smallest grid retention `>= r`.
pub fn f1_at(curve: &RetentionCurve, r: f64) -> f64 {
    curve
        .points
        .iter()
        .find(|(retention, _)| *retention >= r)
        .or_else(|| curve.points.last())
        .map(|&(_, v)| v)
        .expect("curves have at least two points")
}

/// Probability that a random shifted sample is more uncertain than a random
/// in-domain sample, ties counting one half (Mann-Whitney U / n1 n0).
pub fn roc_auc(samples: &[ScoredSample]) -> Result<f64> {
    let n_shifted = samples.iter().filter(|s| s.tag.partition == Partition::Shifted).count();
    let n_in = samples.len() - n_shifted;
    if n_shifted == 0 || n_in == 0 {
        return Err(Error::SingleClass);
    }
    if let Some(s) = samples.iter().find(|s| !s.uncertainty.is_finite()) {
        return Err(Error::InvalidSample { id: s.id.clone(), reason: "uncertainty is not finite".into() });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.par_sort_unstable_by(|&a, &b| samples[a].uncertainty.total_cmp(&samples[b].uncertainty).then(a.cmp(&b)));

    // Sum of mid-ranks (1-based) of the shifted samples.
    let mut shifted_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let value = samples[order[start]].uncertainty;
        let mut end = start;
        while end < order.len() && samples[order[end]].uncertainty.total_cmp(&value) == CmpOrdering::Equal {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let shifted_in_group = order[start..end].iter().filter(|&&i| samples[i].tag.is_shifted()).count();
        shifted_rank_sum += mid_rank * shifted_in_group as f64;
        start = end;
    }
    let n1 = n_shifted as f64;
    let u = shifted_rank_sum - n1 * (n1 + 1.0) / 2.0;
    Ok(u / (n1 * n_in as f64))
}

/// Retention summary for one (error, uncertainty) dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionSummary {
    pub error_curve: RetentionCurve,
    pub random_error_curve: RetentionCurve,
    pub optimal_error_curve: RetentionCurve,
    /// Present when an acceptability threshold is known.
    pub f1: Option<F1Summary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Summary {
    pub curve: RetentionCurve,
    pub random_curve: RetentionCurve,
    pub optimal_curve: RetentionCurve,
    pub f1_at_95: f64,
}

pub fn summarize(samples: &[ScoredSample], threshold: Option<f64>, seed: u64) -> Result<RetentionSummary> {
    let f1 = threshold
        .map(|t| -> Result<F1Summary> {
            let curve = f1_retention_curve(samples, t)?;
            Ok(F1Summary {
                f1_at_95: f1_at(&curve, F1_OPERATING_RETENTION),
                random_curve: f1_retention_curve_ordered(samples, t, RetentionOrdering::Random(seed))?,
                optimal_curve: f1_retention_curve_ordered(samples, t, RetentionOrdering::Optimal)?,
                curve,
            })
        })
        .transpose()?;
    Ok(RetentionSummary {
        error_curve: error_retention_curve(samples, RetentionOrdering::ByUncertainty)?,
        random_error_curve: error_retention_curve(samples, RetentionOrdering::Random(seed))?,
        optimal_error_curve: error_retention_curve(samples, RetentionOrdering::Optimal)?,
        f1,
    })
}
