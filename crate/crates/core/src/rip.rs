//! Robust Imitative Planning aggregation.
//!
//! Candidates are scored under each of K likelihood models (an autoregressive
//! bivariate Gaussian per step), the G x K log-probabilities are reduced to
//! one robust score per candidate, those are reduced again to one request
//! score, and the top D candidates are reported with softmax confidences.
//! Candidate generation itself is left to the [`LikelihoodModel`] backends.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{uncertainty_from_score, Point, Trajectory};

/// Symmetry tolerance for step covariances.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggOperator {
    /// Worst case over the inputs.
    Min,
    /// Model averaging.
    Mean,
    /// Mean minus population standard deviation.
    LowerQuartile,
}

impl FromStr for AggOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(AggOperator::Min),
            "mean" => Ok(AggOperator::Mean),
            "lower_quartile" | "lq" => Ok(AggOperator::LowerQuartile),
            other => Err(Error::Config(format!("unknown aggregation operator {other:?}"))),
        }
    }
}

impl fmt::Display for AggOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggOperator::Min => "min",
            AggOperator::Mean => "mean",
            AggOperator::LowerQuartile => "lower_quartile",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RipConfig {
    /// K, number of likelihood models.
    pub ensemble_size: usize,
    /// Q, candidates drawn from each model when they are self-generated.
    pub samples_per_member: usize,
    /// G, number of candidates scored.
    pub candidates: usize,
    /// D, number of candidates reported.
    pub reported: usize,
    pub traj_agg: AggOperator,
    pub req_agg: AggOperator,
}

impl Default for RipConfig {
    fn default() -> Self {
        RipConfig::self_generated(5, 10, 5, AggOperator::LowerQuartile, AggOperator::LowerQuartile)
    }
}

impl RipConfig {
    /// Configuration where every model contributes Q candidates, G = K * Q.
    pub fn self_generated(k: usize, q: usize, d: usize, traj_agg: AggOperator, req_agg: AggOperator) -> Self {
        RipConfig { ensemble_size: k, samples_per_member: q, candidates: k * q, reported: d, traj_agg, req_agg }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 || self.samples_per_member == 0 {
            return Err(Error::Config("K and Q must both be at least 1".into()));
        }
        if self.reported == 0 {
            return Err(Error::Config("D must be at least 1".into()));
        }
        if self.reported > self.candidates {
            return Err(Error::Config(format!(
                "cannot report D={} of only G={} candidates",
                self.reported, self.candidates
            )));
        }
        Ok(())
    }
}

/// A 2x2 covariance in meters squared, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2([[f64; 2]; 2]);

impl Covariance2 {
    pub fn new(matrix: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = matrix;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::Covariance("non-finite entry".into()));
        }
        if (b - c).abs() > SYMMETRY_TOLERANCE {
            return Err(Error::Covariance(format!("off-diagonal entries {b} and {c} differ")));
        }
        let cov = Covariance2(matrix);
        // Both eigenvalues are positive iff the trace and determinant are.
        if a <= 0.0 || cov.determinant() <= 0.0 {
            return Err(Error::Covariance(format!("matrix {matrix:?} is not positive-definite")));
        }
        Ok(cov)
    }

    pub fn diagonal(var_x: f64, var_y: f64) -> Result<Self> {
        Covariance2::new([[var_x, 0.0], [0.0, var_y]])
    }

    pub fn isotropic(var: f64) -> Result<Self> {
        Covariance2::diagonal(var, var)
    }

    /// Covariance with standard deviations `along` and `across` a heading.
    pub fn oriented(heading: f64, along: f64, across: f64) -> Result<Self> {
        let (s, c) = heading.sin_cos();
        let (va, vc) = (along * along, across * across);
        let xy = (va - vc) * s * c;
        Covariance2::new([[va * c * c + vc * s * s, xy], [xy, va * s * s + vc * c * c]])
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.0
    }

    fn off_diagonal(&self) -> f64 {
        0.5 * (self.0[0][1] + self.0[1][0])
    }

    pub fn determinant(&self) -> f64 {
        let b = self.off_diagonal();
        self.0[0][0] * self.0[1][1] - b * b
    }

    /// Lower Cholesky factor `[[l11, 0], [l21, l22]]`.
    pub fn cholesky(&self) -> [[f64; 2]; 2] {
        let l11 = self.0[0][0].sqrt();
        let l21 = self.off_diagonal() / l11;
        let l22 = (self.0[1][1] - l21 * l21).sqrt();
        [[l11, 0.0], [l21, l22]]
    }
}

/// One conditional step density N(mean, covariance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStep {
    pub mean: Point,
    pub covariance: Covariance2,
}

impl GaussianStep {
    pub fn new(mean: Point, covariance: Covariance2) -> Self {
        GaussianStep { mean, covariance }
    }

    /// Closed-form bivariate normal log-density.
    pub fn log_density(&self, at: Point) -> f64 {
        let [[a, _], [_, d]] = self.covariance.matrix();
        let b = self.covariance.off_diagonal();
        let det = self.covariance.determinant();
        let (dx, dy) = (at.x - self.mean.x, at.y - self.mean.y);
        let quad = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * quad
    }

    /// Maps a standard-normal pair through the Cholesky factor.
    pub fn sample_from(&self, z: (f64, f64)) -> Point {
        let l = self.covariance.cholesky();
        Point::new(self.mean.x + l[0][0] * z.0, self.mean.y + l[1][0] * z.0 + l[1][1] * z.1)
    }
}

/// A per-member trajectory density q(y | x) factorised over steps.
///
/// Given a trajectory, returns the T conditional step densities, step t
/// conditioned on the trajectory's own prefix `y_<t`. Scene context is
/// owned by the implementation.
pub trait LikelihoodModel: Sync {
    fn step_distributions(&self, trajectory: &Trajectory) -> Result<Vec<GaussianStep>>;
}

impl<M: LikelihoodModel + ?Sized> LikelihoodModel for &M {
    fn step_distributions(&self, trajectory: &Trajectory) -> Result<Vec<GaussianStep>> {
        (**self).step_distributions(trajectory)
    }
}

impl<M: LikelihoodModel + ?Sized + Send> LikelihoodModel for Box<M> {
    fn step_distributions(&self, trajectory: &Trajectory) -> Result<Vec<GaussianStep>> {
        (**self).step_distributions(trajectory)
    }
}

pub fn log_prob_trajectory<M: LikelihoodModel + ?Sized>(model: &M, trajectory: &Trajectory) -> Result<f64> {
    let steps = model.step_distributions(trajectory)?;
    if steps.len() != trajectory.len() {
        return Err(Error::Shape(format!(
            "model emitted {} steps for a trajectory of length {}",
            steps.len(),
            trajectory.len()
        )));
    }
    let mut total = 0.0;
    for (step, &s) in steps.iter().zip(&trajectory.states) {
        total += step.log_density(s);
    }
    Ok(total)
}

/// G x K log-probabilities, candidate-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    candidates: usize,
    members: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let candidates = rows.len();
        let members = rows.first().map_or(0, Vec::len);
        if candidates == 0 || members == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(g) = rows.iter().position(|r| r.len() != members) {
            return Err(Error::Shape(format!("row {g} has {} columns, expected {members}", rows[g].len())));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("score ({}, {})", i / members, i % members)));
        }
        Ok(ScoreMatrix { candidates, members, values })
    }

    /// Parses comma-separated rows (one per candidate, one column per model).
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| format!("line {}: {e} in {f:?}", i + 1)))
                .collect::<std::result::Result<Vec<f64>, String>>()?;
            rows.push(row);
        }
        ScoreMatrix::from_rows(rows).map_err(|e| e.to_string())
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn get(&self, candidate: usize, member: usize) -> f64 {
        self.values[candidate * self.members + member]
    }

    pub fn row(&self, candidate: usize) -> &[f64] {
        &self.values[candidate * self.members..(candidate + 1) * self.members]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.members)
    }

    fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Scores every candidate under every model. Cells are evaluated in
/// parallel; the layout is fixed so the result does not depend on scheduling.
pub fn score_matrix<M: LikelihoodModel>(models: &[M], candidates: &[Trajectory]) -> Result<ScoreMatrix> {
    if models.is_empty() || candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let horizon = candidates[0].len();
    if let Some(g) = candidates.iter().position(|c| c.len() != horizon) {
        return Err(Error::Shape(format!(
            "candidate {g} has T={} but candidate 0 has T={horizon}",
            candidates[g].len()
        )));
    }
    let k = models.len();
    let values = (0..candidates.len() * k)
        .into_par_iter()
        .map(|cell| log_prob_trajectory(&models[cell % k], &candidates[cell / k]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScoreMatrix { candidates: candidates.len(), members: k, values })
}

pub fn aggregate(scores: &[f64], op: AggOperator) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = scores.len() as f64;
    Ok(match op {
        AggOperator::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
        AggOperator::Mean => scores.iter().sum::<f64>() / n,
        AggOperator::LowerQuartile => {
            let mean = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
            mean - var.sqrt()
        }
    })
}

/// Max-subtracted softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Indices of the `d` highest scores, descending; lower index wins ties.
pub fn top_indices(scores: &[f64], d: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(d);
    order
}

/// Result of aggregating one request's score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RipSelection {
    /// One robust score per candidate (higher = more plausible).
    pub per_trajectory_scores: Vec<f64>,
    /// Aggregated request score C before orientation.
    pub request_score: f64,
    /// `-C`, larger = more uncertain.
    pub request_uncertainty: f64,
    /// Candidate indices of the reported trajectories, best first.
    pub selected: Vec<usize>,
    /// Softmax confidences of the selected candidates.
    pub confidences: Vec<f64>,
}

/// Aggregation, selection and confidence reporting over a score matrix.
///
/// Selection and softmax run on the matrix re-centred on its largest entry,
/// so a constant offset on every entry leaves them untouched whenever the
/// offset itself is exactly representable.
pub fn aggregate_scores(matrix: &ScoreMatrix, config: &RipConfig) -> Result<RipSelection> {
    config.validate()?;
    if matrix.candidates() != config.candidates {
        return Err(Error::Config(format!(
            "score matrix has {} candidates but G={}",
            matrix.candidates(),
            config.candidates
        )));
    }
    if matrix.members() != config.ensemble_size {
        return Err(Error::Config(format!(
            "score matrix has {} columns but K={}",
            matrix.members(),
            config.ensemble_size
        )));
    }

    let per_trajectory_scores =
        matrix.rows().map(|row| aggregate(row, config.traj_agg)).collect::<Result<Vec<f64>>>()?;
    let request_score = aggregate(&per_trajectory_scores, config.req_agg)?;

    let anchor = matrix.max_entry();
    let mut centred_row = vec![0.0; matrix.members()];
    let centred = matrix
        .rows()
        .map(|row| {
            for (c, v) in centred_row.iter_mut().zip(row) {
                *c = v - anchor;
            }
            aggregate(&centred_row, config.traj_agg)
        })
        .collect::<Result<Vec<f64>>>()?;
    let selected = top_indices(&centred, config.reported);
    let chosen: Vec<f64> = selected.iter().map(|&g| centred[g]).collect();

    Ok(RipSelection {
        per_trajectory_scores,
        request_score,
        request_uncertainty: uncertainty_from_score(request_score),
        confidences: softmax(&chosen),
        selected,
    })
}

/// Reported trajectories with their confidences and request uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct RipOutput {
    pub trajectories: Vec<Trajectory>,
    pub confidences: Vec<f64>,
    pub request_uncertainty: f64,
    pub selection: RipSelection,
}

pub fn run_rip<M: LikelihoodModel>(models: &[M], candidates: &[Trajectory], config: &RipConfig) -> Result<RipOutput> {
    config.validate()?;
    if models.len() != config.ensemble_size {
        return Err(Error::Config(format!("got {} models but K={}", models.len(), config.ensemble_size)));
    }
    if candidates.len() != config.candidates {
        return Err(Error::Config(format!("got {} candidates but G={}", candidates.len(), config.candidates)));
    }
    let matrix = score_matrix(models, candidates)?;
    let selection = aggregate_scores(&matrix, config)?;
    Ok(RipOutput {
        trajectories: selection.selected.iter().map(|&g| candidates[g].clone()).collect(),
        confidences: selection.confidences.clone(),
        request_uncertainty: selection.request_uncertainty,
        selection,
    })
}
