//! Shared data model for the three task families, shift tagging and
//! record validation.
//!
//! Every uncertainty scalar in the crate is oriented "larger = more
//! uncertain". Scores that point the other way (likelihoods, confidences)
//! are negated exactly once where they enter the system; see
//! [`uncertainty_from_score`].

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed when checking that a probability vector sums to one.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    InDomain,
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftTag {
    pub partition: Partition,
    /// Free-form scene tags (location, season, maneuver, anomaly flags...).
    #[serde(default)]
    pub meta: Vec<String>,
}

impl ShiftTag {
    pub fn in_domain() -> Self {
        ShiftTag { partition: Partition::InDomain, meta: Vec::new() }
    }

    pub fn shifted() -> Self {
        ShiftTag { partition: Partition::Shifted, meta: Vec::new() }
    }

    pub fn with_meta<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.meta.extend(tags.into_iter().map(Into::into));
        self
    }

    pub fn is_shifted(&self) -> bool {
        self.partition == Partition::Shifted
    }
}

/// Planar displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A sequence of T planar states with a per-step observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Point>,
    pub validity: Vec<bool>,
}

impl Trajectory {
    /// A fully observed trajectory.
    pub fn new(states: Vec<Point>) -> Self {
        let validity = vec![true; states.len()];
        Trajectory { states, validity }
    }

    pub fn with_validity(states: Vec<Point>, validity: Vec<bool>) -> Self {
        Trajectory { states, validity }
    }

    pub fn from_xy(xy: &[(f64, f64)]) -> Self {
        Trajectory::new(xy.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_fully_valid(&self) -> bool {
        self.validity.iter().all(|&v| v)
    }

    fn check_shape(&self, what: &str) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::Shape(format!("{what} has no states")));
        }
        if self.states.len() != self.validity.len() {
            return Err(Error::Shape(format!(
                "{what} has {} states but {} validity flags",
                self.states.len(),
                self.validity.len()
            )));
        }
        if !self.states.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub id: String,
    pub predictions: Vec<Trajectory>,
    pub confidences: Vec<f64>,
    /// Per-request uncertainty, larger = more uncertain.
    pub request_uncertainty: f64,
    pub ground_truth: Trajectory,
    pub tag: ShiftTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl MemberPrediction {
    pub const fn new(mean: f64, variance: f64) -> Self {
        MemberPrediction { mean, variance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRecord {
    pub id: String,
    pub members: Vec<MemberPrediction>,
    pub target: f64,
    pub tag: ShiftTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationRecord {
    pub id: String,
    pub hypotheses: Vec<Vec<String>>,
    pub weights: Vec<f64>,
    pub reference: Vec<String>,
    /// Sequence-level uncertainty, larger = more uncertain. When absent the
    /// entropy of `weights` is used.
    pub uncertainty: Option<f64>,
    pub tag: ShiftTag,
}

/// Converts a confidence-style score (larger = more confident) into the
/// crate-wide uncertainty orientation.
pub fn uncertainty_from_score(score: f64) -> f64 {
    -score
}

/// A record that passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Valid<T>(T);

impl<T> Valid<T> {
    pub fn into_inner(self) -> T {
        self.0
    }
}

impl<T> Deref for Valid<T> {
    type Target = T;

    fn deref(&self) -> &T {
        &self.0
    }
}

impl<T> AsRef<T> for Valid<T> {
    fn as_ref(&self) -> &T {
        &self.0
    }
}

/// Outcome of screening a trajectory record: well-formed records whose
/// ground truth is only partially observed are skipped, not rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum Screening<T> {
    Accepted(Valid<T>),
    Skipped(T),
}

impl<T> Screening<T> {
    pub fn accepted(self) -> Option<Valid<T>> {
        match self {
            Screening::Accepted(v) => Some(v),
            Screening::Skipped(_) => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, Screening::Skipped(_))
    }
}

fn check_distribution(values: &[f64], strictly_positive: bool, what: &str) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{what}[{i}]")));
        }
        if v < 0.0 || (strictly_positive && v == 0.0) {
            let bound = if strictly_positive { "> 0" } else { ">= 0" };
            return Err(Error::Distribution(format!("{what}[{i}] = {v} is not {bound}")));
        }
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::Distribution(format!("{what} sum to {total}, expected 1")));
    }
    Ok(())
}

pub fn validate_trajectory_record(record: TrajectoryRecord) -> Result<Screening<TrajectoryRecord>> {
    if record.predictions.is_empty() {
        return Err(Error::Shape("record has no predicted trajectories".into()));
    }
    if record.confidences.len() != record.predictions.len() {
        return Err(Error::Shape(format!(
            "{} predictions but {} confidences",
            record.predictions.len(),
            record.confidences.len()
        )));
    }
    check_distribution(&record.confidences, false, "confidences")?;
    if !record.request_uncertainty.is_finite() {
        return Err(Error::NonFinite("request_uncertainty".into()));
    }
    record.ground_truth.check_shape("ground_truth")?;
    let horizon = record.ground_truth.len();
    for (d, pred) in record.predictions.iter().enumerate() {
        pred.check_shape(&format!("predictions[{d}]"))?;
        if pred.len() != horizon {
            return Err(Error::Shape(format!(
                "predictions[{d}] has T={} but ground_truth has T={horizon}",
                pred.len()
            )));
        }
    }
    if record.ground_truth.is_fully_valid() {
        Ok(Screening::Accepted(Valid(record)))
    } else {
        Ok(Screening::Skipped(record))
    }
}

pub fn validate_regression_record(record: RegressionRecord) -> Result<Valid<RegressionRecord>> {
    if record.members.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !record.target.is_finite() {
        return Err(Error::NonFinite("target".into()));
    }
    for (member, m) in record.members.iter().enumerate() {
        if !m.mean.is_finite() || !m.variance.is_finite() {
            return Err(Error::NonFinite(format!("members[{member}]")));
        }
        if m.variance < 0.0 {
            return Err(Error::NegativeVariance { member, variance: m.variance });
        }
    }
    Ok(Valid(record))
}

pub fn validate_translation_record(record: TranslationRecord) -> Result<Valid<TranslationRecord>> {
    if record.hypotheses.is_empty() {
        return Err(Error::Shape("record has no hypotheses".into()));
    }
    if record.weights.len() != record.hypotheses.len() {
        return Err(Error::Shape(format!(
            "{} hypotheses but {} weights",
            record.hypotheses.len(),
            record.weights.len()
        )));
    }
    if record.reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    check_distribution(&record.weights, true, "weights")?;
    if let Some(u) = record.uncertainty {
        if !u.is_finite() {
            return Err(Error::NonFinite("uncertainty".into()));
        }
    }
    Ok(Valid(record))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn accepts_well_formed_trajectory_record() {
        let rec = trajectory_record(vec![0.5, 0.5]);
        let screened = validate_trajectory_record(rec.clone()).unwrap();
        assert_eq!(screened, Screening::Accepted(Valid(rec)));
    }

    #[test]
    fn rejects_confidences_that_do_not_sum_to_one() {
        let err = validate_trajectory_record(trajectory_record(vec![0.6, 0.6])).unwrap_err();
        assert!(matches!(err, Error::Distribution(_)), "{err:?}");
    }

    #[test]
    fn zero_confidence_is_allowed_for_trajectories() {
        assert!(validate_trajectory_record(trajectory_record(vec![1.0, 0.0])).is_ok());
    }

    #[test]
    fn negative_confidence_is_rejected() {
        let err = validate_trajectory_record(trajectory_record(vec![1.5, -0.5])).unwrap_err();
        assert!(matches!(err, Error::Distribution(_)));
    }

    #[test]
    fn partially_observed_ground_truth_is_skipped() {
        let mut rec = trajectory_record(vec![0.5, 0.5]);
        rec.ground_truth.validity[1] = false;
        let screened = validate_trajectory_record(rec).unwrap();
        assert!(screened.is_skipped());
        assert!(screened.accepted().is_none());
    }

    #[test]
    fn horizon_mismatch_is_a_shape_error() {
        let mut rec = trajectory_record(vec![0.5, 0.5]);
        rec.predictions[1] = straight(0.0, 4);
        assert!(matches!(validate_trajectory_record(rec).unwrap_err(), Error::Shape(_)));

        let mut rec = trajectory_record(vec![1.0]);
        rec.ground_truth.validity.pop();
        assert!(matches!(validate_trajectory_record(rec).unwrap_err(), Error::Shape(_)));
    }

    #[test]
    fn validation_is_idempotent() {
        let rec = trajectory_record(vec![0.25, 0.75]);
        let once = validate_trajectory_record(rec).unwrap().accepted().unwrap();
        let twice = validate_trajectory_record(once.clone().into_inner()).unwrap().accepted().unwrap();
        assert_eq!(once, twice);

        let reg = RegressionRecord {
            id: "x".into(),
            members: vec![MemberPrediction::new(0.0, 1.0)],
            target: 0.0,
            tag: ShiftTag::shifted(),
        };
        let once = validate_regression_record(reg).unwrap();
        assert_eq!(validate_regression_record(once.clone().into_inner()).unwrap(), once);
    }

    fn regression(members: Vec<(f64, f64)>) -> RegressionRecord {
        RegressionRecord {
            id: "r".into(),
            members: members.into_iter().map(|(m, v)| MemberPrediction::new(m, v)).collect(),
            target: 1.0,
            tag: ShiftTag::in_domain(),
        }
    }

    #[test]
    fn regression_validation_cases() {
        assert!(validate_regression_record(regression(vec![(0.0, 1.0), (2.0, 3.0)])).is_ok());
        assert_eq!(
            validate_regression_record(regression(vec![(0.0, -1.0)])).unwrap_err(),
            Error::NegativeVariance { member: 0, variance: -1.0 }
        );
        assert_eq!(validate_regression_record(regression(vec![])).unwrap_err(), Error::EmptyEnsemble);
    }

    #[test]
    fn translation_weights_must_be_strictly_positive() {
        let rec = TranslationRecord {
            id: "t".into(),
            hypotheses: vec![vec!["a".into()], vec!["b".into()]],
            weights: vec![1.0, 0.0],
            reference: vec!["a".into()],
            uncertainty: None,
            tag: ShiftTag::in_domain(),
        };
        assert!(matches!(validate_translation_record(rec.clone()).unwrap_err(), Error::Distribution(_)));

        let ok = TranslationRecord { weights: vec![0.5, 0.5], ..rec.clone() };
        assert!(validate_translation_record(ok).is_ok());

        let empty_ref = TranslationRecord { weights: vec![0.5, 0.5], reference: vec![], ..rec };
        assert_eq!(validate_translation_record(empty_ref).unwrap_err(), Error::EmptyReference);
    }

    #[test]
    fn score_negation_flips_orientation() {
        assert_eq!(uncertainty_from_score(-3.5), 3.5);
    }
}
