//! Seeded synthetic datasets for the three task families.
//!
//! Every record is a pure function of `(spec, record index)`: each one draws
//! from its own keyed stream, so output is identical whatever order or
//! thread the records are generated on. In-domain records occupy indices
//! `0..n_in`, shifted records `n_in..n_in + n_shifted`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_trajectory_record, MemberPrediction, Point, RegressionRecord, ShiftTag, Trajectory, TrajectoryRecord,
    TranslationRecord,
};
use crate::rip::{run_rip, Covariance2, GaussianStep, LikelihoodModel, RipConfig};
use crate::rng::{keyed_rng, streams};

/// Prediction horizon: 25 future states.
pub const HORIZON: usize = 25;
/// Sampling interval in seconds (5 Hz).
pub const TIME_STEP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthTask {
    Regression,
    Trajectory,
    Translation,
}

fn default_ensemble_size() -> usize {
    5
}

fn default_samples_per_member() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_in: usize,
    pub n_shifted: usize,
    pub shift_severity: f64,
    pub task: SynthTask,
    /// Ensemble size K for regression members and trajectory models.
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
    /// Candidates drawn from each trajectory model (Q).
    #[serde(default = "default_samples_per_member")]
    pub samples_per_member: usize,
}

impl SynthSpec {
    pub fn new(task: SynthTask, seed: u64, n_in: usize, n_shifted: usize, shift_severity: f64) -> Self {
        SynthSpec {
            seed,
            n_in,
            n_shifted,
            shift_severity,
            task,
            ensemble_size: default_ensemble_size(),
            samples_per_member: default_samples_per_member(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.shift_severity.is_finite() || self.shift_severity < 0.0 {
            return Err(Error::Config(format!("shift_severity must be finite and >= 0, got {}", self.shift_severity)));
        }
        if self.ensemble_size == 0 || self.samples_per_member == 0 {
            return Err(Error::Config("ensemble_size and samples_per_member must be >= 1".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_in + self.n_shifted
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_shifted(&self, index: usize) -> bool {
        index >= self.n_in
    }

    fn tag(&self, index: usize) -> ShiftTag {
        if self.is_shifted(index) {
            ShiftTag::shifted()
        } else {
            ShiftTag::in_domain()
        }
    }

    /// Severity felt by record `index`: zero for in-domain records.
    fn severity_at(&self, index: usize) -> f64 {
        if self.is_shifted(index) {
            self.shift_severity
        } else {
            0.0
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// ---------------------------------------------------------------- regression

pub fn gen_regression(spec: &SynthSpec) -> Result<Vec<RegressionRecord>> {
    spec.validate()?;
    Ok((0..spec.len()).into_par_iter().map(|i| regression_record(spec, i)).collect())
}

/// Members observe the same signal with a shared aleatoric noise level and
/// an individual bias whose spread grows with the record's shift magnitude.
fn regression_record(spec: &SynthSpec, index: usize) -> RegressionRecord {
    let mut rng = keyed_rng(spec.seed, index as u64, streams::REGRESSION);
    let x: f64 = rng.random_range(-3.0..3.0);
    let signal = 2.0 * x.sin() + 0.5 * x;
    let noise_sd: f64 = rng.random_range(0.3..1.2);
    let shift = spec.severity_at(index) * rng.random_range(0.5..1.5);
    let target = signal + noise_sd * normal(&mut rng);

    let bias_sd = 0.15 + 0.5 * shift;
    let members = (0..spec.ensemble_size)
        .map(|_| {
            let bias = bias_sd * normal(&mut rng);
            let variance = noise_sd * noise_sd * (0.1 * normal(&mut rng)).exp();
            MemberPrediction::new(signal + bias, variance)
        })
        .collect();
    RegressionRecord { id: format!("reg-{index:06}"), members, target, tag: spec.tag(index) }
}

// ---------------------------------------------------------------- trajectory

/// Kinematic motion primitive, starting at the origin heading along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Maneuver {
    ConstantVelocity { speed: f64 },
    ConstantTurn { speed: f64, yaw_rate: f64 },
    Stopping { speed: f64, deceleration: f64 },
}

impl Maneuver {
    pub fn name(&self) -> &'static str {
        match self {
            Maneuver::ConstantVelocity { .. } => "constant_velocity",
            Maneuver::ConstantTurn { .. } => "constant_turn",
            Maneuver::Stopping { .. } => "stopping",
        }
    }

    /// Position at time `t` seconds.
    pub fn position(&self, t: f64) -> Point {
        match *self {
            Maneuver::ConstantVelocity { speed } => Point::new(speed * t, 0.0),
            Maneuver::ConstantTurn { speed, yaw_rate } => {
                if yaw_rate.abs() < 1e-12 {
                    return Point::new(speed * t, 0.0);
                }
                let r = speed / yaw_rate;
                let theta = yaw_rate * t;
                Point::new(r * theta.sin(), r * (1.0 - theta.cos()))
            }
            Maneuver::Stopping { speed, deceleration } => {
                let stop = speed / deceleration;
                let t = t.min(stop);
                Point::new(speed * t - 0.5 * deceleration * t * t, 0.0)
            }
        }
    }

    /// States at `t * dt` for `t = 1..=steps`.
    pub fn rollout(&self, steps: usize, dt: f64) -> Trajectory {
        Trajectory::new((1..=steps).map(|t| self.position(t as f64 * dt)).collect())
    }

    fn perturbed(&self, speed_factor: f64, yaw_offset: f64) -> Maneuver {
        match *self {
            Maneuver::ConstantVelocity { speed } if yaw_offset == 0.0 => {
                Maneuver::ConstantVelocity { speed: speed * speed_factor }
            }
            Maneuver::ConstantVelocity { speed } => {
                Maneuver::ConstantTurn { speed: speed * speed_factor, yaw_rate: yaw_offset }
            }
            Maneuver::ConstantTurn { speed, yaw_rate } => {
                Maneuver::ConstantTurn { speed: speed * speed_factor, yaw_rate: yaw_rate + yaw_offset }
            }
            Maneuver::Stopping { speed, deceleration } => {
                Maneuver::Stopping { speed: speed * speed_factor, deceleration }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    ConstantVelocity,
    ConstantTurn,
    Stopping,
    /// Two admissible modes: turn left or turn right.
    Junction,
}

impl SceneKind {
    const ALL: [SceneKind; 4] =
        [SceneKind::ConstantVelocity, SceneKind::ConstantTurn, SceneKind::Stopping, SceneKind::Junction];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::ConstantVelocity => "constant_velocity",
            SceneKind::ConstantTurn => "constant_turn",
            SceneKind::Stopping => "stopping",
            SceneKind::Junction => "junction",
        }
    }
}

/// Autoregressive Gaussian model around a kinematic rollout: step t is
/// centred on the trajectory's own previous state plus the rollout's
/// displacement at t.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutModel {
    displacements: Vec<Point>,
    covariances: Vec<Covariance2>,
}

impl RolloutModel {
    pub fn new(mean: &Trajectory, covariances: Vec<Covariance2>) -> Result<Self> {
        if mean.len() != covariances.len() || mean.is_empty() {
            return Err(Error::Shape(format!("{} mean states but {} covariances", mean.len(), covariances.len())));
        }
        let mut prev = Point::default();
        let displacements = mean
            .states
            .iter()
            .map(|&s| {
                let d = Point::new(s.x - prev.x, s.y - prev.y);
                prev = s;
                d
            })
            .collect();
        Ok(RolloutModel { displacements, covariances })
    }

    /// The model's most likely trajectory.
    pub fn mean_trajectory(&self) -> Trajectory {
        let mut at = Point::default();
        Trajectory::new(
            self.displacements
                .iter()
                .map(|d| {
                    at = Point::new(at.x + d.x, at.y + d.y);
                    at
                })
                .collect(),
        )
    }

    pub fn horizon(&self) -> usize {
        self.displacements.len()
    }

    fn step(&self, t: usize, prev: Point) -> GaussianStep {
        let d = self.displacements[t];
        GaussianStep::new(Point::new(prev.x + d.x, prev.y + d.y), self.covariances[t])
    }

    /// Ancestral sample: each state drawn from its step conditioned on the
    /// sampled prefix.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Trajectory {
        let mut prev = Point::default();
        let mut states = Vec::with_capacity(self.horizon());
        for t in 0..self.horizon() {
            let z = (normal(rng), normal(rng));
            prev = self.step(t, prev).sample_from(z);
            states.push(prev);
        }
        Trajectory::new(states)
    }
}

impl LikelihoodModel for RolloutModel {
    fn step_distributions(&self, trajectory: &Trajectory) -> Result<Vec<GaussianStep>> {
        if trajectory.len() != self.horizon() {
            return Err(Error::Shape(format!(
                "model horizon {} but trajectory has T={}",
                self.horizon(),
                trajectory.len()
            )));
        }
        let mut prev = Point::default();
        Ok((0..self.horizon())
            .map(|t| {
                let step = self.step(t, prev);
                prev = trajectory.states[t];
                step
            })
            .collect())
    }
}

/// One prediction request: ground truth, the generator's own mode list, the
/// K likelihood models and the G = K * Q sampled candidates.
#[derive(Debug, Clone)]
pub struct TrajectoryScene {
    pub id: String,
    pub kind: SceneKind,
    pub tag: ShiftTag,
    pub ground_truth: Trajectory,
    pub modes: Vec<Trajectory>,
    pub models: Vec<RolloutModel>,
    pub candidates: Vec<Trajectory>,
}

impl TrajectoryScene {
    /// Runs the RIP pipeline over this scene's models and candidates.
    pub fn to_record(&self, config: &RipConfig) -> Result<TrajectoryRecord> {
        let out = run_rip(&self.models, &self.candidates, config)?;
        Ok(TrajectoryRecord {
            id: self.id.clone(),
            predictions: out.trajectories,
            confidences: out.confidences,
            request_uncertainty: out.request_uncertainty,
            ground_truth: self.ground_truth.clone(),
            tag: self.tag.clone(),
        })
    }
}

fn scene_maneuvers(kind: SceneKind, rng: &mut ChaCha8Rng) -> Vec<Maneuver> {
    let speed = rng.random_range(3.0..12.0);
    match kind {
        SceneKind::ConstantVelocity => vec![Maneuver::ConstantVelocity { speed }],
        SceneKind::ConstantTurn => {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            vec![Maneuver::ConstantTurn { speed, yaw_rate: sign * rng.random_range(0.1..0.4) }]
        }
        SceneKind::Stopping => vec![Maneuver::Stopping { speed, deceleration: rng.random_range(1.5..4.0) }],
        SceneKind::Junction => {
            let yaw = rng.random_range(0.25..0.45);
            vec![Maneuver::ConstantTurn { speed, yaw_rate: yaw }, Maneuver::ConstantTurn { speed, yaw_rate: -yaw }]
        }
    }
}

/// Generates scene `index` with its kind drawn from the scene stream.
pub fn trajectory_scene(spec: &SynthSpec, index: usize) -> Result<TrajectoryScene> {
    let mut rng = keyed_rng(spec.seed, index as u64, streams::TRAJECTORY_SCENE);
    let kind = SceneKind::ALL[rng.random_range(0..SceneKind::ALL.len())];
    build_scene(spec, index, kind, rng)
}

/// Generates scene `index` with a fixed kind.
pub fn trajectory_scene_of_kind(spec: &SynthSpec, index: usize, kind: SceneKind) -> Result<TrajectoryScene> {
    let mut rng = keyed_rng(spec.seed, index as u64, streams::TRAJECTORY_SCENE);
    let _ = rng.random_range(0..SceneKind::ALL.len());
    build_scene(spec, index, kind, rng)
}

fn build_scene(spec: &SynthSpec, index: usize, kind: SceneKind, mut rng: ChaCha8Rng) -> Result<TrajectoryScene> {
    spec.validate()?;
    let severity = spec.severity_at(index);
    let maneuvers = scene_maneuvers(kind, &mut rng);
    let modes: Vec<Trajectory> = maneuvers.iter().map(|m| m.rollout(HORIZON, TIME_STEP)).collect();

    // Ground truth follows one mode, perturbed harder on shifted scenes.
    let chosen = maneuvers[rng.random_range(0..maneuvers.len())];
    let speed_factor = (1.0 + (0.03 + 0.08 * severity) * normal(&mut rng)).max(0.2);
    let yaw_offset = (0.01 + 0.04 * severity) * normal(&mut rng);
    let jitter = 0.03 + 0.05 * severity;
    let gt_mean = chosen.perturbed(speed_factor, yaw_offset).rollout(HORIZON, TIME_STEP);
    let ground_truth = Trajectory::new(
        gt_mean
            .states
            .iter()
            .map(|p| Point::new(p.x + jitter * normal(&mut rng), p.y + jitter * normal(&mut rng)))
            .collect(),
    );

    // Members disagree more as severity grows.
    let disagreement = 0.02 + 0.06 * severity;
    let mut models = Vec::with_capacity(spec.ensemble_size);
    for k in 0..spec.ensemble_size {
        let mut member_rng = keyed_rng(spec.seed, index as u64, streams::TRAJECTORY_MEMBER * 1000 + k as u64);
        let base = maneuvers[k % maneuvers.len()];
        let speed_factor = (1.0 + disagreement * normal(&mut member_rng)).max(0.2);
        let yaw_offset = 0.5 * disagreement * normal(&mut member_rng);
        let mean = base.perturbed(speed_factor, yaw_offset).rollout(HORIZON, TIME_STEP);
        let along = 0.06 * (1.0 + 0.2 * member_rng.random::<f64>());
        let across = 0.03 * (1.0 + 0.2 * member_rng.random::<f64>());
        let covariances =
            headings(&mean).into_iter().map(|h| Covariance2::oriented(h, along, across)).collect::<Result<Vec<_>>>()?;
        models.push(RolloutModel::new(&mean, covariances)?);
    }

    let mut candidates = Vec::with_capacity(spec.ensemble_size * spec.samples_per_member);
    for (k, model) in models.iter().enumerate() {
        let mut sample_rng = keyed_rng(spec.seed, index as u64, streams::TRAJECTORY_SAMPLES * 1000 + k as u64);
        for _ in 0..spec.samples_per_member {
            candidates.push(model.sample(&mut sample_rng));
        }
    }

    let mut tag = spec.tag(index).with_meta([format!("maneuver:{}", kind.name())]);
    if severity > 0.0 {
        tag.meta.push("condition:perturbed_dynamics".into());
    }
    Ok(TrajectoryScene { id: format!("traj-{index:06}"), kind, tag, ground_truth, modes, models, candidates })
}

/// Heading of motion at each state, reusing the previous heading while stopped.
fn headings(traj: &Trajectory) -> Vec<f64> {
    let mut prev = Point::default();
    let mut heading = 0.0;
    traj.states
        .iter()
        .map(|&s| {
            let (dx, dy) = (s.x - prev.x, s.y - prev.y);
            if dx.hypot(dy) > 1e-9 {
                heading = dy.atan2(dx);
            }
            prev = s;
            heading
        })
        .collect()
}

/// Scenes plus the RIP configuration that matches their ensemble layout.
pub fn gen_trajectory_scenes(spec: &SynthSpec) -> Result<Vec<TrajectoryScene>> {
    spec.validate()?;
    (0..spec.len()).into_par_iter().map(|i| trajectory_scene(spec, i)).collect()
}

/// RIP configuration matching a spec's ensemble layout, reporting `reported`
/// trajectories with lower-quartile aggregation at both levels.
pub fn rip_config_for(spec: &SynthSpec, reported: usize) -> RipConfig {
    RipConfig::self_generated(
        spec.ensemble_size,
        spec.samples_per_member,
        reported,
        crate::rip::AggOperator::LowerQuartile,
        crate::rip::AggOperator::LowerQuartile,
    )
}

/// Complete trajectory records: scenes run through RIP with `config`.
pub fn gen_trajectory_records(spec: &SynthSpec, config: &RipConfig) -> Result<Vec<TrajectoryRecord>> {
    let scenes = gen_trajectory_scenes(spec)?;
    scenes
        .par_iter()
        .map(|s| {
            let rec = s.to_record(config)?;
            debug_assert!(validate_trajectory_record(rec.clone()).is_ok());
            Ok(rec)
        })
        .collect()
}

// --------------------------------------------------------------- translation

/// Vocabulary size of the synthetic language.
pub const VOCABULARY: usize = 64;
/// Hypotheses per record.
pub const HYPOTHESES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Anomaly {
    Drop,
    Swap,
    Substitute,
}

impl Anomaly {
    fn name(self) -> &'static str {
        match self {
            Anomaly::Drop => "anomaly:token_drop",
            Anomaly::Swap => "anomaly:token_swap",
            Anomaly::Substitute => "anomaly:token_substitution",
        }
    }
}

fn token(rng: &mut ChaCha8Rng) -> String {
    format!("w{:02}", rng.random_range(0..VOCABULARY))
}

/// Applies per-position anomalies with probability `rate`; returns the
/// corrupted sequence and the anomalies applied.
fn corrupt(reference: &[String], rate: f64, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<Anomaly>) {
    let mut out = reference.to_vec();
    let mut applied = Vec::new();
    let mut i = 0;
    while i < out.len() {
        if rng.random::<f64>() < rate {
            let anomaly = [Anomaly::Drop, Anomaly::Swap, Anomaly::Substitute][rng.random_range(0..3)];
            match anomaly {
                Anomaly::Drop if out.len() > 1 => {
                    out.remove(i);
                    applied.push(Anomaly::Drop);
                    continue;
                }
                Anomaly::Swap if i + 1 < out.len() => {
                    out.swap(i, i + 1);
                    applied.push(Anomaly::Swap);
                }
                _ => {
                    out[i] = token(rng);
                    applied.push(Anomaly::Substitute);
                }
            }
        }
        i += 1;
    }
    (out, applied)
}

pub fn gen_translation(spec: &SynthSpec) -> Result<Vec<TranslationRecord>> {
    spec.validate()?;
    Ok((0..spec.len()).into_par_iter().map(|i| translation_record(spec, i)).collect())
}

fn translation_record(spec: &SynthSpec, index: usize) -> TranslationRecord {
    let mut rng = keyed_rng(spec.seed, index as u64, streams::TRANSLATION);
    let len = rng.random_range(4..=16);
    let reference: Vec<String> = (0..len).map(|_| token(&mut rng)).collect();
    let base_rate = if spec.is_shifted(index) { 0.12 } else { 0.03 } * spec.shift_severity;

    let mut hypotheses = Vec::with_capacity(HYPOTHESES);
    let mut logits = Vec::with_capacity(HYPOTHESES);
    let mut edit_fraction = 0.0;
    let mut anomalies = Vec::new();
    for h in 0..HYPOTHESES {
        let rate = (base_rate * (1.0 + 0.5 * h as f64)).min(0.9);
        let (hyp, applied) = corrupt(&reference, rate, &mut rng);
        let edits = applied.len() as f64;
        edit_fraction += edits / len as f64;
        logits.push(-0.5 * edits + 0.3 * normal(&mut rng));
        for a in applied {
            if !anomalies.contains(&a) {
                anomalies.push(a);
            }
        }
        hypotheses.push(hyp);
    }
    let weights = crate::rip::softmax(&logits);
    let uncertainty = 2.0 * edit_fraction / HYPOTHESES as f64 + 0.1 * rng.random::<f64>();

    let mut tag = spec.tag(index);
    anomalies.sort_by_key(|a| a.name());
    tag.meta.extend(anomalies.into_iter().map(|a| a.name().to_string()));
    TranslationRecord {
        id: format!("nmt-{index:06}"),
        hypotheses,
        weights,
        reference,
        uncertainty: Some(uncertainty),
        tag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_regression_record, validate_translation_record};
    use crate::rip::log_prob_trajectory;
    use crate::trajectory::ade;

    #[test]
    fn constant_velocity_rollout_is_exact() {
        let m = Maneuver::ConstantVelocity { speed: 7.5 };
        let traj = m.rollout(HORIZON, TIME_STEP);
        assert_eq!(traj.len(), 25);
        for (t, p) in traj.states.iter().enumerate() {
            assert_eq!(*p, Point::new(7.5 * ((t + 1) as f64 * TIME_STEP), 0.0));
        }
    }

    #[test]
    fn stopping_vehicle_stays_put() {
        let m = Maneuver::Stopping { speed: 4.0, deceleration: 4.0 };
        let traj = m.rollout(HORIZON, TIME_STEP);
        assert_eq!(traj.states[10], traj.states[24]);
        assert_eq!(traj.states[24], Point::new(2.0, 0.0));
    }

    #[test]
    fn generators_are_deterministic_and_valid() {
        let spec = SynthSpec::new(SynthTask::Regression, 11, 20, 20, 2.0);
        let a = gen_regression(&spec).unwrap();
        assert_eq!(a, gen_regression(&spec).unwrap());
        assert!(a.into_iter().all(|r| validate_regression_record(r).is_ok()));

        let spec = SynthSpec::new(SynthTask::Translation, 11, 20, 20, 2.0);
        let a = gen_translation(&spec).unwrap();
        assert_eq!(a, gen_translation(&spec).unwrap());
        assert!(a.into_iter().all(|r| validate_translation_record(r).is_ok()));

        let spec = SynthSpec::new(SynthTask::Trajectory, 11, 6, 6, 2.0);
        let cfg = rip_config_for(&spec, 5);
        let a = gen_trajectory_records(&spec, &cfg).unwrap();
        assert_eq!(a, gen_trajectory_records(&spec, &cfg).unwrap());
        for r in a {
            assert!(matches!(validate_trajectory_record(r).unwrap(), crate::model::Screening::Accepted(_)));
        }
    }

    #[test]
    fn same_seed_gives_same_candidates() {
        let spec = SynthSpec::new(SynthTask::Trajectory, 5, 3, 0, 0.0);
        let a = trajectory_scene(&spec, 2).unwrap();
        let b = trajectory_scene(&spec, 2).unwrap();
        assert_eq!(a.candidates, b.candidates);
        let other = SynthSpec { seed: 6, ..spec };
        assert_ne!(trajectory_scene(&other, 2).unwrap().candidates, a.candidates);
    }

    #[test]
    fn records_do_not_depend_on_dataset_size() {
        let small = SynthSpec::new(SynthTask::Regression, 3, 5, 0, 1.0);
        let large = SynthSpec::new(SynthTask::Regression, 3, 50, 0, 1.0);
        assert_eq!(gen_regression(&small).unwrap()[..], gen_regression(&large).unwrap()[..5]);
    }

    #[test]
    fn junction_candidates_cover_both_modes() {
        let spec = SynthSpec::new(SynthTask::Trajectory, 21, 8, 0, 0.0);
        for index in 0..8 {
            let scene = trajectory_scene_of_kind(&spec, index, SceneKind::Junction).unwrap();
            assert_eq!(scene.modes.len(), 2);
            for mode in &scene.modes {
                let best = scene.candidates.iter().map(|c| ade(c, mode).unwrap()).fold(f64::INFINITY, f64::min);
                assert!(best < 0.5, "scene {index}: closest candidate is {best} m from a mode");
            }
        }
    }

    #[test]
    fn model_mean_scores_highest_under_its_model() {
        let spec = SynthSpec::new(SynthTask::Trajectory, 8, 4, 4, 1.5);
        for scene in gen_trajectory_scenes(&spec).unwrap() {
            for model in &scene.models {
                let best = log_prob_trajectory(model, &model.mean_trajectory()).unwrap();
                for c in &scene.candidates {
                    assert!(log_prob_trajectory(model, c).unwrap() <= best);
                }
            }
        }
    }

    #[test]
    fn translation_without_severity_is_perfect() {
        let spec = SynthSpec::new(SynthTask::Translation, 2, 10, 10, 0.0);
        for r in gen_translation(&spec).unwrap() {
            assert!(r.hypotheses.iter().all(|h| *h == r.reference));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let spec = SynthSpec::new(SynthTask::Regression, 0, 1, 1, -1.0);
        assert!(matches!(gen_regression(&spec), Err(Error::Config(_))));
        let spec = SynthSpec { ensemble_size: 0, ..SynthSpec::new(SynthTask::Regression, 0, 1, 1, 1.0) };
        assert!(matches!(gen_regression(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn spec_parses_with_defaults() {
        let spec: SynthSpec =
            serde_json::from_str(r#"{"seed":1,"n_in":2,"n_shifted":3,"shift_severity":0.5,"task":"trajectory"}"#)
                .unwrap();
        assert_eq!(spec.ensemble_size, 5);
        assert_eq!(spec.samples_per_member, 10);
    }
}
