//! JSONL record files.
//!
//! One JSON object per line with a top-level `"task"` discriminator:
//!
//! ```text
//! {"task":"regression","id":"a","tag":{"partition":"in_domain","meta":[]},"members":[{"mean":0.1,"var":1.0}],"target":0.0}
//! {"task":"trajectory","id":"b","tag":{...},"predictions":[[[x,y],...],...],"confidences":[...],
//!  "request_uncertainty":0.3,"ground_truth":{"states":[[x,y],...],"validity":[true,...]}}
//! {"task":"translation","id":"c","tag":{...},"hypotheses":[["tok",...],...],"weights":[...],"reference":["tok",...]}
//! ```
//!
//! Translation records may carry an optional `"uncertainty"`.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{
    validate_regression_record, validate_trajectory_record, validate_translation_record, MemberPrediction, Point,
    RegressionRecord, Screening, ShiftTag, Trajectory, TrajectoryRecord, TranslationRecord, Valid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Trajectory,
    Translation,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Regression => "regression",
            Task::Trajectory => "trajectory",
            Task::Translation => "translation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberLine {
    mean: f64,
    var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundTruthLine {
    states: Vec<[f64; 2]>,
    validity: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
enum RecordLine {
    Regression {
        id: String,
        tag: ShiftTag,
        members: Vec<MemberLine>,
        target: f64,
    },
    Trajectory {
        id: String,
        tag: ShiftTag,
        predictions: Vec<Vec<[f64; 2]>>,
        confidences: Vec<f64>,
        request_uncertainty: f64,
        ground_truth: GroundTruthLine,
    },
    Translation {
        id: String,
        tag: ShiftTag,
        hypotheses: Vec<Vec<String>>,
        weights: Vec<f64>,
        reference: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        uncertainty: Option<f64>,
    },
}

/// A parsed (not yet validated) record of any task.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Regression(RegressionRecord),
    Trajectory(TrajectoryRecord),
    Translation(TranslationRecord),
}

impl Record {
    pub fn task(&self) -> Task {
        match self {
            Record::Regression(_) => Task::Regression,
            Record::Trajectory(_) => Task::Trajectory,
            Record::Translation(_) => Task::Translation,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Record::Regression(r) => &r.id,
            Record::Trajectory(r) => &r.id,
            Record::Translation(r) => &r.id,
        }
    }
}

fn points(xy: Vec<[f64; 2]>) -> Vec<Point> {
    xy.into_iter().map(|[x, y]| Point::new(x, y)).collect()
}

fn pairs(states: &[Point]) -> Vec<[f64; 2]> {
    states.iter().map(|p| [p.x, p.y]).collect()
}

impl From<RecordLine> for Record {
    fn from(line: RecordLine) -> Self {
        match line {
            RecordLine::Regression { id, tag, members, target } => Record::Regression(RegressionRecord {
                id,
                members: members.into_iter().map(|m| MemberPrediction::new(m.mean, m.var)).collect(),
                target,
                tag,
            }),
            RecordLine::Trajectory { id, tag, predictions, confidences, request_uncertainty, ground_truth } => {
                Record::Trajectory(TrajectoryRecord {
                    id,
                    predictions: predictions.into_iter().map(|p| Trajectory::new(points(p))).collect(),
                    confidences,
                    request_uncertainty,
                    ground_truth: Trajectory::with_validity(points(ground_truth.states), ground_truth.validity),
                    tag,
                })
            }
            RecordLine::Translation { id, tag, hypotheses, weights, reference, uncertainty } => {
                Record::Translation(TranslationRecord { id, hypotheses, weights, reference, uncertainty, tag })
            }
        }
    }
}

impl From<&Record> for RecordLine {
    fn from(record: &Record) -> Self {
        match record {
            Record::Regression(r) => RecordLine::Regression {
                id: r.id.clone(),
                tag: r.tag.clone(),
                members: r.members.iter().map(|m| MemberLine { mean: m.mean, var: m.variance }).collect(),
                target: r.target,
            },
            Record::Trajectory(r) => RecordLine::Trajectory {
                id: r.id.clone(),
                tag: r.tag.clone(),
                predictions: r.predictions.iter().map(|p| pairs(&p.states)).collect(),
                confidences: r.confidences.clone(),
                request_uncertainty: r.request_uncertainty,
                ground_truth: GroundTruthLine {
                    states: pairs(&r.ground_truth.states),
                    validity: r.ground_truth.validity.clone(),
                },
            },
            Record::Translation(r) => RecordLine::Translation {
                id: r.id.clone(),
                tag: r.tag.clone(),
                hypotheses: r.hypotheses.clone(),
                weights: r.weights.clone(),
                reference: r.reference.clone(),
                uncertainty: r.uncertainty,
            },
        }
    }
}

/// Serialises one record as a single JSON line (no trailing newline).
/// Floats use the shortest representation that round-trips exactly.
pub fn to_json_line(record: &Record) -> String {
    serde_json::to_string(&RecordLine::from(record)).expect("records contain only finite floats")
}

pub fn parse_line(line: &str) -> Result<Record, String> {
    serde_json::from_str::<RecordLine>(line).map(Record::from).map_err(|e| e.to_string())
}

pub fn write_records<W: Write>(writer: W, records: &[Record]) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    for r in records {
        w.write_all(to_json_line(r).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_records_to_path(path: &Path, records: &[Record]) -> io::Result<()> {
    write_records(File::create(path)?, records)
}

/// Problem with one line of a record file. Lines are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// A validated, single-task dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Regression(Vec<Valid<RegressionRecord>>),
    Trajectory {
        records: Vec<Valid<TrajectoryRecord>>,
        /// Ids of well-formed records skipped for partially observed ground truth.
        skipped: Vec<String>,
    },
    Translation(Vec<Valid<TranslationRecord>>),
}

impl Dataset {
    pub fn task(&self) -> Task {
        match self {
            Dataset::Regression(_) => Task::Regression,
            Dataset::Trajectory { .. } => Task::Trajectory,
            Dataset::Translation(_) => Task::Translation,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Regression(r) => r.len(),
            Dataset::Trajectory { records, .. } => records.len(),
            Dataset::Translation(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn skipped(&self) -> usize {
        match self {
            Dataset::Trajectory { skipped, .. } => skipped.len(),
            _ => 0,
        }
    }
}

#[derive(Debug)]
pub enum LoadError {
    Io(io::Error),
    /// Every offending line, in file order.
    Invalid(Vec<LineError>),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "I/O error: {e}"),
            LoadError::Invalid(errors) => {
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

impl From<io::Error> for LoadError {
    fn from(e: io::Error) -> Self {
        LoadError::Io(e)
    }
}

enum Checked {
    Regression(Valid<RegressionRecord>),
    Trajectory(Screening<TrajectoryRecord>),
    Translation(Valid<TranslationRecord>),
}

fn check(record: Record) -> Result<Checked, String> {
    let result = match record {
        Record::Regression(r) => validate_regression_record(r).map(Checked::Regression),
        Record::Trajectory(r) => validate_trajectory_record(r).map(Checked::Trajectory),
        Record::Translation(r) => validate_translation_record(r).map(Checked::Translation),
    };
    result.map_err(|e| e.to_string())
}

type LineOutcome = Result<(Task, Checked), String>;

/// Parses and validates every non-blank line. Lines are checked in parallel
/// and results kept in file order.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Dataset, LoadError> {
    let lines: Vec<(usize, String)> =
        reader.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l))).collect::<io::Result<_>>()?;
    let checked: Vec<(usize, LineOutcome)> = lines
        .par_iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let res = parse_line(l).and_then(|r| {
                let task = r.task();
                check(r).map(|c| (task, c))
            });
            (*n, res)
        })
        .collect();

    let mut errors = Vec::new();
    let mut task = None;
    let mut regression = Vec::new();
    let mut trajectory = Vec::new();
    let mut skipped = Vec::new();
    let mut translation = Vec::new();
    for (line, res) in checked {
        let (t, c) = match res {
            Ok(v) => v,
            Err(message) => {
                errors.push(LineError { line, message });
                continue;
            }
        };
        match task {
            None => task = Some(t),
            Some(expected) if expected != t => {
                errors.push(LineError { line, message: format!("task {t} does not match the file's task {expected}") });
                continue;
            }
            Some(_) => {}
        }
        match c {
            Checked::Regression(r) => regression.push(r),
            Checked::Trajectory(Screening::Accepted(r)) => trajectory.push(r),
            Checked::Trajectory(Screening::Skipped(r)) => skipped.push(r.id),
            Checked::Translation(r) => translation.push(r),
        }
    }
    if !errors.is_empty() {
        return Err(LoadError::Invalid(errors));
    }
    match task {
        None => Err(LoadError::Invalid(vec![LineError { line: 0, message: "file contains no records".into() }])),
        Some(Task::Regression) => Ok(Dataset::Regression(regression)),
        Some(Task::Trajectory) => Ok(Dataset::Trajectory { records: trajectory, skipped }),
        Some(Task::Translation) => Ok(Dataset::Translation(translation)),
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset, LoadError> {
    read_dataset(BufReader::new(File::open(path)?))
}
