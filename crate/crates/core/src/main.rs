use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use uqeval::records::{self, load_dataset, LoadError, Record};
use uqeval::regression::UncertaintyMeasureKind;
use uqeval::report::{self, CurveGrid, EvalOptions};
use uqeval::rip::{aggregate_scores, AggOperator, RipConfig, ScoreMatrix};
use uqeval::synth::{self, SynthSpec, SynthTask};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "UQEVAL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "uqeval", version, about = "Joint robustness and uncertainty evaluation")]
struct Cli {
    /// Worker threads (defaults to one per core). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a record file against the schema and record invariants.
    Validate { file: PathBuf },
    /// Compute the full metric suite and write a report bundle.
    Eval {
        file: PathBuf,
        #[command(flatten)]
        out: OutDir,
        /// Acceptability threshold on the per-sample error (required for
        /// trajectory and translation records; regression defaults to 1.0).
        #[arg(long)]
        threshold: Option<f64>,
        /// Curve CSV grid: `exact` (every k/N) or `1000` evenly spaced points.
        #[arg(long = "f1-grid", default_value = "exact", value_parser = parse_grid)]
        grid: CurveGrid,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run RIP aggregation over a score matrix or synthetic scenes.
    Rip(RipArgs),
    /// Generate a synthetic record file from a JSON spec.
    Synth {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write retention curves for one error metric.
    Retention {
        file: PathBuf,
        /// mse (regression), a displacement metric such as weighted_ade
        /// (trajectory), or egleu_error (translation).
        #[arg(long)]
        metric: String,
        /// Uncertainty measure for regression records.
        #[arg(long, default_value = "tvar")]
        measure: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        out: OutDir,
        #[arg(long = "f1-grid", default_value = "exact", value_parser = parse_grid)]
        grid: CurveGrid,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct OutDir {
    /// Output directory (falls back to $UQEVAL_OUT_DIR).
    #[arg(long = "out", env = OUT_DIR_ENV)]
    dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RipArgs {
    /// CSV of log-probabilities, one row per candidate, one column per model.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    scores: Option<PathBuf>,
    /// Synthetic trajectory spec (JSON); scenes are generated and scored.
    #[arg(long)]
    synth: Option<PathBuf>,
    /// Ensemble size K.
    #[arg(long)]
    k: Option<usize>,
    /// Candidates per member Q.
    #[arg(long)]
    q: Option<usize>,
    /// Reported trajectories D.
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long = "traj-agg", default_value = "lower_quartile", value_parser = parse_agg)]
    traj_agg: AggOperator,
    #[arg(long = "req-agg", default_value = "lower_quartile", value_parser = parse_agg)]
    req_agg: AggOperator,
    #[command(flatten)]
    out: OutDir,
    /// Overrides the seed in the synthetic spec.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_grid(s: &str) -> Result<CurveGrid, String> {
    match s {
        "exact" => Ok(CurveGrid::Exact),
        "1000" => Ok(CurveGrid::Thinned(1000)),
        other => Err(format!("expected `exact` or `1000`, got {other:?}")),
    }
}

fn parse_agg(s: &str) -> Result<AggOperator, String> {
    s.parse().map_err(|e: uqeval::Error| e.to_string())
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Io(String),
    Config(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed:\n{m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

fn load(path: &Path) -> Result<records::Dataset, Failure> {
    load_dataset(path).map_err(|e| match e {
        LoadError::Io(e) => Failure::io(path, e),
        invalid => Failure::Validation(format!("{}: {invalid}", path.display())),
    })
}

fn out_dir(out: &OutDir) -> Result<PathBuf, Failure> {
    out.dir.clone().ok_or_else(|| Failure::Config(format!("missing required flag --out (or set {OUT_DIR_ENV})")))
}

fn config_error(e: uqeval::Error) -> Failure {
    match e {
        uqeval::Error::Config(m) => Failure::Config(m),
        other => Failure::Validation(other.to_string()),
    }
}

fn read_spec(path: &Path, seed: Option<u64>) -> Result<SynthSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut spec: SynthSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate().map_err(config_error)?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { file } => {
            let dataset = load(&file)?;
            println!(
                "{}: {} valid {} records, {} skipped (partially observed ground truth)",
                file.display(),
                dataset.len(),
                dataset.task(),
                dataset.skipped()
            );
            Ok(())
        }
        Command::Eval { file, out, threshold, grid, seed } => {
            let dir = out_dir(&out)?;
            let dataset = load(&file)?;
            if threshold.is_none() && dataset.task() != records::Task::Regression {
                return Err(Failure::Config(format!(
                    "missing required flag --threshold for {} records",
                    dataset.task()
                )));
            }
            let options = EvalOptions { threshold, seed, grid };
            let report = report::evaluate(&dataset, &options).map_err(config_error)?;
            report::write_bundle(&report, &dir, grid, true).map_err(|e| Failure::io(&dir, e))?;
            println!("wrote {}", dir.join("metrics.json").display());
            Ok(())
        }
        Command::Retention { file, metric, measure, threshold, out, grid, seed } => {
            let dir = out_dir(&out)?;
            let measure = UncertaintyMeasureKind::from_name(&measure)
                .ok_or_else(|| Failure::Config(format!("unknown uncertainty measure {measure:?}")))?;
            let dataset = load(&file)?;
            if threshold.is_none() && dataset.task() != records::Task::Regression {
                return Err(Failure::Config(format!(
                    "missing required flag --threshold for {} records",
                    dataset.task()
                )));
            }
            let options = EvalOptions { threshold, seed, grid };
            let report = report::retention_report(&dataset, &metric, measure, &options).map_err(config_error)?;
            report::write_bundle(&report, &dir, grid, false).map_err(|e| Failure::io(&dir, e))?;
            println!("wrote {} curves to {}", report.curves.len(), dir.join("curves").display());
            Ok(())
        }
        Command::Synth { spec, out, seed } => {
            let spec = read_spec(&spec, seed)?;
            let records: Vec<Record> = match spec.task {
                SynthTask::Regression => {
                    synth::gen_regression(&spec).map_err(config_error)?.into_iter().map(Record::Regression).collect()
                }
                SynthTask::Translation => {
                    synth::gen_translation(&spec).map_err(config_error)?.into_iter().map(Record::Translation).collect()
                }
                SynthTask::Trajectory => {
                    let config = synth::rip_config_for(
                        &spec,
                        RipConfig::default().reported.min(spec.ensemble_size * spec.samples_per_member),
                    );
                    synth::gen_trajectory_records(&spec, &config)
                        .map_err(config_error)?
                        .into_iter()
                        .map(Record::Trajectory)
                        .collect()
                }
            };
            records::write_records_to_path(&out, &records).map_err(|e| Failure::io(&out, e))?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Rip(args) => run_rip(args),
    }
}

#[derive(Serialize)]
struct SelectionOutput {
    candidates: usize,
    members: usize,
    selected: Vec<usize>,
    confidences: Vec<f64>,
    request_score: f64,
    request_uncertainty: f64,
    per_trajectory_scores: Vec<f64>,
}

fn run_rip(args: RipArgs) -> Result<(), Failure> {
    let dir = out_dir(&args.out)?;
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    if let Some(path) = &args.scores {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let matrix =
            ScoreMatrix::from_csv(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        let k = args.k.unwrap_or(matrix.members());
        if k != matrix.members() {
            return Err(Failure::Config(format!("--k {k} but {} has {} columns", path.display(), matrix.members())));
        }
        let g = matrix.candidates();
        if let Some(q) = args.q {
            if q * k != g {
                return Err(Failure::Config(format!(
                    "--k {k} --q {q} implies G={} but {} has {g} rows",
                    q * k,
                    path.display()
                )));
            }
        }
        let config = RipConfig {
            ensemble_size: k,
            samples_per_member: args.q.unwrap_or(g.div_ceil(k)),
            candidates: g,
            reported: args.d,
            traj_agg: args.traj_agg,
            req_agg: args.req_agg,
        };
        let sel = aggregate_scores(&matrix, &config).map_err(config_error)?;
        let output = SelectionOutput {
            candidates: g,
            members: k,
            selected: sel.selected,
            confidences: sel.confidences,
            request_score: sel.request_score,
            request_uncertainty: sel.request_uncertainty,
            per_trajectory_scores: sel.per_trajectory_scores,
        };
        let path = dir.join("rip_selection.json");
        let mut json = serde_json::to_string_pretty(&output).expect("finite scores");
        json.push('\n');
        fs::write(&path, json).map_err(|e| Failure::io(&path, e))?;
        println!("wrote {}", path.display());
        return Ok(());
    }

    let spec_path = args.synth.as_ref().expect("clap requires --scores or --synth");
    let mut spec = read_spec(spec_path, args.seed)?;
    if spec.task != SynthTask::Trajectory {
        return Err(Failure::Config(format!("{} is not a trajectory spec", spec_path.display())));
    }
    spec.ensemble_size = args.k.unwrap_or(spec.ensemble_size);
    spec.samples_per_member = args.q.unwrap_or(spec.samples_per_member);
    spec.validate().map_err(config_error)?;
    let config =
        RipConfig::self_generated(spec.ensemble_size, spec.samples_per_member, args.d, args.traj_agg, args.req_agg);
    config.validate().map_err(config_error)?;
    let records: Vec<Record> = synth::gen_trajectory_records(&spec, &config)
        .map_err(config_error)?
        .into_iter()
        .map(Record::Trajectory)
        .collect();
    let path = dir.join("records.jsonl");
    records::write_records_to_path(&path, &records).map_err(|e| Failure::io(&path, e))?;
    println!("wrote {} records to {}", records.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("configuration error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
