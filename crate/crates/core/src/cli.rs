//! Command-line runner: parses arguments, loads the config, runs the task
//! on a sized worker pool and writes reports.
//!
//! Exit codes: 0 on success, 2 when any domination verdict fails, 1 on
//! configuration or runtime errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::bounds::{evaluate_named, Evaluation};
use crate::conditions::{check_wmb, moment_functional, truncated_second_moment_series};
use crate::config::{ConditionTask, ExperimentConfig, Task};
use crate::error::{Error, Result};
use crate::montecarlo::{verify_grid, with_workers};
use crate::report;
use crate::rng::CounterRng;
use crate::series::scan_series;

#[derive(Parser, Debug)]
#[command(name = "fieldconc", version, about = "Tail bounds and Monte Carlo checks for random fields on N^d")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FIELDCONC_WORKERS")]
    workers: Option<usize>,
    /// Omit the generation timestamp from SVG files.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run whatever task the config describes.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check bound domination by Monte Carlo; writes verdicts.csv.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Baum–Katz type series diagnostics.
    Series {
        #[command(subcommand)]
        action: SeriesCommand,
    },
    /// Dominating-variable and moment conditions.
    Conditions {
        #[command(subcommand)]
        check: ConditionsCommand,
    },
    /// Closed-form bound evaluation.
    Bound {
        #[command(subcommand)]
        action: BoundCommand,
    },
    /// Write one sampled field realization to field.csv.
    DumpField {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum SeriesCommand {
    /// Estimate the shell contributions of a truncated series.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum ConditionsCommand {
    /// Weak mean domination constants on a probe grid; writes wmb.csv.
    Wmb {
        #[arg(long)]
        config: PathBuf,
    },
    /// The moment functional E|xi|^r (log+ |xi|)^(p-1); writes moment.csv.
    Moment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Truncated second-moment series by shell; writes moment_series.csv.
    Series {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum BoundCommand {
    /// Evaluate a closed-form bound from JSON parameters.
    Eval {
        #[arg(long)]
        name: String,
        #[arg(long)]
        params: String,
    },
}

/// Settings that override or complement the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub no_timestamp: bool,
    pub out: Option<PathBuf>,
}

/// What a task produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Lines for standard output.
    pub messages: Vec<String>,
    /// False when some domination verdict failed.
    pub all_pass: bool,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let opts = RunOptions { seed: cli.seed, workers: cli.workers, no_timestamp: cli.no_timestamp, out: cli.out };
    match dispatch(cli.command, &opts) {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if !outcome.all_pass {
                eprintln!("some domination verdicts failed");
            }
            exit_code(&outcome)
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn exit_code(outcome: &Outcome) -> i32 {
    if outcome.all_pass {
        0
    } else {
        2
    }
}

fn dispatch(command: Command, opts: &RunOptions) -> Result<Outcome> {
    let (path, expected): (PathBuf, Option<&str>) = match command {
        Command::Bound { action: BoundCommand::Eval { name, params } } => return bound_eval(&name, &params),
        Command::Run { config } => (config, None),
        Command::Verify { config } => (config, Some("verify")),
        Command::Series { action: SeriesCommand::Scan { config } } => (config, Some("series")),
        Command::Conditions { check } => {
            let (config, which) = match check {
                ConditionsCommand::Wmb { config } => (config, "wmb"),
                ConditionsCommand::Moment { config } => (config, "moment"),
                ConditionsCommand::Series { config } => (config, "series"),
            };
            let cfg = ExperimentConfig::load(&config)?;
            match &cfg.task {
                Task::Conditions { condition } if condition.name() == which => return execute(&cfg, opts),
                other => {
                    return Err(Error::Config(format!(
                        "{}: expected a conditions task with check {which}, found {}",
                        config.display(),
                        describe(other)
                    )))
                }
            }
        }
        Command::DumpField { config } => (config, Some("dump_field")),
    };
    let cfg = ExperimentConfig::load(&path)?;
    if let Some(kind) = expected {
        if cfg.task.kind() != kind {
            return Err(Error::Config(format!(
                "{}: expected a {kind} task, found {}",
                path.display(),
                describe(&cfg.task)
            )));
        }
    }
    execute(&cfg, opts)
}

fn describe(task: &Task) -> String {
    match task {
        Task::Conditions { condition } => format!("conditions/{}", condition.name()),
        other => other.kind().to_string(),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs the task described by `cfg`.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let workers = opts.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::Config("--workers must be >= 1".into()));
    }
    let cfg = cfg.clone();
    let opts = opts.clone();
    with_workers(workers, move || execute_task(&cfg, &opts))?
}

fn execute_task(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let out_dir: &Path = opts.out.as_deref().unwrap_or(&cfg.output_dir);
    let timestamp =
        (!opts.no_timestamp).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
    let mut outcome = Outcome { all_pass: true, ..Outcome::default() };
    match &cfg.task {
        Task::Verify { trials, checks, grid } => {
            let (dist, n) = (cfg.field()?, cfg.lattice()?);
            let mut all = checks.clone();
            if let Some(g) = grid {
                all.extend(g.expand(dist, &n)?);
            }
            if all.is_empty() {
                return Err(Error::Config("verify task has no checks".into()));
            }
            let verdicts = verify_grid(dist, &n, &all, *trials, seed)?;
            let failed = verdicts.iter().filter(|v| !v.pass).count();
            outcome.all_pass = failed == 0;
            outcome.messages.push(format!("{} verdicts, {failed} failed", verdicts.len()));
            outcome.files.push(report::write(out_dir, "verdicts.csv", &report::verdicts_csv(&verdicts))?);
            outcome.files.push(report::write(out_dir, "verdicts.svg", &report::verdicts_svg(&verdicts, timestamp))?);
        }
        Task::Series { spec, trials_per_index } => {
            let dist = cfg.field()?;
            if let Some(l) = &cfg.lattice {
                let n = l.resolve()?;
                if n != crate::lattice::MultiIndex::cube(spec.alpha.dim(), spec.cube_n)? {
                    return Err(Error::Config(format!(
                        "lattice {n} disagrees with the series cube of side {} in dimension {}",
                        spec.cube_n,
                        spec.alpha.dim()
                    )));
                }
            }
            let r = scan_series(spec, dist, *trials_per_index, seed)?;
            outcome.messages.push(format!("partial sum {} ({} zero-hit terms)", r.partial_sum, r.terms_skipped_zero));
            outcome.files.push(report::write(out_dir, "series.csv", &report::series_csv(&r))?);
            outcome.files.push(report::write(out_dir, "series.svg", &report::series_svg(&r, timestamp))?);
        }
        Task::Conditions { condition } => match condition {
            ConditionTask::Wmb { xi, probe_xs } => {
                let n = cfg.lattice()?;
                let laws = cfg.field()?.site_laws(&n)?;
                let r = check_wmb(&laws, xi, probe_xs, &n)?;
                outcome.messages.push(format!(
                    "kappa1_hat={} kappa2_hat={} holds_wmd={} holds_wmb={}",
                    r.kappa1_hat, r.kappa2_hat, r.holds_wmd, r.holds_wmb
                ));
                outcome.files.push(report::write(out_dir, "wmb.csv", &report::wmb_csv(&r))?);
            }
            ConditionTask::Moment { xi, r, p } => {
                let v = moment_functional(xi, *r, *p)?;
                outcome.messages.push(format!("{v:.16e}"));
                outcome.files.push(report::write(out_dir, "moment.csv", &report::moment_csv(*r, *p, v))?);
            }
            ConditionTask::Series { xi, alpha, cube_n } => {
                let s = truncated_second_moment_series(xi, alpha, *cube_n)?;
                outcome.messages.push(format!(
                    "partial sum {:.16e}, last shell {:.16e}",
                    s.partial_sum,
                    s.last_shell()
                ));
                outcome.files.push(report::write(out_dir, "moment_series.csv", &report::moment_series_csv(&s))?);
            }
        },
        Task::BoundEval { name, params } => outcome.messages.extend(format_evaluation(evaluate_named(name, params)?)),
        Task::DumpField { trial } => {
            let (dist, n) = (cfg.field()?, cfg.lattice()?);
            let field = dist.prepare(&n)?.sample(&CounterRng::new(seed), *trial);
            let mut buf = Vec::new();
            field.write_csv(&mut buf)?;
            let text = String::from_utf8(buf).map_err(|e| Error::NumericFailure(e.to_string()))?;
            outcome.files.push(report::write(out_dir, "field.csv", &text)?);
        }
    }
    Ok(outcome)
}

fn bound_eval(name: &str, params: &str) -> Result<Outcome> {
    let params: serde_json::Value =
        serde_json::from_str(params).map_err(|e| Error::InvalidInput(format!("--params is not valid JSON: {e}")))?;
    Ok(Outcome { messages: format_evaluation(evaluate_named(name, &params)?), all_pass: true, files: Vec::new() })
}

/// 17 significant digits.
fn format_evaluation(e: Evaluation) -> Vec<String> {
    match e {
        Evaluation::Scalar(v) => vec![format!("{v:.16e}")],
        Evaluation::Bound(b) => vec![
            format!("max_term_threshold {:.16e}", b.max_term_threshold),
            format!("analytic_term {:.16e}", b.analytic_term),
        ],
    }
}
