//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiment::{self, DatasetSpec, ExperimentConfig, ExperimentReport, Method};
use crate::stats::Alternative;

#[derive(Debug, Parser)]
#[command(
    name = "tpso",
    version,
    about = "Wrapper feature selection with a tunable-size particle swarm"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-validate methods on datasets and write report.json / report.md.
    Run(RunArgs),
    /// Wilcoxon signed-rank comparison of per-dataset accuracies across reports.
    Compare(CompareArgs),
    /// Time a fixed TPSO configuration on synthetic data of growing size.
    Bench(BenchArgs),
    /// Per-feature discrimination scores as CSV, highest first.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset CSV; repeat for several.
    #[arg(long = "data", value_name = "CSV")]
    pub data: Vec<PathBuf>,
    /// Label column of every --data file.
    #[arg(long, default_value = "class")]
    pub label: String,
    /// Optional JSON schema sidecar applied to every --data file.
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    /// Comma-separated subset of tpso, pso_adt, ga_adt, adt_only.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory (default: current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON experiment config; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Sidedness {
    TwoSided,
    Greater,
    Less,
}

impl From<Sidedness> for Alternative {
    fn from(s: Sidedness) -> Self {
        match s {
            Sidedness::TwoSided => Alternative::TwoSided,
            Sidedness::Greater => Alternative::Greater,
            Sidedness::Less => Alternative::Less,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// report.json files written by `run`.
    #[arg(required = true, value_name = "REPORT")]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value = "tpso")]
    pub candidate: Method,
    /// Comma-separated baseline methods.
    #[arg(long, value_delimiter = ',', required = true)]
    pub baseline: Vec<Method>,
    #[arg(long, value_enum, default_value = "two-sided")]
    pub alternative: Sidedness,
    /// Also write the comparisons as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated record counts.
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,4000,8000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    pub features: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for bench.csv and bench.json (default: print CSV only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON TPSO config replacing the built-in light bench configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long = "data", value_name = "CSV")]
    pub data: PathBuf,
    #[arg(long, default_value = "class")]
    pub label: String,
    #[arg(long, value_name = "JSON")]
    pub schema: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    PartialFailure = 1,
    InvalidInvocation = 2,
}

fn is_invocation_error(e: &Error) -> bool {
    matches!(e, Error::InvalidArgument(_))
}

/// Merge the optional config file with the run flags.
pub fn run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if !args.data.is_empty() {
        cfg.datasets = args
            .data
            .iter()
            .map(|path| DatasetSpec {
                path: path.clone(),
                label: args.label.clone(),
                schema: args.schema.clone(),
            })
            .collect();
    }
    if !args.methods.is_empty() {
        cfg.methods = args.methods.clone();
    }
    if let Some(k) = args.folds {
        cfg.k_folds = k;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<(ExperimentReport, Exit)> {
    let cfg = run_config(args)?;
    let report = with_pool(cfg.jobs, || experiment::run_experiment(&cfg))??;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    experiment::write_report(&report, &dir)?;
    let exit = if report.failures.is_empty() {
        Exit::Success
    } else {
        Exit::PartialFailure
    };
    Ok((report, exit))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let reports = args
        .reports
        .iter()
        .map(|p| ExperimentReport::load(p))
        .collect::<Result<Vec<_>>>()?;
    let comparisons = experiment::compare_reports(
        &reports,
        args.candidate,
        &args.baseline,
        args.alternative.into(),
    )?;
    if let Some(path) = &args.out {
        experiment::write_file(path, &serde_json::to_string_pretty(&comparisons)?)?;
    }
    Ok(experiment::comparison_markdown(&comparisons))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<experiment::BenchReport> {
    let seed = args
        .seed
        .ok_or_else(|| Error::InvalidArgument("a seed is required".into()))?;
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let mut cfg: crate::tpso::TpsoConfig = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
            cfg.seed = seed;
            cfg
        }
        None => experiment::bench_config(seed),
    };
    let report = with_pool(args.jobs, || {
        experiment::run_bench(&args.sizes, args.features, seed, &config)
    })??;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        experiment::write_file(&dir.join("bench.csv"), &report.to_csv())?;
        experiment::write_file(
            &dir.join("bench.json"),
            &serde_json::to_string_pretty(&report)?,
        )?;
    }
    Ok(report)
}

pub fn cmd_score(args: &ScoreArgs) -> Result<String> {
    let spec = DatasetSpec {
        path: args.data.clone(),
        label: args.label.clone(),
        schema: args.schema.clone(),
    };
    let ds = experiment::load_dataset(&spec)?;
    let csv = experiment::scores_csv(&experiment::ranked_scores(&ds)?)?;
    if let Some(path) = &args.out {
        experiment::write_file(path, &csv)?;
    }
    Ok(csv)
}

fn report_error(e: &Error) -> Exit {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", e.kind());
    if is_invocation_error(e) {
        Exit::InvalidInvocation
    } else {
        Exit::PartialFailure
    }
}

/// Parse `args`, run the subcommand, and return the exit status.
pub fn main_with<I, T>(args: I) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return Exit::Success;
            }
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error[invalid-argument]: {line}");
            return Exit::InvalidInvocation;
        }
    };
    let stdout = std::io::stdout();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|(report, exit)| {
            for f in &report.failures {
                let method = f.method.map_or(String::new(), |m| format!(" {m}"));
                eprintln!(
                    "error[{}]: {}{method}: {}",
                    f.kind,
                    f.dataset,
                    f.message.replace('\n', " ")
                );
            }
            let _ = write!(stdout.lock(), "{}", report.to_markdown());
            exit
        }),
        Command::Compare(a) => cmd_compare(a).map(|table| {
            let _ = write!(stdout.lock(), "{table}");
            Exit::Success
        }),
        Command::Bench(a) => cmd_bench(a).map(|report| {
            let mut out = stdout.lock();
            let _ = write!(out, "{}", report.to_csv());
            let _ = writeln!(
                out,
                "# fit: seconds = {:.6e} * size + {:.6e}, r2 = {:.4}",
                report.fit.slope, report.fit.intercept, report.fit.r_squared
            );
            Exit::Success
        }),
        Command::Score(a) => cmd_score(a).map(|csv| {
            if a.out.is_none() {
                let _ = write!(stdout.lock(), "{csv}");
            }
            Exit::Success
        }),
    };
    outcome.unwrap_or_else(|e| report_error(&e))
}
