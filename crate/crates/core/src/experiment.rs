//! Experiment runner: datasets × methods under one fold plan, reports,
//! paired comparisons and the timing benchmark.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset, SchemaHints};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::rng::derive_seed;
use crate::search::{ga_search, pso_search, GaConfig, SwarmConfig};
use crate::stats::{self, Alternative, RegressionFit, WilcoxonReport};
use crate::synth;
use crate::tpso::{
    holdout_accuracy, run_tpso, FoldOutcome, FoldRecord, FoldResult, TpsoConfig, TpsoResult,
    TuneTrace, WrapperEvaluator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tpso,
    PsoAdt,
    GaAdt,
    AdtOnly,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tpso, Method::PsoAdt, Method::GaAdt, Method::AdtOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tpso => "tpso",
            Method::PsoAdt => "pso_adt",
            Method::GaAdt => "ga_adt",
            Method::AdtOnly => "adt_only",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Method::Tpso => 0,
            Method::PsoAdt => 1,
            Method::GaAdt => 2,
            Method::AdtOnly => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method `{s}` (expected tpso, pso_adt, ga_adt or adt_only)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    #[serde(default = "default_label")]
    pub label: String,
    /// Optional JSON sidecar mapping column names to `numeric`/`categorical`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

fn default_label() -> String {
    "class".into()
}

/// Everything a `run` needs. `k_folds` and `seed` override the copies inside
/// `tpso`; the baselines share `tpso.inner_folds` and `tpso.boosting_rounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub methods: Vec<Method>,
    pub k_folds: usize,
    pub seed: Option<u64>,
    pub tpso: TpsoConfig,
    pub pso: SwarmConfig,
    pub ga: GaConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Vec::new(),
            methods: Method::ALL.to_vec(),
            k_folds: 10,
            seed: None,
            tpso: TpsoConfig::default(),
            pso: SwarmConfig::default(),
            ga: GaConfig::default(),
            out: None,
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<u64> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidArgument("no datasets given".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods given".into()));
        }
        let seed = self
            .seed
            .ok_or_else(|| Error::InvalidArgument("a seed is required".into()))?;
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        self.tpso_config(seed).validate()?;
        self.pso.validate()?;
        self.ga.validate()?;
        Ok(seed)
    }

    pub fn tpso_config(&self, seed: u64) -> TpsoConfig {
        TpsoConfig {
            k_folds: self.k_folds,
            seed,
            ..self.tpso.clone()
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

/// Load, then impute missing values.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let hints: Option<SchemaHints> = spec
        .schema
        .as_deref()
        .map(dataset::load_schema)
        .transpose()?;
    let ds = dataset::load_csv(&spec.path, &spec.label, hints.as_ref())?;
    dataset::impute(&ds)
}

/// Cross-validated run of one method. All methods draw the same fold plan
/// from `seed`.
pub fn run_method(
    ds: &Dataset,
    method: Method,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<TpsoResult> {
    let tpso = config.tpso_config(seed);
    if method == Method::Tpso {
        return run_tpso(ds, &tpso);
    }
    let plan = dataset::stratified_kfold(ds, config.k_folds, seed)?;
    let per_fold = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| {
            let train = ds.subset(&fold.train);
            let test = ds.subset(&fold.test);
            let fold_seed = derive_seed(seed, &[method.stream_tag(), k as u64]);
            let outcome = match baseline_fold(&train, &test, method, config, &tpso, fold_seed) {
                Ok(r) => FoldOutcome::Ok(r),
                Err(e) => FoldOutcome::Failed {
                    reason: e.to_string(),
                },
            };
            FoldRecord { fold: k, outcome }
        })
        .collect();
    TpsoResult::from_folds(per_fold)
}

fn baseline_fold(
    train: &Dataset,
    test: &Dataset,
    method: Method,
    config: &ExperimentConfig,
    tpso: &TpsoConfig,
    fold_seed: u64,
) -> Result<FoldResult> {
    let d = train.n_features();
    let mask = match method {
        Method::AdtOnly => FeatureMask::full(d),
        Method::PsoAdt | Method::GaAdt => {
            let evaluator = WrapperEvaluator::new(
                train,
                tpso.inner_folds,
                tpso.boosting_rounds,
                derive_seed(fold_seed, &[0]),
            )?;
            let search_seed = derive_seed(fold_seed, &[1]);
            let found = if method == Method::PsoAdt {
                let cfg = SwarmConfig {
                    seed: search_seed,
                    ..config.pso.clone()
                };
                pso_search(d, &cfg, &evaluator)?
            } else {
                let cfg = GaConfig {
                    seed: search_seed,
                    ..config.ga.clone()
                };
                ga_search(d, &cfg, &evaluator)?
            };
            found.best_mask
        }
        Method::Tpso => unreachable!("tpso folds are run by run_tpso"),
    };
    let accuracy = holdout_accuracy(train, test, &mask, tpso.boosting_rounds)?;
    Ok(FoldResult {
        feature_count: mask.count(),
        mask,
        accuracy,
        trace: TuneTrace::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub dataset: String,
    pub method: Method,
    pub wall_time_secs: f64,
    #[serde(flatten)]
    pub result: TpsoResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub dataset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub candidate: Method,
    pub baseline: Method,
    pub datasets: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilcoxon: Option<WilcoxonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub results: Vec<MethodRun>,
    pub comparisons: Vec<Comparison>,
    pub failures: Vec<Failure>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub fn find(&self, dataset: &str, method: Method) -> Option<&MethodRun> {
        self.results
            .iter()
            .find(|r| r.dataset == dataset && r.method == method)
    }

    /// Dataset names in first-appearance order.
    pub fn dataset_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.results {
            if !names.contains(&r.dataset) {
                names.push(r.dataset.clone());
            }
        }
        names
    }

    /// Copy with wall times zeroed and the execution-only settings (`jobs`,
    /// `out`) cleared, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for run in &mut r.results {
            run.wall_time_secs = 0.0;
        }
        r.config.jobs = None;
        r.config.out = None;
        r
    }

    /// Accuracy and feature-count tables (percent accuracy), then comparisons.
    pub fn to_markdown(&self) -> String {
        let methods: Vec<Method> = Method::ALL
            .into_iter()
            .filter(|m| self.results.iter().any(|r| r.method == *m))
            .collect();
        let names = self.dataset_names();
        let mut out = String::new();
        let table = |out: &mut String, title: &str, cell: &dyn Fn(&MethodRun) -> String| {
            out.push_str(&format!("## {title}\n\n| Dataset |"));
            for m in &methods {
                out.push_str(&format!(" {m} |"));
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(methods.len()));
            out.push('\n');
            for name in &names {
                out.push_str(&format!("| {name} |"));
                for &m in &methods {
                    let c = self.find(name, m).map_or_else(|| "-".to_string(), cell);
                    out.push_str(&format!(" {c} |"));
                }
                out.push('\n');
            }
            out.push('\n');
        };
        table(&mut out, "Accuracy (%)", &|r| {
            format!(
                "{:.2} ± {:.2}",
                100.0 * r.result.accuracy_mean,
                100.0 * r.result.accuracy_std
            )
        });
        table(&mut out, "Selected features", &|r| {
            format!("{:.1} ± {:.2}", r.result.feature_mean, r.result.feature_std)
        });
        if !self.comparisons.is_empty() {
            out.push_str(&comparison_markdown(&self.comparisons));
        }
        if !self.failures.is_empty() {
            out.push_str("## Failures\n\n");
            for f in &self.failures {
                let method = f.method.map_or(String::new(), |m| format!(" / {m}"));
                out.push_str(&format!("- {}{method}: {}\n", f.dataset, f.message));
            }
        }
        out
    }
}

pub fn comparison_markdown(comparisons: &[Comparison]) -> String {
    let mut out = String::from(
        "## Wilcoxon signed-rank\n\n| Candidate | Baseline | Datasets | Rank sums (+, -) | Statistic | p-value | Significant |\n|---|---|---|---|---|---|---|\n",
    );
    for c in comparisons {
        match (&c.wilcoxon, &c.error) {
            (Some(w), _) => out.push_str(&format!(
                "| {} | {} | {} | {:.1}, {:.1} | {:.1} | {:.4} | {} |\n",
                c.candidate,
                c.baseline,
                c.datasets.len(),
                w.w_plus,
                w.w_minus,
                w.statistic,
                w.p_value,
                if w.significant_at_05 { "yes" } else { "no" }
            )),
            (None, e) => out.push_str(&format!(
                "| {} | {} | {} | - | - | - | {} |\n",
                c.candidate,
                c.baseline,
                c.datasets.len(),
                e.as_deref().unwrap_or("")
            )),
        }
    }
    out.push('\n');
    out
}

/// Pairs per-dataset mean accuracies of `candidate` and `baseline` over the
/// datasets both cover (first occurrence wins).
pub fn compare_methods(
    runs: &[&MethodRun],
    candidate: Method,
    baseline: Method,
    alternative: Alternative,
) -> Comparison {
    let (datasets, outcome) = paired_test(runs, candidate, baseline, alternative);
    let (wilcoxon, error) = match outcome {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Comparison {
        candidate,
        baseline,
        datasets,
        wilcoxon,
        error,
    }
}

fn paired_test(
    runs: &[&MethodRun],
    candidate: Method,
    baseline: Method,
    alternative: Alternative,
) -> (Vec<String>, Result<WilcoxonReport>) {
    let mut datasets = Vec::new();
    let mut pairs = Vec::new();
    for r in runs.iter().filter(|r| r.method == candidate) {
        if datasets.contains(&r.dataset) {
            continue;
        }
        if let Some(b) = runs
            .iter()
            .find(|b| b.method == baseline && b.dataset == r.dataset)
        {
            datasets.push(r.dataset.clone());
            pairs.push((r.result.accuracy_mean, b.result.accuracy_mean));
        }
    }
    let outcome = stats::wilcoxon_signed_rank_with(&pairs, alternative);
    (datasets, outcome)
}

/// Candidate/baseline pairs reported by `run`: TPSO against each other
/// method when present, otherwise every ordered pair in method order.
fn default_pairs(methods: &[Method]) -> Vec<(Method, Method)> {
    let mut ms: Vec<Method> = methods.to_vec();
    ms.sort();
    ms.dedup();
    if ms.contains(&Method::Tpso) {
        ms.iter()
            .filter(|&&m| m != Method::Tpso)
            .map(|&m| (Method::Tpso, m))
            .collect()
    } else {
        let mut out = Vec::new();
        for (i, &a) in ms.iter().enumerate() {
            for &b in &ms[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }
}

/// Minimum number of datasets for a paired comparison.
pub const MIN_COMPARISON_DATASETS: usize = 5;

/// Runs every dataset × method job on the current rayon pool. Failed jobs
/// are listed in `failures`; the rest are reported in (dataset, method)
/// order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = config.validate()?;
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();

    let loaded: Vec<(String, Result<Dataset>)> = config
        .datasets
        .iter()
        .map(|spec| {
            let name = spec.path.file_stem().map_or_else(
                || spec.path.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            );
            (name, load_dataset(spec))
        })
        .collect();

    let mut failures = Vec::new();
    let mut jobs = Vec::new();
    for (name, ds) in &loaded {
        match ds {
            Ok(ds) => jobs.extend(methods.iter().map(|&m| (ds, m))),
            Err(e) => failures.push(Failure {
                dataset: name.clone(),
                method: None,
                kind: e.kind().into(),
                message: e.to_string(),
            }),
        }
    }

    let outcomes: Vec<(String, Method, f64, Result<TpsoResult>)> = jobs
        .par_iter()
        .map(|&(ds, m)| {
            let start = Instant::now();
            let r = run_method(ds, m, config, seed);
            (ds.name.clone(), m, start.elapsed().as_secs_f64(), r)
        })
        .collect();

    let mut results = Vec::new();
    for (dataset, method, wall_time_secs, r) in outcomes {
        match r {
            Ok(result) => results.push(MethodRun {
                dataset,
                method,
                wall_time_secs,
                result,
            }),
            Err(e) => failures.push(Failure {
                dataset,
                method: Some(method),
                kind: e.kind().into(),
                message: e.to_string(),
            }),
        }
    }

    let refs: Vec<&MethodRun> = results.iter().collect();
    let dataset_count = loaded.iter().filter(|(_, d)| d.is_ok()).count();
    let comparisons = if dataset_count >= MIN_COMPARISON_DATASETS {
        default_pairs(&methods)
            .into_iter()
            .map(|(c, b)| compare_methods(&refs, c, b, Alternative::TwoSided))
            .collect()
    } else {
        Vec::new()
    };

    Ok(ExperimentReport {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        results,
        comparisons,
        failures,
    })
}

/// Writes `report.json` and `report.md` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(&dir.join("report.json"), &report.to_json()?)?;
    write_file(&dir.join("report.md"), &report.to_markdown())
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Pairs `candidate` against each baseline across reports. Requires at least
/// five datasets covered by both methods.
pub fn compare_reports(
    reports: &[ExperimentReport],
    candidate: Method,
    baselines: &[Method],
    alternative: Alternative,
) -> Result<Vec<Comparison>> {
    let runs: Vec<&MethodRun> = reports.iter().flat_map(|r| r.results.iter()).collect();
    let mut out = Vec::new();
    for &baseline in baselines {
        let (datasets, outcome) = paired_test(&runs, candidate, baseline, alternative);
        if datasets.len() < MIN_COMPARISON_DATASETS {
            return Err(Error::InvalidArgument(format!(
                "{candidate} and {baseline} share {} datasets, at least {MIN_COMPARISON_DATASETS} needed",
                datasets.len()
            )));
        }
        out.push(Comparison {
            candidate,
            baseline,
            datasets,
            wilcoxon: Some(outcome?),
            error: None,
        });
    }
    Ok(out)
}

/// Fixed, light configuration timed by the benchmark.
pub fn bench_config(seed: u64) -> TpsoConfig {
    TpsoConfig {
        initial_swarm: 5,
        max_swarm: 9,
        inner: SwarmConfig {
            iterations: 10,
            ..SwarmConfig::default()
        },
        k_folds: 2,
        inner_folds: 2,
        seed,
        ..TpsoConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub size: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub features: usize,
    pub config: TpsoConfig,
    pub points: Vec<BenchPoint>,
    pub fit: RegressionFit,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("size,seconds\n");
        for p in &self.points {
            s.push_str(&format!("{},{:.6}\n", p.size, p.seconds));
        }
        s
    }
}

/// Times `run_tpso` under `config` on a fresh benchmark dataset per size,
/// then fits seconds against size. Sizes run one after another.
pub fn run_bench(
    sizes: &[usize],
    features: usize,
    seed: u64,
    config: &TpsoConfig,
) -> Result<BenchReport> {
    if sizes.len() < 3 {
        return Err(Error::InvalidArgument(
            "bench needs at least 3 sizes".into(),
        ));
    }
    let mut distinct = sizes.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument(
            "bench sizes must not all be equal".into(),
        ));
    }
    config.validate()?;
    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let ds = synth::benchmark(size, features, derive_seed(seed, &[size as u64]))?;
        let start = Instant::now();
        run_tpso(&ds, config)?;
        points.push(BenchPoint {
            size,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.size as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    let fit = stats::linear_regression(&x, &y)?;
    Ok(BenchReport {
        features,
        config: config.clone(),
        points,
        fit,
    })
}

/// `(feature name, score)` sorted by descending score; ties keep column order.
pub fn ranked_scores(ds: &Dataset) -> Result<Vec<(String, f64)>> {
    let scores = crate::fscore::score_all(ds)?;
    let mut rows: Vec<(String, f64)> = ds.feature_names().into_iter().zip(scores.scores).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(rows)
}

pub fn scores_csv(rows: &[(String, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "score"])?;
    for (name, score) in rows {
        w.write_record([name.as_str(), &score.to_string()])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv writer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
