//! Swarm-size tuning loop.
//!
//! For each outer fold, PSO subset searches are run with `N = initial_swarm,
//! initial_swarm + 1, ...` particles. Each search result is projected onto the
//! fold's train/test split, scored with an ADT on the held-out records, and
//! blended with the selected features' share of the total discrimination
//! score. The loop stops once the fitness gains shrink three times in a row
//! (a local maximum of fitness over swarm size) or the cap is reached, and the
//! entry with the highest fitness gives the fold's feature subset.
//!
//! Note that the fitness driving the tuning loop uses accuracy on the fold's
//! test records, so the reported fold accuracy is not an unbiased estimate.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adt::{self, Presorted};
use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::fscore;
use crate::mask::FeatureMask;
use crate::rng::derive_seed;
use crate::search::{pso_search, Evaluator, SwarmConfig};
use crate::stats::mean_std;

/// Weight of accuracy (and of the score ratio) in the fitness.
pub const ACCURACY_WEIGHT: f64 = 0.5;

/// `0.5 * accuracy + 0.5 * m1 / m2`.
pub fn fitness(accuracy: f64, m1: f64, m2: f64) -> Result<f64> {
    if m2.is_nan() || m2 <= 0.0 {
        return Err(Error::ZeroTotalScore);
    }
    if !(0.0..=m2).contains(&m1) {
        return Err(Error::InvalidArgument(format!(
            "subset score {m1} outside [0, {m2}]"
        )));
    }
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::InvalidArgument(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    Ok(ACCURACY_WEIGHT * accuracy + (1.0 - ACCURACY_WEIGHT) * (m1 / m2))
}

/// How the local-maximum test reads the fitness-versus-swarm-size curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Differences `dV/dN` over the last four entries: stop when they
    /// strictly decrease twice in a row.
    #[default]
    Diminishing,
    /// Same test on `dN/dV = 1 / dV`; a zero fitness change stops at once.
    Inverted,
}

impl StopRule {
    pub fn reached(self, fitness: &[f64]) -> bool {
        if fitness.len() < 4 {
            return false;
        }
        let v = &fitness[fitness.len() - 4..];
        let deltas = [v[1] - v[0], v[2] - v[1], v[3] - v[2]];
        let slopes = match self {
            StopRule::Diminishing => deltas,
            StopRule::Inverted => {
                if deltas.contains(&0.0) {
                    return true;
                }
                deltas.map(|d| 1.0 / d)
            }
        };
        let [a, b, c] = slopes;
        a > b && b > c && (c - b) < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub swarm_size: usize,
    pub fitness: f64,
    pub mask: FeatureMask,
    pub test_accuracy: f64,
    pub m1_over_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TuneTrace {
    pub entries: Vec<TraceEntry>,
}

impl TuneTrace {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fitness_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.fitness).collect()
    }

    /// Entry with the highest fitness; the smallest swarm wins ties.
    pub fn best(&self) -> Option<&TraceEntry> {
        let mut best: Option<&TraceEntry> = None;
        for e in &self.entries {
            if best.is_none_or(|b| e.fitness > b.fitness) {
                best = Some(e);
            }
        }
        best
    }
}

pub fn local_max_reached(trace: &TuneTrace) -> bool {
    StopRule::Diminishing.reached(&trace.fitness_values())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpsoConfig {
    pub initial_swarm: usize,
    pub max_swarm: usize,
    /// Template for each inner search; `n_particles` and `seed` are set per run.
    pub inner: SwarmConfig,
    pub k_folds: usize,
    /// Folds of the cross-validation used to score masks inside the search.
    pub inner_folds: usize,
    pub boosting_rounds: usize,
    pub stop_rule: StopRule,
    pub seed: u64,
}

impl Default for TpsoConfig {
    fn default() -> Self {
        TpsoConfig {
            initial_swarm: 5,
            max_swarm: 50,
            inner: SwarmConfig::default(),
            k_folds: 10,
            inner_folds: 5,
            boosting_rounds: adt::DEFAULT_ROUNDS,
            stop_rule: StopRule::Diminishing,
            seed: 0,
        }
    }
}

impl TpsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_swarm < 1 {
            return Err(Error::InvalidArgument(
                "initial_swarm must be at least 1".into(),
            ));
        }
        if self.max_swarm <= self.initial_swarm + 3 {
            return Err(Error::InvalidArgument(format!(
                "max_swarm must exceed initial_swarm + 3 (got {} and {})",
                self.max_swarm, self.initial_swarm
            )));
        }
        if self.k_folds < 2 || self.inner_folds < 2 {
            return Err(Error::InvalidArgument(
                "fold counts must be at least 2".into(),
            ));
        }
        if self.boosting_rounds < 1 {
            return Err(Error::InvalidArgument(
                "boosting_rounds must be at least 1".into(),
            ));
        }
        self.inner.validate()
    }
}

/// Scores a mask by the mean ADT accuracy of a stratified cross-validation
/// over one training set. Results are memoized per mask.
pub struct WrapperEvaluator<'a> {
    presorted: Presorted<'a>,
    folds: Vec<(Vec<usize>, Vec<usize>)>,
    rounds: usize,
    memo: Mutex<HashMap<FeatureMask, f64>>,
}

impl<'a> WrapperEvaluator<'a> {
    /// Uses `folds` inner folds, reduced to the smaller class size when that
    /// is lower.
    pub fn new(train: &'a Dataset, folds: usize, rounds: usize, seed: u64) -> Result<Self> {
        let (neg, pos) = train.class_counts();
        let k = folds.min(neg).min(pos);
        if k < 2 {
            return Err(Error::ClassTooSmall {
                class: train.class_name(pos < neg).to_string(),
                count: neg.min(pos),
                required: 2,
            });
        }
        let plan = dataset::stratified_kfold(train, k, seed)?;
        Ok(WrapperEvaluator {
            presorted: Presorted::new(train),
            folds: plan.folds.into_iter().map(|f| (f.train, f.test)).collect(),
            rounds,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// Distinct masks scored so far.
    pub fn memo_len(&self) -> usize {
        self.memo.lock().map(|m| m.len()).unwrap_or(0)
    }

    fn cross_validate(&self, mask: &FeatureMask) -> Result<f64> {
        let features = mask.indices();
        if features.is_empty() {
            return Err(Error::InvalidMask("mask selects no features".into()));
        }
        let mut total = 0.0;
        for (train, test) in &self.folds {
            let model = self.presorted.train(train, &features, self.rounds)?;
            total += self.presorted.accuracy_on(&model, &features, test);
        }
        Ok(total / self.folds.len() as f64)
    }
}

impl Evaluator for WrapperEvaluator<'_> {
    fn evaluate(&self, mask: &FeatureMask) -> Result<f64> {
        if mask.len() != self.presorted.dataset().n_features() {
            return Err(Error::InvalidMask(format!(
                "mask has {} bits for {} features",
                mask.len(),
                self.presorted.dataset().n_features()
            )));
        }
        if let Some(&v) = self.memo.lock().expect("memo lock").get(mask) {
            return Ok(v);
        }
        let v = self.cross_validate(mask)?;
        self.memo.lock().expect("memo lock").insert(mask.clone(), v);
        Ok(v)
    }
}

/// Train on the masked `train` columns and score on the masked `test` columns.
pub fn holdout_accuracy(
    train: &Dataset,
    test: &Dataset,
    mask: &FeatureMask,
    rounds: usize,
) -> Result<f64> {
    let p = dataset::project(train, mask)?;
    let q = dataset::project(test, mask)?;
    adt::train_adt(&p, rounds)?.accuracy(&q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub mask: FeatureMask,
    pub feature_count: usize,
    pub accuracy: f64,
    /// Empty for methods without a tuning loop.
    #[serde(default, skip_serializing_if = "TuneTrace::is_empty")]
    pub trace: TuneTrace,
}

pub fn tune_fold(
    train: &Dataset,
    test: &Dataset,
    config: &TpsoConfig,
    fold_seed: u64,
) -> Result<FoldResult> {
    config.validate()?;
    if train.n_features() != test.n_features() {
        return Err(Error::SchemaMismatch(format!(
            "train has {} features, test has {}",
            train.n_features(),
            test.n_features()
        )));
    }
    train.require_class_sizes(1)?;

    let d = train.n_features();
    let evaluator = WrapperEvaluator::new(
        train,
        config.inner_folds,
        config.boosting_rounds,
        derive_seed(fold_seed, &[0]),
    )?;
    let total_score = fscore::score_all(train)?.total;

    let mut trace = TuneTrace::default();
    let mut n = config.initial_swarm;
    while n <= config.max_swarm {
        let inner = SwarmConfig {
            n_particles: n,
            seed: derive_seed(fold_seed, &[1, n as u64]),
            ..config.inner.clone()
        };
        let found = pso_search(d, &inner, &evaluator)?;
        let mask = found.best_mask;

        let projected_train = dataset::project(train, &mask)?;
        let projected_test = dataset::project(test, &mask)?;
        let model = adt::train_adt(&projected_train, config.boosting_rounds)?;
        let test_accuracy = model.accuracy(&projected_test)?;
        let subset_score = fscore::score_all(&projected_train)?.total.min(total_score);
        let fitness = fitness(test_accuracy, subset_score, total_score)?;

        trace.entries.push(TraceEntry {
            swarm_size: n,
            fitness,
            mask,
            test_accuracy,
            m1_over_m2: subset_score / total_score,
        });
        n += 1;
        if config.stop_rule.reached(&trace.fitness_values()) {
            break;
        }
    }

    let best = trace
        .best()
        .expect("tuning loop runs at least once")
        .mask
        .clone();
    let accuracy = holdout_accuracy(train, test, &best, config.boosting_rounds)?;
    Ok(FoldResult {
        feature_count: best.count(),
        mask: best,
        accuracy,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FoldOutcome {
    Ok(FoldResult),
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    #[serde(flatten)]
    pub outcome: FoldOutcome,
}

/// Mean and standard deviation of one value list; a single value has
/// standard deviation 0.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    match values.len() {
        0 => Err(Error::InvalidArgument("no values to aggregate".into())),
        1 => Ok((values[0], 0.0)),
        _ => mean_std(values),
    }
}

/// Cross-validated result. Also used for the baseline methods, whose folds
/// carry no tuning trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsoResult {
    pub per_fold: Vec<FoldRecord>,
    /// Mean / std of selected feature counts over successful folds.
    pub feature_mean: f64,
    pub feature_std: f64,
    /// Mean / std of fold test accuracies over successful folds.
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

impl TpsoResult {
    pub fn from_folds(per_fold: Vec<FoldRecord>) -> Result<Self> {
        let ok: Vec<&FoldResult> = per_fold
            .iter()
            .filter_map(|r| match &r.outcome {
                FoldOutcome::Ok(f) => Some(f),
                FoldOutcome::Failed { .. } => None,
            })
            .collect();
        if ok.is_empty() {
            let reasons: Vec<String> = per_fold
                .iter()
                .filter_map(|r| match &r.outcome {
                    FoldOutcome::Failed { reason } => Some(format!("fold {}: {reason}", r.fold)),
                    FoldOutcome::Ok(_) => None,
                })
                .collect();
            return Err(Error::AllFoldsFailed(reasons.join("; ")));
        }
        let counts: Vec<f64> = ok.iter().map(|f| f.feature_count as f64).collect();
        let accs: Vec<f64> = ok.iter().map(|f| f.accuracy).collect();
        let (feature_mean, feature_std) = aggregate(&counts)?;
        let (accuracy_mean, accuracy_std) = aggregate(&accs)?;
        Ok(TpsoResult {
            per_fold,
            feature_mean,
            feature_std,
            accuracy_mean,
            accuracy_std,
        })
    }
}

/// Stratified k-fold run of the tuning loop. Folds run in parallel on the
/// current rayon pool; each draws from its own seed stream.
pub fn run_tpso(dataset: &Dataset, config: &TpsoConfig) -> Result<TpsoResult> {
    config.validate()?;
    let plan = dataset::stratified_kfold(dataset, config.k_folds, config.seed)?;
    let per_fold = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| {
            let train = dataset.subset(&fold.train);
            let test = dataset.subset(&fold.test);
            let outcome =
                match tune_fold(&train, &test, config, derive_seed(config.seed, &[k as u64])) {
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
