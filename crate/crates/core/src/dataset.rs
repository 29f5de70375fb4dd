//! Column-typed binary-class datasets: CSV ingestion, imputation, feature
//! projection and stratified k-fold splitting.
//!
//! Missing cells are written as `?` or left empty. Columns whose non-missing
//! cells all parse as reals are numeric; anything else is categorical, with
//! category codes assigned in first-appearance order. The two class labels
//! are ordered lexicographically: the first is the negative class, the second
//! the positive class.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fscore::median;
use crate::mask::FeatureMask;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Per-column kind overrides, usually read from a JSON sidecar file.
pub type SchemaHints = HashMap<String, ColumnKind>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
    /// Reals for numeric columns, category codes for categorical ones.
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
    /// Category labels indexed by code; empty for numeric columns.
    pub categories: Vec<String>,
}

impl FeatureColumn {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        let missing = vec![false; values.len()];
        FeatureColumn {
            name: name.into(),
            kind: ColumnKind::Numeric,
            values,
            missing,
            categories: Vec::new(),
        }
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    columns: Vec<FeatureColumn>,
    /// `true` marks a positive record.
    labels: Vec<bool>,
    /// `[negative, positive]` class names.
    classes: [String; 2],
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<FeatureColumn>,
        labels: Vec<bool>,
        classes: [String; 2],
    ) -> Result<Self> {
        let n = labels.len();
        let mut seen = HashSet::new();
        for col in &columns {
            if col.values.len() != n || col.missing.len() != n {
                return Err(Error::SchemaMismatch(format!(
                    "column `{}` has {} values for {} records",
                    col.name,
                    col.values.len(),
                    n
                )));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate column name `{}`",
                    col.name
                )));
            }
        }
        if classes[0] == classes[1] {
            return Err(Error::ClassCount(1));
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            labels,
            classes,
        })
    }

    /// Build a numeric dataset from row-major features.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Vec<bool>,
    ) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let columns = (0..width)
            .map(|j| FeatureColumn::numeric(format!("x{j}"), rows.iter().map(|r| r[j]).collect()))
            .collect();
        Dataset::new(name, columns, labels, ["neg".into(), "pos".into()])
    }

    pub fn n_records(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &FeatureColumn {
        &self.columns[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn classes(&self) -> &[String; 2] {
        &self.classes
    }

    pub fn class_name(&self, positive: bool) -> &str {
        &self.classes[positive as usize]
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(|c| c.kind).collect()
    }

    /// `(negative, positive)` record counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (self.labels.len() - pos, pos)
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[r]).collect()
    }

    /// Require at least `min` records in each class.
    pub fn require_class_sizes(&self, min: usize) -> Result<()> {
        let (neg, pos) = self.class_counts();
        for (count, positive) in [(neg, false), (pos, true)] {
            if count < min {
                return Err(Error::ClassTooSmall {
                    class: self.class_name(positive).to_string(),
                    count,
                    required: min,
                });
            }
        }
        Ok(())
    }

    /// Records at `rows`, in the given order. Class-size invariants are not
    /// re-checked, so fold subsets can be degenerate.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| FeatureColumn {
                name: c.name.clone(),
                kind: c.kind,
                values: rows.iter().map(|&r| c.values[r]).collect(),
                missing: rows.iter().map(|&r| c.missing[r]).collect(),
                categories: c.categories.clone(),
            })
            .collect();
        Dataset {
            name: self.name.clone(),
            columns,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            classes: self.classes.clone(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Read a JSON sidecar mapping column names to `"numeric"` or `"categorical"`.
pub fn load_schema(path: impl AsRef<Path>) -> Result<SchemaHints> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    if source.kind() == std::io::ErrorKind::NotFound {
        Error::FileNotFound(path.to_path_buf())
    } else {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    hints: Option<&SchemaHints>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(file, &name, label_column, hints)
}

/// Parse CSV text from any reader; see [`load_csv`].
pub fn parse_csv<R: std::io::Read>(
    reader: R,
    name: &str,
    label_column: &str,
    hints: Option<&SchemaHints>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::LabelColumnMissing(label_column.to_string()))?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            cells[j].push(cell.to_string());
        }
    }
    let n = cells[label_idx].len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }

    let raw_labels = &cells[label_idx];
    if let Some(row) = raw_labels.iter().position(|l| is_missing(l)) {
        return Err(Error::InvalidArgument(format!(
            "missing label at data row {}",
            row + 1
        )));
    }
    let mut distinct: Vec<&str> = raw_labels.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::ClassCount(distinct.len()));
    }
    let classes = [distinct[0].to_string(), distinct[1].to_string()];
    let labels: Vec<bool> = raw_labels.iter().map(|l| *l == classes[1]).collect();

    let mut columns = Vec::with_capacity(headers.len() - 1);
    for (j, header) in headers.iter().enumerate() {
        if j == label_idx {
            continue;
        }
        let kind = hints.and_then(|h| h.get(header).copied());
        columns.push(parse_column(header, &cells[j], kind)?);
    }

    let ds = Dataset::new(name, columns, labels, classes)?;
    ds.require_class_sizes(2)?;
    Ok(ds)
}

fn parse_column(name: &str, cells: &[String], kind: Option<ColumnKind>) -> Result<FeatureColumn> {
    let missing: Vec<bool> = cells.iter().map(|c| is_missing(c)).collect();
    let parsed: Vec<Option<f64>> = cells
        .iter()
        .zip(&missing)
        .map(|(c, &m)| if m { Some(0.0) } else { c.parse::<f64>().ok() })
        .collect();
    let all_numeric = parsed.iter().all(Option::is_some);
    let kind = kind.unwrap_or(if all_numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    });

    match kind {
        ColumnKind::Numeric => {
            if let Some(row) = parsed.iter().position(Option::is_none) {
                return Err(Error::InvalidArgument(format!(
                    "column `{name}` row {} is not numeric: `{}`",
                    row + 1,
                    cells[row]
                )));
            }
            Ok(FeatureColumn {
                name: name.to_string(),
                kind,
                values: parsed.into_iter().map(Option::unwrap).collect(),
                missing,
                categories: Vec::new(),
            })
        }
        ColumnKind::Categorical => {
            let mut categories: Vec<String> = Vec::new();
            let mut codes: HashMap<&str, usize> = HashMap::new();
            let values = cells
                .iter()
                .zip(&missing)
                .map(|(c, &m)| {
                    if m {
                        return 0.0;
                    }
                    let next = codes.len();
                    let code = *codes.entry(c.as_str()).or_insert_with(|| {
                        categories.push(c.clone());
                        next
                    });
                    code as f64
                })
                .collect();
            Ok(FeatureColumn {
                name: name.to_string(),
                kind,
                values,
                missing,
                categories,
            })
        }
    }
}

/// Fill missing cells: column median for numeric columns, column mode for
/// categorical ones (ties go to the smallest code).
pub fn impute(dataset: &Dataset) -> Result<Dataset> {
    let mut out = dataset.clone();
    for col in &mut out.columns {
        if !col.has_missing() {
            continue;
        }
        let present: Vec<f64> = col
            .values
            .iter()
            .zip(&col.missing)
            .filter_map(|(&v, &m)| (!m).then_some(v))
            .collect();
        if present.is_empty() {
            return Err(Error::ColumnAllMissing(col.name.clone()));
        }
        let fill = match col.kind {
            ColumnKind::Numeric => median(&present)?,
            ColumnKind::Categorical => {
                let mut counts = vec![0usize; col.categories.len().max(1)];
                for &v in &present {
                    counts[v as usize] += 1;
                }
                let best = counts.iter().copied().max().unwrap_or(0);
                counts.iter().position(|&c| c == best).unwrap_or(0) as f64
            }
        };
        for (v, m) in col.values.iter_mut().zip(col.missing.iter_mut()) {
            if *m {
                *v = fill;
                *m = false;
            }
        }
    }
    Ok(out)
}

/// Keep the masked columns, preserving their order.
pub fn project(dataset: &Dataset, mask: &FeatureMask) -> Result<Dataset> {
    if mask.len() != dataset.n_features() {
        return Err(Error::InvalidMask(format!(
            "mask has {} bits for {} features",
            mask.len(),
            dataset.n_features()
        )));
    }
    if mask.count() == 0 {
        return Err(Error::InvalidMask("mask selects no features".into()));
    }
    let columns = dataset
        .columns
        .iter()
        .zip(mask.bits())
        .filter(|&(_, &keep)| keep)
        .map(|(c, _)| c.clone())
        .collect();
    Ok(Dataset {
        name: dataset.name.clone(),
        columns,
        labels: dataset.labels.clone(),
        classes: dataset.classes.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Stratified k-fold split over class labels.
///
/// Each class's indices are shuffled, then the negative stratum followed by
/// the positive stratum is dealt round-robin onto the folds. The deal does not
/// restart between strata, which keeps fold sizes within one record of each
/// other.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let [neg, pos] = dataset.classes();
    stratify(dataset.labels(), k, seed, [neg, pos])
}

/// Label-only form of [`stratified_kfold`].
pub fn stratified_kfold_labels(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    stratify(labels, k, seed, ["negative", "positive"])
}

fn stratify(labels: &[bool], k: usize, seed: u64, class_names: [&str; 2]) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let mut strata: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        strata[l as usize].push(i);
    }
    for (positive, stratum) in strata.iter().enumerate() {
        if stratum.len() < k {
            return Err(Error::ClassTooSmall {
                class: class_names[positive].to_string(),
                count: stratum.len(),
                required: k,
            });
        }
    }

    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut slot = 0;
    for (c, stratum) in strata.iter_mut().enumerate() {
        let mut rng = rng::stream(seed, &[c as u64]);
        stratum.shuffle(&mut rng);
        for &i in stratum.iter() {
            tests[slot].push(i);
            slot = (slot + 1) % k;
        }
    }

    let n = labels.len();
    let folds = tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            for &i in &test {
                in_test[i] = true;
            }
            let train = (0..n).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { k, seed, folds })
}
