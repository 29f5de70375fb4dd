//! Alternating decision trees.
//!
//! A model is an arena of prediction nodes (signed values) and decision nodes
//! (a test on one feature with a "yes" and a "no" prediction child). The root
//! is prediction node 0. A record's margin is the sum of the prediction values
//! on every path whose decision tests it satisfies; a positive margin means
//! the positive class.
//!
//! Training is boosting over (precondition, condition) pairs: every round each
//! existing prediction node is tried as the precondition and every split of its
//! rows as the condition, and the pair minimizing
//! `Z = 2 (sqrt(W+_yes W-_yes) + sqrt(W+_no W-_no)) + W_outside` is added.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Condition {
    /// `value <= threshold`
    LessOrEqual { feature: usize, threshold: f64 },
    /// `value == code`, for categorical features.
    Equals { feature: usize, code: f64 },
}

impl Condition {
    pub fn feature(&self) -> usize {
        match *self {
            Condition::LessOrEqual { feature, .. } | Condition::Equals { feature, .. } => feature,
        }
    }

    #[inline]
    pub fn holds(&self, value: f64) -> bool {
        match *self {
            Condition::LessOrEqual { threshold, .. } => value <= threshold,
            Condition::Equals { code, .. } => value == code,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionNode {
    pub value: f64,
    /// Decision nodes hanging below this prediction node.
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionNode {
    pub condition: Condition,
    pub parent: usize,
    /// Prediction node reached when the condition holds.
    pub yes: usize,
    /// Prediction node reached when it does not.
    pub no: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdtModel {
    pub feature_names: Vec<String>,
    /// `[negative, positive]` class names.
    pub classes: [String; 2],
    pub boosting_rounds: usize,
    pub predictions: Vec<PredictionNode>,
    pub decisions: Vec<DecisionNode>,
    /// Total boosting weight after the root and after each added round.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub positive: bool,
    pub margin: f64,
}

impl AdtModel {
    /// Model holding only a root prediction.
    pub fn constant(root: f64, feature_names: Vec<String>, classes: [String; 2]) -> Self {
        AdtModel {
            feature_names,
            classes,
            boosting_rounds: 0,
            predictions: vec![PredictionNode {
                value: root,
                children: Vec::new(),
            }],
            decisions: Vec::new(),
            loss_history: Vec::new(),
        }
    }

    pub fn root_prediction(&self) -> f64 {
        self.predictions[0].value
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_name(&self, positive: bool) -> &str {
        &self.classes[positive as usize]
    }

    /// Attach a decision below prediction node `parent`; returns its index.
    pub fn add_decision(
        &mut self,
        parent: usize,
        condition: Condition,
        yes: f64,
        no: f64,
    ) -> usize {
        let yes_idx = self.predictions.len();
        self.predictions.push(PredictionNode {
            value: yes,
            children: Vec::new(),
        });
        self.predictions.push(PredictionNode {
            value: no,
            children: Vec::new(),
        });
        let idx = self.decisions.len();
        self.decisions.push(DecisionNode {
            condition,
            parent,
            yes: yes_idx,
            no: yes_idx + 1,
        });
        self.predictions[parent].children.push(idx);
        idx
    }

    /// Margin of a record whose feature `f` value is `value(f)`.
    pub fn margin_with(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut margin = 0.0;
        let mut stack = vec![0usize];
        while let Some(p) = stack.pop() {
            let node = &self.predictions[p];
            margin += node.value;
            for &d in &node.children {
                let dec = &self.decisions[d];
                stack.push(if dec.condition.holds(value(dec.condition.feature())) {
                    dec.yes
                } else {
                    dec.no
                });
            }
        }
        margin
    }

    pub fn classify(&self, record: &[f64]) -> Result<Prediction> {
        if record.len() != self.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "record has {} values, model expects {}",
                record.len(),
                self.n_features()
            )));
        }
        let margin = self.margin_with(|f| record[f]);
        Ok(Prediction {
            positive: margin > 0.0,
            margin,
        })
    }

    pub fn accuracy(&self, test: &Dataset) -> Result<f64> {
        if test.n_records() == 0 {
            return Err(Error::EmptyDataset);
        }
        if test.n_features() != self.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "dataset has {} features, model expects {}",
                test.n_features(),
                self.n_features()
            )));
        }
        let cols = test.columns();
        let correct = test
            .labels()
            .iter()
            .enumerate()
            .filter(|&(r, &label)| (self.margin_with(|f| cols[f].values[r]) > 0.0) == label)
            .count();
        Ok(correct as f64 / test.n_records() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn classify(model: &AdtModel, record: &[f64]) -> Result<Prediction> {
    model.classify(record)
}

pub fn accuracy(model: &AdtModel, test: &Dataset) -> Result<f64> {
    model.accuracy(test)
}

/// Train on every record and feature of `train`.
pub fn train_adt(train: &Dataset, rounds: usize) -> Result<AdtModel> {
    let rows: Vec<usize> = (0..train.n_records()).collect();
    let features: Vec<usize> = (0..train.n_features()).collect();
    Presorted::new(train).train(&rows, &features, rounds)
}

/// Feature columns of a dataset with each column's row order sorted by
/// `(value, row)`. Training on any row/feature subset reuses these orders,
/// which makes repeated wrapper evaluations cheap and gives exactly the model
/// that training on the projected subset would.
pub struct Presorted<'a> {
    dataset: &'a Dataset,
    order: Vec<Vec<u32>>,
}

struct Candidate {
    z: f64,
    node: usize,
    condition: Condition,
}

impl<'a> Presorted<'a> {
    pub fn new(dataset: &'a Dataset) -> Self {
        let order = dataset
            .columns()
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..dataset.n_records() as u32).collect();
                idx.sort_by(|&a, &b| {
                    c.values[a as usize]
                        .total_cmp(&c.values[b as usize])
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Presorted { dataset, order }
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    /// Train on `rows` (ascending) restricted to `features` (ascending). The
    /// returned model indexes features by position in `features`.
    pub fn train(&self, rows: &[usize], features: &[usize], rounds: usize) -> Result<AdtModel> {
        if rounds == 0 {
            return Err(Error::InvalidArgument(
                "boosting rounds must be at least 1".into(),
            ));
        }
        if features.is_empty() {
            return Err(Error::InvalidArgument("no features to train on".into()));
        }
        let ds = self.dataset;
        let labels = ds.labels();
        let n = ds.n_records();

        let mut in_rows = vec![false; n];
        for &r in rows {
            in_rows[r] = true;
        }
        let (mut w_pos, mut w_neg) = (0.0f64, 0.0f64);
        for &r in rows {
            if labels[r] {
                w_pos += 1.0;
            } else {
                w_neg += 1.0;
            }
        }
        if w_pos == 0.0 || w_neg == 0.0 {
            return Err(Error::ClassTooSmall {
                class: ds.class_name(w_pos == 0.0).to_string(),
                count: 0,
                required: 1,
            });
        }
        let epsilon = 1.0 / (2.0 * rows.len() as f64);
        let root = 0.5 * (w_pos / w_neg).ln();

        let names = features
            .iter()
            .map(|&f| ds.column(f).name.clone())
            .collect();
        let mut model = AdtModel::constant(root, names, ds.classes().clone());

        let mut weights = vec![0.0; n];
        for &r in rows {
            weights[r] = (-signed(labels[r]) * root).exp();
        }
        let mut total: f64 = rows.iter().map(|&r| weights[r]).sum();
        model.loss_history.push(total);

        let kinds: Vec<ColumnKind> = features.iter().map(|&f| ds.column(f).kind).collect();
        let columns: Vec<&[f64]> = features
            .iter()
            .map(|&f| ds.column(f).values.as_slice())
            .collect();

        // Per prediction node, per local feature: rows reaching the node in sorted order.
        let root_lists: Vec<Vec<u32>> = features
            .iter()
            .map(|&f| {
                self.order[f]
                    .iter()
                    .copied()
                    .filter(|&r| in_rows[r as usize])
                    .collect()
            })
            .collect();
        let mut node_rows: Vec<Vec<Vec<u32>>> = vec![root_lists];

        for _ in 0..rounds {
            let mut best: Option<Candidate> = None;
            for (node, lists) in node_rows.iter().enumerate() {
                let (np, nn) = class_weights(&lists[0], labels, &weights);
                let outside = total - (np + nn);
                for (lf, list) in lists.iter().enumerate() {
                    let found = match kinds[lf] {
                        ColumnKind::Numeric => {
                            best_threshold(list, columns[lf], labels, &weights, np, nn)
                        }
                        ColumnKind::Categorical => {
                            best_category(list, columns[lf], labels, &weights, np, nn)
                        }
                    };
                    if let Some((inner, condition)) = found {
                        let z = inner + outside;
                        if best.as_ref().is_none_or(|b| z < b.z) {
                            best = Some(Candidate {
                                z,
                                node,
                                condition: with_feature(condition, lf),
                            });
                        }
                    }
                }
            }
            let Some(chosen) = best else { break };

            let parent_lists = &node_rows[chosen.node];
            let lf = chosen.condition.feature();
            let col = columns[lf];
            let mut goes_yes = vec![false; n];
            let (mut yp, mut yn, mut np_, mut nn_) = (0.0, 0.0, 0.0, 0.0);
            for &r in &parent_lists[0] {
                let r = r as usize;
                let yes = chosen.condition.holds(col[r]);
                goes_yes[r] = yes;
                match (yes, labels[r]) {
                    (true, true) => yp += weights[r],
                    (true, false) => yn += weights[r],
                    (false, true) => np_ += weights[r],
                    (false, false) => nn_ += weights[r],
                }
            }
            let yes_value = 0.5 * ((yp + epsilon) / (yn + epsilon)).ln();
            let no_value = 0.5 * ((np_ + epsilon) / (nn_ + epsilon)).ln();

            let (yes_lists, no_lists): (Vec<Vec<u32>>, Vec<Vec<u32>>) = parent_lists
                .iter()
                .map(|list| list.iter().partition(|&&r| goes_yes[r as usize]))
                .unzip();
            for &r in &parent_lists[0] {
                let r = r as usize;
                let a = if goes_yes[r] { yes_value } else { no_value };
                weights[r] *= (-signed(labels[r]) * a).exp();
            }
            model.add_decision(chosen.node, chosen.condition, yes_value, no_value);
            node_rows.push(yes_lists);
            node_rows.push(no_lists);

            total = rows.iter().map(|&r| weights[r]).sum();
            model.boosting_rounds += 1;
            model.loss_history.push(total);
        }
        Ok(model)
    }

    /// Margin of base-dataset row `row` under a model trained on `features`.
    pub fn margin(&self, model: &AdtModel, features: &[usize], row: usize) -> f64 {
        let cols = self.dataset.columns();
        model.margin_with(|f| cols[features[f]].values[row])
    }

    /// Fraction of `rows` the model labels correctly.
    pub fn accuracy_on(&self, model: &AdtModel, features: &[usize], rows: &[usize]) -> f64 {
        let labels = self.dataset.labels();
        let correct = rows
            .iter()
            .filter(|&&r| (self.margin(model, features, r) > 0.0) == labels[r])
            .count();
        correct as f64 / rows.len() as f64
    }
}

#[inline]
fn signed(positive: bool) -> f64 {
    if positive {
        1.0
    } else {
        -1.0
    }
}

fn with_feature(condition: Condition, feature: usize) -> Condition {
    match condition {
        Condition::LessOrEqual { threshold, .. } => Condition::LessOrEqual { feature, threshold },
        Condition::Equals { code, .. } => Condition::Equals { feature, code },
    }
}

fn class_weights(list: &[u32], labels: &[bool], weights: &[f64]) -> (f64, f64) {
    let (mut p, mut q) = (0.0, 0.0);
    for &r in list {
        let r = r as usize;
        if labels[r] {
            p += weights[r];
        } else {
            q += weights[r];
        }
    }
    (p, q)
}

#[inline]
fn split_z(lp: f64, ln: f64, rp: f64, rn: f64) -> f64 {
    2.0 * ((lp * ln).sqrt() + (rp.max(0.0) * rn.max(0.0)).sqrt())
}

/// Best `value <= t` split over midpoints of consecutive distinct values.
/// Returns the split part of Z and the condition (feature index unset).
fn best_threshold(
    list: &[u32],
    col: &[f64],
    labels: &[bool],
    weights: &[f64],
    total_pos: f64,
    total_neg: f64,
) -> Option<(f64, Condition)> {
    let mut best: Option<(f64, Condition)> = None;
    let (mut lp, mut ln) = (0.0, 0.0);
    for (i, &r) in list.iter().enumerate() {
        let r = r as usize;
        if labels[r] {
            lp += weights[r];
        } else {
            ln += weights[r];
        }
        let Some(&next) = list.get(i + 1) else { break };
        let (v, nv) = (col[r], col[next as usize]);
        if nv == v {
            continue;
        }
        let z = split_z(lp, ln, total_pos - lp, total_neg - ln);
        if best.as_ref().is_none_or(|b| z < b.0) {
            best = Some((
                z,
                Condition::LessOrEqual {
                    feature: 0,
                    threshold: v + (nv - v) / 2.0,
                },
            ));
        }
    }
    best
}

/// Best `value == code` split; codes are visited in ascending order.
fn best_category(
    list: &[u32],
    col: &[f64],
    labels: &[bool],
    weights: &[f64],
    total_pos: f64,
    total_neg: f64,
) -> Option<(f64, Condition)> {
    let first = col[*list.first()? as usize];
    if list.iter().all(|&r| col[r as usize] == first) {
        return None;
    }
    let mut best: Option<(f64, Condition)> = None;
    let mut i = 0;
    while i < list.len() {
        let code = col[list[i] as usize];
        let (mut cp, mut cn) = (0.0, 0.0);
        while i < list.len() && col[list[i] as usize] == code {
            let r = list[i] as usize;
            if labels[r] {
                cp += weights[r];
            } else {
                cn += weights[r];
            }
            i += 1;
        }
        let z = split_z(cp, cn, total_pos - cp, total_neg - cn);
        if best.as_ref().is_none_or(|b| z < b.0) {
            best = Some((z, Condition::Equals { feature: 0, code }));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureColumn;
    use crate::mask::FeatureMask;
    use proptest::prelude::*;

    fn one_d_separable() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 9.5]).collect();
        let labels = rows.iter().map(|r| r[0] > 0.0).collect();
        Dataset::from_rows("sep", &rows, labels).unwrap()
    }

    #[test]
    fn separable_data_in_one_round() {
        let ds = one_d_separable();
        let model = train_adt(&ds, 1).unwrap();
        assert_eq!(model.accuracy(&ds).unwrap(), 1.0);
        assert_eq!(model.decisions.len(), 1);
        match model.decisions[0].condition {
            Condition::LessOrEqual { threshold, .. } => assert_eq!(threshold, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn balanced_root_is_zero() {
        let model = train_adt(&one_d_separable(), 1).unwrap();
        assert_eq!(model.root_prediction(), 0.0);
    }

    #[test]
    fn unbalanced_root_is_half_log_odds() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = (0..10).map(|i| i < 7).collect();
        let ds = Dataset::from_rows("u", &rows, labels).unwrap();
        let model = train_adt(&ds, 1).unwrap();
        assert!((model.root_prediction() - 0.5 * (7.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn root_only_model_classifies_by_sign() {
        let model = AdtModel::constant(0.7, vec!["x".into()], ["a".into(), "b".into()]);
        let p = model.classify(&[123.0]).unwrap();
        assert!(p.positive);
        assert_eq!(p.margin, 0.7);
    }

    #[test]
    fn hand_built_model_path_sums() {
        let mut model = AdtModel::constant(0.2, vec!["x".into()], ["a".into(), "b".into()]);
        model.add_decision(
            0,
            Condition::LessOrEqual {
                feature: 0,
                threshold: 5.0,
            },
            0.5,
            -0.9,
        );
        let yes = model.classify(&[3.0]).unwrap();
        assert!((yes.margin - 0.7).abs() < 1e-12);
        assert!(yes.positive);
        let no = model.classify(&[8.0]).unwrap();
        assert!((no.margin + 0.7).abs() < 1e-12);
        assert!(!no.positive);
    }

    #[test]
    fn zero_margin_is_negative() {
        let model = AdtModel::constant(0.0, vec!["x".into()], ["a".into(), "b".into()]);
        assert!(!model.classify(&[1.0]).unwrap().positive);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let model = AdtModel::constant(0.0, vec!["x".into()], ["a".into(), "b".into()]);
        assert!(matches!(
            model.classify(&[1.0, 2.0]),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn single_class_training_fails() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows("s", &rows, vec![true; 4]).unwrap();
        assert!(train_adt(&ds, 3).is_err());
    }

    #[test]
    fn accuracy_majority_rate_for_constant_model() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows("m", &rows, (0..10).map(|i| i < 6).collect()).unwrap();
        let model = AdtModel::constant(1.0, vec!["x0".into()], ["neg".into(), "pos".into()]);
        assert!((model.accuracy(&ds).unwrap() - 0.6).abs() < 1e-15);
        let empty = ds.subset(&[]);
        assert!(model.accuracy(&empty).is_err());
    }

    #[test]
    fn categorical_equality_split() {
        let col = FeatureColumn {
            name: "c".into(),
            kind: ColumnKind::Categorical,
            values: vec![0.0, 1.0, 2.0, 1.0, 0.0, 2.0, 1.0, 1.0],
            missing: vec![false; 8],
            categories: vec!["a".into(), "b".into(), "c".into()],
        };
        let labels = vec![false, true, false, true, false, false, true, true];
        let ds = Dataset::new("c", vec![col], labels, ["n".into(), "p".into()]).unwrap();
        let model = train_adt(&ds, 1).unwrap();
        assert_eq!(
            model.decisions[0].condition,
            Condition::Equals {
                feature: 0,
                code: 1.0
            }
        );
        assert_eq!(model.accuracy(&ds).unwrap(), 1.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ds = one_d_separable();
        let model = train_adt(&ds, 3).unwrap();
        let json = model.to_json().unwrap();
        let back = AdtModel::from_json(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn subset_training_matches_projected_training() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let a = ((i * 37) % 17) as f64;
            let b = ((i * 11) % 7) as f64;
            let c = ((i * 5) % 13) as f64;
            rows.push(vec![a, b, c]);
            labels.push(a + 2.0 * b > 14.0);
        }
        let ds = Dataset::from_rows("s", &rows, labels).unwrap();
        let subset_rows: Vec<usize> = (0..60).filter(|i| i % 4 != 0).collect();
        let features = vec![0, 2];
        let fast = Presorted::new(&ds)
            .train(&subset_rows, &features, 6)
            .unwrap();
        let projected = crate::dataset::project(
            &ds.subset(&subset_rows),
            &FeatureMask::from_indices(3, &features),
        )
        .unwrap();
        let slow = train_adt(&projected, 6).unwrap();
        assert_eq!(fast, slow);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (6usize..30, 1usize..4).prop_flat_map(|(n, d)| {
            (
                proptest::collection::vec(proptest::collection::vec(0i32..6, d), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_filter_map("needs both classes", |(rows, labels)| {
                    let pos = labels.iter().filter(|&&l| l).count();
                    if pos == 0 || pos == labels.len() {
                        return None;
                    }
                    let rows: Vec<Vec<f64>> = rows
                        .into_iter()
                        .map(|r| r.into_iter().map(f64::from).collect())
                        .collect();
                    Dataset::from_rows("p", &rows, labels).ok()
                })
        })
    }

    /// Enumerate every root path independently of the stack traversal.
    fn enumerate_margin(model: &AdtModel, record: &[f64]) -> f64 {
        fn walk(model: &AdtModel, p: usize, record: &[f64]) -> f64 {
            let node = &model.predictions[p];
            let mut sum = node.value;
            for &d in &node.children {
                let dec = &model.decisions[d];
                let v = record[dec.condition.feature()];
                let child = if dec.condition.holds(v) {
                    dec.yes
                } else {
                    dec.no
                };
                sum += walk(model, child, record);
            }
            sum
        }
        walk(model, 0, record)
    }

    proptest! {
        #[test]
        fn loss_is_non_increasing(ds in arb_dataset(), rounds in 1usize..8) {
            let model = train_adt(&ds, rounds).unwrap();
            for pair in model.loss_history.windows(2) {
                prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{:?}", model.loss_history);
            }
        }

        #[test]
        fn training_is_deterministic(ds in arb_dataset()) {
            let a = train_adt(&ds, 4).unwrap().to_json().unwrap();
            let b = train_adt(&ds, 4).unwrap().to_json().unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn margin_matches_path_enumeration(ds in arb_dataset()) {
            let model = train_adt(&ds, 4).unwrap();
            prop_assert!(model.decisions.len() <= 4);
            for r in 0..ds.n_records() {
                let rec = ds.row(r);
                let got = model.classify(&rec).unwrap().margin;
                let want = enumerate_margin(&model, &rec);
                prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }

        #[test]
        fn prediction_values_are_finite(ds in arb_dataset()) {
            let model = train_adt(&ds, 5).unwrap();
            prop_assert!(model.predictions.iter().all(|p| p.value.is_finite()));
            for d in &model.decisions {
                prop_assert!(d.yes != d.no && d.yes < model.predictions.len());
            }
        }
    }
}
