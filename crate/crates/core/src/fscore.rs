//! Median-based feature discrimination score.
//!
//! For feature `i` with class medians `m+`, `m-` and overall median `m`:
//!
//! ```text
//! F(i) = ((m+ - m)^2 + (m- - m)^2)
//!        / ( sum_k (x+_k - m+)^2 / (n+ - 1) + sum_k (x-_k - m-)^2 / (n- - 1) )
//! ```
//!
//! A feature with zero within-class dispersion scores 0.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::FeatureMask;

/// Middle value of `values`; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("median of an empty vector".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_median(&sorted))
}

fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Score of one column given its values and the record labels.
pub fn score_values(values: &[f64], labels: &[bool]) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&v, &l) in values.iter().zip(labels) {
        if l {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    for (class, n) in [("positive", pos.len()), ("negative", neg.len())] {
        if n < 2 {
            return Err(Error::ClassTooSmall {
                class: class.into(),
                count: n,
                required: 2,
            });
        }
    }

    let overall = median(values)?;
    let med_pos = median(&pos)?;
    let med_neg = median(&neg)?;

    let between = (med_pos - overall).powi(2) + (med_neg - overall).powi(2);
    let dispersion = |xs: &[f64], m: f64| {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let within = dispersion(&pos, med_pos) + dispersion(&neg, med_neg);

    if within == 0.0 {
        return Ok(0.0);
    }
    Ok(between / within)
}

pub fn feature_score(dataset: &Dataset, i: usize) -> Result<f64> {
    if i >= dataset.n_features() {
        return Err(Error::InvalidArgument(format!(
            "feature index {i} out of range for {} features",
            dataset.n_features()
        )));
    }
    score_values(&dataset.column(i).values, dataset.labels())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreVector {
    pub scores: Vec<f64>,
    pub total: f64,
}

impl FeatureScoreVector {
    pub fn new(scores: Vec<f64>) -> Self {
        let total = scores.iter().sum();
        FeatureScoreVector { scores, total }
    }

    /// Sum of the scores of the masked features.
    pub fn masked_sum(&self, mask: &FeatureMask) -> Result<f64> {
        if mask.len() != self.scores.len() {
            return Err(Error::InvalidMask(format!(
                "mask has {} bits for {} scores",
                mask.len(),
                self.scores.len()
            )));
        }
        Ok(self
            .scores
            .iter()
            .zip(mask.bits())
            .filter_map(|(&s, &b)| b.then_some(s))
            .sum())
    }
}

pub fn score_all(dataset: &Dataset) -> Result<FeatureScoreVector> {
    let scores = (0..dataset.n_features())
        .map(|i| feature_score(dataset, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureScoreVector::new(scores))
}

/// Share of the total score carried by the masked features, in `[0, 1]`.
pub fn subset_ratio(scores: &FeatureScoreVector, mask: &FeatureMask) -> Result<f64> {
    if scores.total <= 0.0 {
        return Err(Error::ZeroTotalScore);
    }
    let ratio = scores.masked_sum(mask)? / scores.total;
    Ok(ratio.clamp(0.0, 1.0))
}
