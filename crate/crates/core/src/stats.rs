//! Wilcoxon signed-rank test, fold aggregates, and least-squares line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// First member of each pair tends to be larger.
    Greater,
    /// First member of each pair tends to be smaller.
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonReport {
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    pub statistic: f64,
    pub n_effective: usize,
    pub p_value: f64,
    pub alternative: Alternative,
    pub significant_at_05: bool,
}

/// Two-sided exact test on differences `a - b`.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonReport> {
    wilcoxon_signed_rank_with(pairs, Alternative::TwoSided)
}

/// Zero differences are dropped, tied magnitudes get mid-ranks, and the
/// p-value is exact over all `2^n` sign assignments of the ranks.
pub fn wilcoxon_signed_rank_with(
    pairs: &[(f64, f64)],
    alternative: Alternative,
) -> Result<WilcoxonReport> {
    if pairs.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "wilcoxon test needs at least 5 pairs, got {}",
            pairs.len()
        )));
    }
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| a - b)
        .filter(|&d| d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::AllDifferencesZero);
    }
    let n = diffs.len();
    let doubled = doubled_midranks(&diffs);

    let (mut plus2, mut minus2) = (0u64, 0u64);
    for (&d, &r) in diffs.iter().zip(&doubled) {
        if d > 0.0 {
            plus2 += r;
        } else {
            minus2 += r;
        }
    }
    let total2 = plus2 + minus2;
    let stat2 = plus2.min(minus2);

    let dist = signed_rank_distribution(&doubled);
    let denom = 2f64.powi(n as i32);
    let mass = |keep: &dyn Fn(u64) -> bool| -> f64 {
        dist.iter()
            .enumerate()
            .filter(|&(s, _)| keep(s as u64))
            .map(|(_, &c)| c)
            .sum::<f64>()
            / denom
    };
    let p_value = match alternative {
        Alternative::TwoSided => mass(&|s| s.min(total2 - s) <= stat2),
        Alternative::Greater => mass(&|s| s >= plus2),
        Alternative::Less => mass(&|s| s <= plus2),
    }
    .min(1.0);

    Ok(WilcoxonReport {
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
        statistic: stat2 as f64 / 2.0,
        n_effective: n,
        p_value,
        alternative,
        significant_at_05: p_value <= 0.05,
    })
}

/// Twice the mid-rank of each `|d|`, so tied ranks stay integral.
fn doubled_midranks(diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled mean is i+j+2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// `counts[s]` = number of sign assignments whose doubled positive rank sum is `s`.
fn signed_rank_distribution(doubled: &[u64]) -> Vec<f64> {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Arithmetic mean and sample standard deviation (divisor `n - 1`).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "mean_std needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Zero when `y` is constant.
    pub r_squared: f64,
    pub n_points: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares fit of `y = slope * x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "x has {} points, y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "regression needs at least 3 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values are equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        0.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
        n_points: x.len(),
    })
}
