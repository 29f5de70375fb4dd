//! Synthetic binary-class datasets for tests and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// `n` records, `d` features. Feature `planted` separates the classes
/// perfectly (negatives in [-0.5, 0), positives in [1, 1.5)); the rest are
/// standard normal noise. Classes alternate, so they are balanced.
pub fn planted(n: usize, d: usize, planted: usize, seed: u64) -> Result<Dataset> {
    if planted >= d {
        return Err(Error::InvalidArgument(format!(
            "planted feature {planted} out of range for {d} features"
        )));
    }
    let mut rng = rng::stream(seed, &[0]);
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&pos| {
            (0..d)
                .map(|j| {
                    if j == planted {
                        let base = if pos { 1.0 } else { -0.5 };
                        base + 0.5 * rng.gen::<f64>()
                    } else {
                        rng.sample(StandardNormal)
                    }
                })
                .collect()
        })
        .collect();
    Dataset::from_rows("planted", &rows, labels)
}

/// Benchmark data: `d` standard normal features, the first three
/// informative. The label is the majority vote of `x_j > 0` over those three.
/// Records are drawn until each class holds half of `n`.
pub fn benchmark(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if d < 3 {
        return Err(Error::InvalidArgument(
            "benchmark data needs at least 3 features".into(),
        ));
    }
    if n < 4 {
        return Err(Error::InvalidArgument(
            "benchmark data needs at least 4 records".into(),
        ));
    }
    let mut rng = rng::stream(seed, &[1]);
    let quota = [n - n / 2, n / 2];
    let mut filled = [0usize; 2];
    let (mut rows, mut labels) = (Vec::with_capacity(n), Vec::with_capacity(n));
    while rows.len() < n {
        let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let votes = row[..3].iter().filter(|&&x| x > 0.0).count();
        let pos = votes >= 2;
        if filled[pos as usize] < quota[pos as usize] {
            filled[pos as usize] += 1;
            rows.push(row);
            labels.push(pos);
        }
    }
    Dataset::from_rows(format!("bench-{n}"), &rows, labels)
}

/// XOR-like grid: four `grid × grid` point clusters (spacing `step`) around
/// `(±1, ±1)`, positive when the signs differ. The two clusters below the
/// x axis are doubled, so each half-plane `x < 0` / `x > 0` holds its
/// classes 2:1 while each half-plane in `y` is balanced. No single threshold
/// exceeds 2/3 accuracy.
pub fn xor(grid: usize, step: f64) -> Result<Dataset> {
    if grid == 0 {
        return Err(Error::InvalidArgument("xor grid must be at least 1".into()));
    }
    let (mut rows, mut labels) = (Vec::new(), Vec::new());
    let offset = (grid as f64 - 1.0) / 2.0;
    for (cx, cy) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
        let copies = if cy < 0.0 { 2 } else { 1 };
        for i in 0..grid {
            for j in 0..grid {
                let x = cx + step * (i as f64 - offset);
                let y = cy + step * (j as f64 - offset);
                for _ in 0..copies {
                    rows.push(vec![x, y]);
                    labels.push((cx > 0.0) != (cy > 0.0));
                }
            }
        }
    }
    Dataset::from_rows("xor", &rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_feature_separates() {
        let ds = planted(40, 5, 2, 3).unwrap();
        assert_eq!(ds.class_counts(), (20, 20));
        let col = &ds.column(2).values;
        for (r, &pos) in ds.labels().iter().enumerate() {
            assert_eq!(col[r] > 0.5, pos);
        }
        assert!(planted(10, 3, 3, 0).is_err());
    }

    #[test]
    fn benchmark_is_balanced_and_labelled_by_majority() {
        let ds = benchmark(101, 15, 9).unwrap();
        assert_eq!(ds.n_features(), 15);
        assert_eq!(ds.class_counts(), (51, 50));
        for r in 0..ds.n_records() {
            let row = ds.row(r);
            let votes = row[..3].iter().filter(|&&x| x > 0.0).count();
            assert_eq!(votes >= 2, ds.labels()[r]);
        }
        assert_eq!(ds, benchmark(101, 15, 9).unwrap());
    }

    #[test]
    fn xor_labels() {
        let ds = xor(3, 0.1).unwrap();
        assert_eq!(ds.n_records(), 54);
        assert_eq!(ds.class_counts(), (27, 27));
        for r in 0..54 {
            let row = ds.row(r);
            assert_eq!((row[0] > 0.0) != (row[1] > 0.0), ds.labels()[r]);
        }
    }
}
