//! Population-based feature-subset search.
//!
//! Both engines score candidate masks through an [`Evaluator`]. Results are
//! cached per distinct mask, and each batch of uncached masks is evaluated in
//! parallel and merged back in population order, so a fixed seed gives the
//! same [`SearchResult`] at any thread count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::FeatureMask;

pub mod ga;
pub mod pso;

pub use ga::{ga_evolve, ga_search, GaConfig};
pub use pso::{decode, init_swarm, pso_search, update_particle, Particle, Swarm, SwarmConfig};

/// Fitness of a feature mask; larger is better.
pub trait Evaluator: Sync {
    fn evaluate(&self, mask: &FeatureMask) -> Result<f64>;
}

impl<F> Evaluator for F
where
    F: Fn(&FeatureMask) -> Result<f64> + Sync,
{
    fn evaluate(&self, mask: &FeatureMask) -> Result<f64> {
        self(mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    /// Number of evaluator calls (cache misses).
    pub evaluations: usize,
    /// Best fitness known after initialization and after each iteration.
    pub history: Vec<f64>,
}

#[derive(Default)]
pub(crate) struct MaskCache {
    seen: HashMap<FeatureMask, f64>,
    pub(crate) evaluations: usize,
}

impl MaskCache {
    /// Fitness for each mask, evaluating every distinct uncached mask once.
    pub(crate) fn evaluate_batch<E: Evaluator + ?Sized>(
        &mut self,
        masks: &[FeatureMask],
        evaluator: &E,
        iteration: usize,
    ) -> Result<Vec<f64>> {
        let mut pending: Vec<&FeatureMask> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for m in masks {
            if !self.seen.contains_key(m) && queued.insert(m) {
                pending.push(m);
            }
        }
        let scores: Vec<Result<f64>> = pending.par_iter().map(|m| evaluator.evaluate(m)).collect();
        for (m, score) in pending.into_iter().zip(scores) {
            let score = score
                .and_then(|f| {
                    if f.is_finite() {
                        Ok(f)
                    } else {
                        Err(Error::InvalidArgument(format!("non-finite fitness {f}")))
                    }
                })
                .map_err(|e| Error::Evaluation {
                    iteration,
                    source: Box::new(e),
                })?;
            self.evaluations += 1;
            self.seen.insert(m.clone(), score);
        }
        Ok(masks.iter().map(|m| self.seen[m]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn cache_evaluates_each_mask_once() {
        let calls = AtomicUsize::new(0);
        let eval = |m: &FeatureMask| {
            calls.fetch_add(1, Ordering::SeqCst);
            Ok(m.count() as f64)
        };
        let a = FeatureMask::parse_bits("101").unwrap();
        let b = FeatureMask::parse_bits("111").unwrap();
        let mut cache = MaskCache::default();
        let out = cache
            .evaluate_batch(&[a.clone(), b.clone(), a.clone()], &eval, 0)
            .unwrap();
        assert_eq!(out, vec![2.0, 3.0, 2.0]);
        cache.evaluate_batch(&[b, a], &eval, 1).unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 2);
        assert_eq!(cache.evaluations, 2);
    }

    #[test]
    fn evaluator_errors_carry_iteration() {
        let eval = |_: &FeatureMask| -> Result<f64> { Err(Error::EmptyDataset) };
        let mut cache = MaskCache::default();
        let err = cache
            .evaluate_batch(&[FeatureMask::full(2)], &eval, 7)
            .unwrap_err();
        assert!(matches!(err, Error::Evaluation { iteration: 7, .. }));
    }
}
