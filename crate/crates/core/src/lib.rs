//! Wrapper feature selection with a tunable-size particle swarm.
//!
//! Candidate feature subsets are searched with particle swarm optimization
//! (or a genetic algorithm baseline) and scored by alternating decision trees.
//! The tuning loop grows the swarm one particle at a time until the composite
//! fitness (test accuracy blended with a median-based discrimination score)
//! stops improving at a diminishing rate.

pub mod adt;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fscore;
pub mod mask;
pub mod rng;
pub mod search;
pub mod stats;
pub mod synth;
pub mod tpso;

pub use error::{Error, Result};
pub use mask::FeatureMask;
