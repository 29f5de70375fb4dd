//! Generational genetic algorithm on bit-string chromosomes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Evaluator, MaskCache, SearchResult};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 50,
            generations: 100,
            crossover_rate: 1.0,
            mutation_rate: 0.001,
            tournament_size: 2,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 1 || self.generations < 1 || self.tournament_size < 1 {
            return Err(Error::InvalidArgument(
                "population, generations and tournament size must be at least 1".into(),
            ));
        }
        if self.elitism > self.population {
            return Err(Error::InvalidArgument("elitism exceeds population".into()));
        }
        for (name, p) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Random initial population, then [`ga_evolve`].
pub fn ga_search<E: Evaluator + ?Sized>(
    d: usize,
    config: &GaConfig,
    evaluator: &E,
) -> Result<SearchResult> {
    if d < 1 {
        return Err(Error::InvalidArgument(
            "search dimension must be at least 1".into(),
        ));
    }
    config.validate()?;
    let mut rng = rng::stream(config.seed, &[0]);
    let initial = (0..config.population)
        .map(|_| {
            let mut m = FeatureMask::new((0..d).map(|_| rng.gen::<bool>()).collect());
            repair(&mut m, &mut rng);
            m
        })
        .collect();
    ga_evolve(initial, config, evaluator).map(|(result, _)| result)
}

/// Evolve `initial` for `config.generations` generations. Returns the search
/// result and the final population.
pub fn ga_evolve<E: Evaluator + ?Sized>(
    initial: Vec<FeatureMask>,
    config: &GaConfig,
    evaluator: &E,
) -> Result<(SearchResult, Vec<FeatureMask>)> {
    config.validate()?;
    if initial.len() != config.population {
        return Err(Error::InvalidArgument(format!(
            "initial population has {} members, expected {}",
            initial.len(),
            config.population
        )));
    }
    let d = initial[0].len();
    let mut cache = MaskCache::default();
    let mut population = initial;
    let mut fitness = cache.evaluate_batch(&population, evaluator, 0)?;

    let (mut best_mask, mut best_fitness) = (population[0].clone(), f64::NEG_INFINITY);
    let track = |pop: &[FeatureMask], fit: &[f64], best_mask: &mut FeatureMask, best: &mut f64| {
        for (m, &f) in pop.iter().zip(fit) {
            if f > *best {
                *best = f;
                *best_mask = m.clone();
            }
        }
    };
    track(&population, &fitness, &mut best_mask, &mut best_fitness);
    let mut history = vec![best_fitness];

    for gen in 1..=config.generations {
        let mut rng = rng::stream(config.seed, &[1, gen as u64]);

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
        let mut next: Vec<FeatureMask> = ranked[..config.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();

        while next.len() < config.population {
            let a = tournament(&fitness, config.tournament_size, &mut rng);
            let b = tournament(&fitness, config.tournament_size, &mut rng);
            let (mut c1, mut c2) = (population[a].clone(), population[b].clone());
            if d >= 2 && rng.gen::<f64>() < config.crossover_rate {
                let cut = rng.gen_range(1..d);
                for j in cut..d {
                    let (x, y) = (c1.get(j), c2.get(j));
                    c1.set(j, y);
                    c2.set(j, x);
                }
            }
            for child in [c1, c2] {
                if next.len() == config.population {
                    break;
                }
                let mut child = child;
                for j in 0..d {
                    if rng.gen::<f64>() < config.mutation_rate {
                        let flipped = !child.get(j);
                        child.set(j, flipped);
                    }
                }
                repair(&mut child, &mut rng);
                next.push(child);
            }
        }

        population = next;
        fitness = cache.evaluate_batch(&population, evaluator, gen)?;
        track(&population, &fitness, &mut best_mask, &mut best_fitness);
        history.push(best_fitness);
    }

    Ok((
        SearchResult {
            best_mask,
            best_fitness,
            evaluations: cache.evaluations,
            history,
        },
        population,
    ))
}

/// Index of the fittest of `size` uniformly drawn members; the first drawn
/// wins ties.
fn tournament(fitness: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// Empty chromosomes get one random bit set.
fn repair(mask: &mut FeatureMask, rng: &mut ChaCha8Rng) {
    if mask.count() == 0 && !mask.is_empty() {
        let j = rng.gen_range(0..mask.len());
        mask.set(j, true);
    }
}
