//! Continuous particle swarm optimization over `[0, 1]^d`, with positions
//! thresholded into feature masks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Evaluator, MaskCache, SearchResult};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub n_particles: usize,
    pub iterations: usize,
    /// Cognitive acceleration (pull toward the particle's own best).
    pub c1: f64,
    /// Social acceleration (pull toward the swarm best).
    pub c2: f64,
    pub w_start: f64,
    pub w_end: f64,
    pub v_max: f64,
    pub decode_threshold: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            n_particles: 50,
            iterations: 100,
            c1: 2.0,
            c2: 2.0,
            w_start: 0.9,
            w_end: 0.4,
            v_max: 4.0,
            decode_threshold: 0.5,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 1 {
            return Err(Error::InvalidArgument(
                "n_particles must be at least 1".into(),
            ));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidArgument(
                "iterations must be at least 1".into(),
            ));
        }
        if !(self.decode_threshold > 0.0 && self.decode_threshold < 1.0) {
            return Err(Error::InvalidArgument(
                "decode_threshold must lie in (0, 1)".into(),
            ));
        }
        if self.v_max.is_nan() || self.v_max <= 0.0 {
            return Err(Error::InvalidArgument("v_max must be positive".into()));
        }
        Ok(())
    }

    /// Inertia weight at iteration `t` in `1..=iterations`, linear from
    /// `w_start` to `w_end`.
    pub fn inertia(&self, t: usize) -> f64 {
        if self.iterations <= 1 {
            return self.w_start;
        }
        let frac = (t.saturating_sub(1)) as f64 / (self.iterations - 1) as f64;
        self.w_start + (self.w_end - self.w_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest_position: Vec<f64>,
    /// `-inf` until the particle has been evaluated.
    pub pbest_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
}

pub fn init_swarm(d: usize, config: &SwarmConfig) -> Result<Swarm> {
    if d < 1 {
        return Err(Error::InvalidArgument(
            "search dimension must be at least 1".into(),
        ));
    }
    config.validate()?;
    let particles = (0..config.n_particles)
        .map(|i| {
            let mut rng = rng::stream(config.seed, &[0, i as u64]);
            let position: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let velocity = (0..d)
                .map(|_| rng.gen_range(-config.v_max..=config.v_max))
                .collect();
            Particle {
                pbest_position: position.clone(),
                position,
                velocity,
                pbest_fitness: f64::NEG_INFINITY,
            }
        })
        .collect();
    Ok(Swarm { particles })
}

/// One velocity/position step. `draws` yields the `(r1, r2)` pair for each
/// dimension in turn.
pub(crate) fn step(
    particle: &mut Particle,
    gbest: &[f64],
    inertia: f64,
    config: &SwarmConfig,
    mut draws: impl FnMut() -> (f64, f64),
) {
    for j in 0..particle.position.len() {
        let (r1, r2) = draws();
        let x = particle.position[j];
        let v = inertia * particle.velocity[j]
            + config.c1 * r1 * (particle.pbest_position[j] - x)
            + config.c2 * r2 * (gbest[j] - x);
        let v = v.clamp(-config.v_max, config.v_max);
        particle.velocity[j] = v;
        particle.position[j] = (x + v).clamp(0.0, 1.0);
    }
}

/// Update velocity then position toward the particle's best and `gbest`,
/// clamping velocity to `±v_max` and position to `[0, 1]`.
pub fn update_particle<R: Rng>(
    particle: &mut Particle,
    gbest: &[f64],
    inertia: f64,
    config: &SwarmConfig,
    rng: &mut R,
) {
    step(particle, gbest, inertia, config, || {
        (rng.gen::<f64>(), rng.gen::<f64>())
    });
}

/// `position[j] > threshold`; an all-zero result selects the largest
/// coordinate instead (lowest index on ties).
pub fn decode(position: &[f64], threshold: f64) -> FeatureMask {
    let mut mask = FeatureMask::new(position.iter().map(|&x| x > threshold).collect());
    if mask.count() == 0 && !position.is_empty() {
        let mut best = 0;
        for (j, &x) in position.iter().enumerate() {
            if x > position[best] {
                best = j;
            }
        }
        mask.set(best, true);
    }
    mask
}

pub fn pso_search<E: Evaluator + ?Sized>(
    d: usize,
    config: &SwarmConfig,
    evaluator: &E,
) -> Result<SearchResult> {
    let mut swarm = init_swarm(d, config)?;
    let mut cache = MaskCache::default();

    let masks: Vec<FeatureMask> = swarm
        .particles
        .iter()
        .map(|p| decode(&p.position, config.decode_threshold))
        .collect();
    let fitness = cache.evaluate_batch(&masks, evaluator, 0)?;

    let mut gbest = GlobalBest {
        fitness: f64::NEG_INFINITY,
        position: Vec::new(),
        mask: masks[0].clone(),
    };
    gbest.absorb(&mut swarm, masks, fitness);
    let mut history = vec![gbest.fitness];

    for t in 1..=config.iterations {
        let inertia = config.inertia(t);
        for (i, p) in swarm.particles.iter_mut().enumerate() {
            let mut rng = rng::stream(config.seed, &[1, t as u64, i as u64]);
            update_particle(p, &gbest.position, inertia, config, &mut rng);
        }
        let masks: Vec<FeatureMask> = swarm
            .particles
            .iter()
            .map(|p| decode(&p.position, config.decode_threshold))
            .collect();
        let fitness = cache.evaluate_batch(&masks, evaluator, t)?;
        gbest.absorb(&mut swarm, masks, fitness);
        history.push(gbest.fitness);
    }

    Ok(SearchResult {
        best_mask: gbest.mask,
        best_fitness: gbest.fitness,
        evaluations: cache.evaluations,
        history,
    })
}

struct GlobalBest {
    fitness: f64,
    position: Vec<f64>,
    mask: FeatureMask,
}

impl GlobalBest {
    /// Merge one evaluated iteration in particle order; ties keep the
    /// earlier holder.
    fn absorb(&mut self, swarm: &mut Swarm, masks: Vec<FeatureMask>, fitness: Vec<f64>) {
        for ((p, mask), f) in swarm.particles.iter_mut().zip(masks).zip(fitness) {
            if f > p.pbest_fitness {
                p.pbest_fitness = f;
                p.pbest_position.clone_from(&p.position);
            }
            if f > self.fitness {
                self.fitness = f;
                self.position.clone_from(&p.position);
                self.mask = mask;
            }
        }
    }
}
