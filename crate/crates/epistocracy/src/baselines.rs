//! Genetic-algorithm and particle-swarm baselines sharing the optimizer's
//! run-record shape, so the experiment harness can compare all three heads
//! to head.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::core::{BestTracker, Bounds, ObjectiveSpec, RngStream, RunRecord};
use crate::epistocracy::single_point_crossover;
use crate::error::{Error, Result};
use crate::sampling::clamp_in_place;

const STREAM_INIT: u64 = 0;
const STREAM_LOOP: u64 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    /// Top performers copied unchanged into the next generation.
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            iterations: 100,
            crossover_rate: 0.5,
            mutation_rate: 0.2,
            tournament_size: 5,
            elitism_count: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("population must have at least 2 members"));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::config(format!(
                "tournament size must lie in 1..={}, got {}",
                self.population_size, self.tournament_size
            )));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::config(format!(
                "elitism must leave room for offspring, got {} of {}",
                self.elitism_count, self.population_size
            )));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PsoConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity cap per dimension, as a fraction of that axis range.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            iterations: 100,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            velocity_clamp: 0.5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::config("swarm must not be empty"));
        }
        for (name, value) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(format!(
                    "{name} must be non-negative and finite, got {value}"
                )));
            }
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return Err(Error::config(format!(
                "velocity clamp must be positive, got {}",
                self.velocity_clamp
            )));
        }
        Ok(())
    }
}

fn uniform_position(bounds: &Bounds, rng: &mut impl Rng) -> Vec<f64> {
    bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(&lo, &hi)| rng.random_range(lo..=hi))
        .collect()
}

#[derive(Clone, Debug)]
struct Candidate {
    position: Vec<f64>,
    fitness: f64,
}

fn tournament(pop: &[Candidate], size: usize, rng: &mut impl Rng) -> usize {
    index::sample(rng, pop.len(), size)
        .into_iter()
        .min_by(|&a, &b| pop[a].fitness.total_cmp(&pop[b].fitness))
        .expect("tournament needs at least one contestant")
}

/// Generational genetic algorithm: uniform-random init, tournament parents,
/// single-point crossover at the configured rate, single-gene uniform
/// mutation, and elitist survival.
pub fn run_ga(obj: &ObjectiveSpec, cfg: &GaConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let bounds = obj.bounds();
    let dim = bounds.dimension();
    let mut init_rng = RngStream::new(cfg.seed, STREAM_INIT).rng();
    let mut rng = RngStream::new(cfg.seed, STREAM_LOOP).rng();

    obj.set_iteration(0);
    let mut pop = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let position = uniform_position(bounds, &mut init_rng);
        let fitness = obj.evaluate(&position).map_err(|e| e.at_iteration(0))?;
        pop.push(Candidate { position, fitness });
    }
    let mut evaluations = pop.len();
    let mut best = BestTracker::new();
    for c in &pop {
        best.observe(&c.position, c.fitness);
    }
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(best.value());

    for iteration in 1..=cfg.iterations {
        obj.set_iteration(iteration as u64);
        pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        let mut next: Vec<Candidate> = pop[..cfg.elitism_count].to_vec();
        while next.len() < cfg.population_size {
            let p1 = &pop[tournament(&pop, cfg.tournament_size, &mut rng)];
            let p2 = &pop[tournament(&pop, cfg.tournament_size, &mut rng)];
            let (mut c1, mut c2) = if dim >= 2 && rng.random::<f64>() < cfg.crossover_rate {
                let split = rng.random_range(1..dim);
                single_point_crossover(&p1.position, &p2.position, split)
            } else {
                (p1.position.clone(), p2.position.clone())
            };
            for child in [&mut c1, &mut c2] {
                if rng.random::<f64>() < cfg.mutation_rate {
                    let gene = rng.random_range(0..dim);
                    child[gene] = rng.random_range(bounds.lower()[gene]..=bounds.upper()[gene]);
                }
                clamp_in_place(child, bounds);
            }
            for position in [c1, c2] {
                if next.len() >= cfg.population_size {
                    break;
                }
                let fitness = obj
                    .evaluate(&position)
                    .map_err(|e| e.at_iteration(iteration))?;
                evaluations += 1;
                best.observe(&position, fitness);
                next.push(Candidate { position, fitness });
            }
        }
        pop = next;
        trace.push(best.value());
    }

    Ok(RunRecord {
        trace,
        best_position: best.position().to_vec(),
        best_value: best.value(),
        evaluations,
    })
}

/// One velocity update: inertia carry-over plus cognitive and social pulls
/// with per-dimension random intensities, clamped symmetrically.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity(
    velocity: &mut [f64],
    position: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    r1: &[f64],
    r2: &[f64],
    cfg: &PsoConfig,
    bounds: &Bounds,
) {
    for d in 0..velocity.len() {
        let cap = cfg.velocity_clamp * bounds.range(d);
        let v = cfg.inertia * velocity[d]
            + cfg.cognitive * r1[d] * (personal_best[d] - position[d])
            + cfg.social * r2[d] * (global_best[d] - position[d]);
        velocity[d] = v.clamp(-cap, cap);
    }
}

/// Global-best particle swarm: uniform-random init, zero initial velocity,
/// and a global best updated as soon as any particle improves on it.
pub fn run_pso(obj: &ObjectiveSpec, cfg: &PsoConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let bounds = obj.bounds();
    let dim = bounds.dimension();
    let mut init_rng = RngStream::new(cfg.seed, STREAM_INIT).rng();
    let mut rng = RngStream::new(cfg.seed, STREAM_LOOP).rng();

    obj.set_iteration(0);
    let mut positions = Vec::with_capacity(cfg.population_size);
    let mut velocities = vec![vec![0.0; dim]; cfg.population_size];
    let mut personal_best = Vec::with_capacity(cfg.population_size);
    let mut personal_value = Vec::with_capacity(cfg.population_size);
    let mut best = BestTracker::new();
    for _ in 0..cfg.population_size {
        let position = uniform_position(bounds, &mut init_rng);
        let fitness = obj.evaluate(&position).map_err(|e| e.at_iteration(0))?;
        best.observe(&position, fitness);
        personal_best.push(position.clone());
        personal_value.push(fitness);
        positions.push(position);
    }
    let mut evaluations = positions.len();
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(best.value());

    for iteration in 1..=cfg.iterations {
        obj.set_iteration(iteration as u64);
        for i in 0..positions.len() {
            let r1: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r2: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let global = best.position().to_vec();
            pso_velocity(
                &mut velocities[i],
                &positions[i],
                &personal_best[i],
                &global,
                &r1,
                &r2,
                cfg,
                bounds,
            );
            for d in 0..dim {
                positions[i][d] += velocities[i][d];
            }
            clamp_in_place(&mut positions[i], bounds);
            let fitness = obj
                .evaluate(&positions[i])
                .map_err(|e| e.at_iteration(iteration))?;
            evaluations += 1;
            if fitness < personal_value[i] {
                personal_value[i] = fitness;
                personal_best[i] = positions[i].clone();
            }
            best.observe(&positions[i], fitness);
        }
        trace.push(best.value());
    }

    Ok(RunRecord {
        trace,
        best_position: best.position().to_vec(),
        best_value: best.value(),
        evaluations,
    })
}
