//! The multi-population optimizer.
//!
//! Each iteration, the best-ranked individuals form a council of governors.
//! Citizens pick a governor by gravitational roulette (mass from
//! inverse-normalized performance, attraction falling with squared distance),
//! then step toward their governor with a length scaled by the
//! sub-population's improvement ratio and positional variance. Governors take
//! conditional self-moves that are only accepted when they do not worsen
//! performance. Citizens then vote on their governor — weight grows with
//! closeness and performance affinity — and a linear regression of council
//! performance on vote-weighted improvement shifts each governor's effective
//! rank, so leaders of underperforming sub-populations slide down the next
//! election. A round of tournament crossover and single-gene mutation
//! replaces the worst citizens each iteration, with the council exempt.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::core::{
    evaluate_individual, evaluate_population, improvement_margin, separate, within_ball,
    BestTracker, Bounds, Individual, ObjectiveSpec, RngStream, RunRecord, EVICTION_BALL_FRACTION,
};
pub use crate::core::{governor_count, initial_governor_step};
use crate::error::{Error, Result};
use crate::sampling::{clamp_in_place, lhs_sample, LhsPlan};

/// Stream ids hung off the run seed, one per purpose.
const STREAM_INIT: u64 = 0;
const STREAM_LOOP: u64 = 1;

/// Consecutive iterations a sitting leadership may go without the search
/// finding meaningfully better ground before it is deposed, its seat barred
/// from future elections, and its following scattered. Once a first seat has
/// fallen, later leaderships get the shorter patience: a search that already
/// needed one restart is far more likely stuck than slowly maturing.
const STALL_PATIENCE: usize = 20;
const STALL_PATIENCE_ESCALATED: usize = 10;

/// Stall bookkeeping for one watched seat of power.
struct Watch {
    seat: Vec<f64>,
    stalls: usize,
}

/// Tunable parameters with the reference defaults.
#[derive(Clone, Debug, Serialize)]
pub struct EpistocracyConfig {
    pub population_size: usize,
    pub iterations: usize,
    /// Fraction of the population elected to the council (never fewer than
    /// two governors).
    pub governor_fraction: f64,
    /// Gravitational constant in the assignment force.
    pub gravity: f64,
    /// Damping factor on citizen step lengths.
    pub phi: f64,
    /// Fraction of each axis range used as the initial governor step.
    pub space_resolution: f64,
    /// Offspring per iteration as a fraction of the population.
    pub crossover_rate: f64,
    /// Probability that an offspring has one gene re-drawn uniformly.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    /// Floor for denominators, ratios, and degenerate weights.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for EpistocracyConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            iterations: 100,
            governor_fraction: 0.05,
            gravity: 1.0,
            phi: 0.1,
            space_resolution: 0.001,
            crossover_rate: 0.5,
            mutation_rate: 0.2,
            tournament_size: 5,
            epsilon: 1e-9,
            seed: 0,
        }
    }
}

impl EpistocracyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config(
                "population must have at least 2 members to elect a council",
            ));
        }
        if !(self.governor_fraction > 0.0 && self.governor_fraction < 1.0) {
            return Err(Error::config(format!(
                "governor fraction must lie in (0, 1), got {}",
                self.governor_fraction
            )));
        }
        for (name, value) in [
            ("gravity", self.gravity),
            ("phi", self.phi),
            ("space_resolution", self.space_resolution),
            ("epsilon", self.epsilon),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
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
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::config(format!(
                "tournament size must lie in 1..={}, got {}",
                self.population_size, self.tournament_size
            )));
        }
        Ok(())
    }
}

/// A governor together with the citizens currently assigned to it.
#[derive(Clone, Debug)]
pub struct Government {
    pub governor: Individual,
    pub citizens: Vec<Individual>,
}

/// Inverse min-max normalization of a performance against the council's
/// spread: the council's best maps to `1/eps`, its worst to roughly 1, and
/// anything trailing the council falls below 1. A flat council degenerates to
/// `1/eps` for every input.
pub fn normalize_performance(perf: f64, council_perfs: &[f64], eps: f64) -> f64 {
    debug_assert!(!council_perfs.is_empty());
    let min = council_perfs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = council_perfs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= 0.0 {
        return 1.0 / eps;
    }
    1.0 / ((perf - min) / (max - min) + eps)
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Newtonian attraction with a floored squared distance, so coincident points
/// feel a large but finite pull.
pub fn gravitational_force(mass_gov: f64, mass_cit: f64, distance: f64, gravity: f64, eps: f64) -> f64 {
    gravity * mass_gov * mass_cit / (distance * distance).max(eps)
}

/// Roulette probabilities proportional to force. Degenerate inputs (all zero
/// or non-finite total) fall back to the uniform distribution.
pub fn selection_probabilities(forces: &[f64]) -> Vec<f64> {
    let total: f64 = forces.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return vec![1.0 / forces.len() as f64; forces.len()];
    }
    forces.iter().map(|f| f / total).collect()
}

/// Roulette pick: index `j` wins with probability `forces[j] / sum`.
pub fn roulette_pick(forces: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = forces.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return rng.random_range(0..forces.len());
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (j, f) in forces.iter().enumerate() {
        acc += f;
        if acc >= target {
            return j;
        }
    }
    forces.len() - 1
}

/// Improvement bookkeeping for one sub-population (raw values; callers floor
/// the aggregates before using them in ratios).
#[derive(Clone, Debug)]
pub struct Improvements {
    pub per_citizen: Vec<f64>,
    pub average: f64,
    pub minimum: f64,
}

/// Per-citizen improvements with their mean and minimum. An empty
/// sub-population yields `eps` for both aggregates so downstream ratios stay
/// defined.
pub fn compute_improvements(citizens: &[Individual], eps: f64) -> Improvements {
    if citizens.is_empty() {
        return Improvements { per_citizen: Vec::new(), average: eps, minimum: eps };
    }
    let per_citizen: Vec<f64> = citizens.iter().map(Individual::improvement).collect();
    let average = per_citizen.iter().sum::<f64>() / per_citizen.len() as f64;
    let minimum = per_citizen.iter().copied().fold(f64::INFINITY, f64::min);
    Improvements { per_citizen, average, minimum }
}

/// Per-dimension population variance (divisor `n`) of a set of positions.
pub fn position_variance(positions: &[&[f64]]) -> Vec<f64> {
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    let dim = positions[0].len();
    let mut mean = vec![0.0; dim];
    for p in positions {
        for (m, v) in mean.iter_mut().zip(*p) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut variance = vec![0.0; dim];
    for p in positions {
        for (d, v) in p.iter().enumerate() {
            let diff = v - mean[d];
            variance[d] += diff * diff;
        }
    }
    for v in &mut variance {
        *v /= n as f64;
    }
    variance
}

/// Scalar diversity measure: mean of the per-dimension variances.
pub fn scalar_variance(positions: &[&[f64]]) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let per_dim = position_variance(positions);
    per_dim.iter().sum::<f64>() / per_dim.len() as f64
}

/// Move a citizen toward its governor. The step length is
/// `(i_avg / i_min) * variance * distance * phi`, capped at the distance so
/// the citizen never overshoots; a capped step lands exactly on the governor
/// (which the duplicate rule then perturbs). `i_avg` and `i_min` must already
/// be floored positive. A collapsed sub-population (zero variance) or a
/// citizen already on its governor does not move.
pub fn citizen_step(
    position: &mut [f64],
    governor_position: &[f64],
    i_avg: f64,
    i_min: f64,
    variance: f64,
    phi: f64,
    bounds: &Bounds,
) {
    let distance = euclidean_distance(position, governor_position);
    if distance == 0.0 {
        return;
    }
    let step = i_avg / i_min * variance * distance * phi;
    if step >= distance {
        position.copy_from_slice(governor_position);
        return;
    }
    let scale = step / distance;
    for (p, g) in position.iter_mut().zip(governor_position) {
        *p += scale * (g - *p);
    }
    clamp_in_place(position, bounds);
}

/// Replace one uniformly chosen gene with a uniform draw from its interval.
/// Also serves as the genetic mutation operator.
pub fn mutate(position: &mut [f64], bounds: &Bounds, rng: &mut impl Rng) {
    let gene = rng.random_range(0..position.len());
    position[gene] = rng.random_range(bounds.lower()[gene]..=bounds.upper()[gene]);
}

/// Make every citizen of a sub-population distinct again after the step
/// phase. A citizen that landed exactly on its governor (a capped step) is
/// nudged by up to one resolution cell in every gene, so the sub-population
/// keeps sampling the seat's immediate neighborhood at the finest
/// distinguishable scale instead of duplicating the seat. A citizen
/// colliding with an earlier citizen gets one gene redrawn across its whole
/// interval — a diversity teleport. Either way the citizen starts a fresh
/// performance history: neither displacement is a move it earned, so letting
/// it into the improvement statistics would drown the sub-population's real
/// progress signal in noise.
pub fn resolve_duplicates(
    governor_position: &[f64],
    citizens: &mut [Individual],
    bounds: &Bounds,
    space_resolution: f64,
    rng: &mut impl Rng,
) {
    for i in 0..citizens.len() {
        if citizens[i].position == governor_position {
            for (gene, x) in citizens[i].position.iter_mut().enumerate() {
                let cell = bounds.range(gene) * space_resolution;
                *x += rng.random_range(-cell..=cell);
            }
            clamp_in_place(&mut citizens[i].position, bounds);
            citizens[i].reset_history();
        } else if (0..i).any(|j| citizens[j].position == citizens[i].position) {
            mutate(&mut citizens[i].position, bounds, rng);
            citizens[i].reset_history();
        }
    }
}

/// Outcome of a governor's conditional self-move attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GovernorMove {
    /// The trial did not worsen performance: the governor moved and the
    /// scaled step became the new memory.
    Accepted,
    /// The trial evaluated worse: the governor stayed and the memory's signs
    /// flipped for the next attempt.
    Rejected,
    /// The scaled step left the governor exactly where it was (severe
    /// underflow, or a clamp straight back onto the boundary): nothing was
    /// evaluated, the signs flipped, the memory's magnitude survives.
    Stalled,
}

/// Candidate self-move for a governor: the remembered step scaled by
/// `(i_avg / i_j) * council_variance`, clamped to the box. The trial is
/// evaluated and accepted only when it does not worsen performance; on
/// acceptance the scaled step becomes the new memory, otherwise the governor
/// stays and the memory's signs flip for the next attempt. A trial that
/// fails to move the governor at all is not evaluated — treating such a
/// no-op as an accepted move would overwrite the step memory with a
/// vanishing vector and permanently freeze the governor. Performance
/// bookkeeping is left to the caller's next population evaluation.
pub fn governor_step(
    governor: &mut Individual,
    i_avg: f64,
    i_j: f64,
    council_variance: f64,
    bounds: &Bounds,
    obj: &ObjectiveSpec,
) -> Result<GovernorMove> {
    let prev = governor
        .prev_step
        .as_mut()
        .expect("governors always carry step memory");
    let factor = i_avg / i_j * council_variance;
    let delta: Vec<f64> = prev.iter().map(|s| s * factor).collect();
    let mut trial: Vec<f64> = governor
        .position
        .iter()
        .zip(&delta)
        .map(|(p, d)| p + d)
        .collect();
    clamp_in_place(&mut trial, bounds);
    if trial == governor.position {
        for s in prev.iter_mut() {
            *s = -*s;
        }
        return Ok(GovernorMove::Stalled);
    }
    let trial_perf = obj.evaluate(&trial)?;
    if trial_perf - governor.actual_perf <= 0.0 {
        governor.position = trial;
        *prev = delta;
        Ok(GovernorMove::Accepted)
    } else {
        for s in prev.iter_mut() {
            *s = -*s;
        }
        Ok(GovernorMove::Rejected)
    }
}

/// Voting weight of a citizen: closeness factor `-log10(d / total_d)` times
/// performance affinity `|p_cit| / (|p_gov - p_cit| + eps)`, floored at
/// `eps`. Distances are floored at `eps` before the ratio.
pub fn vote_weight(distance: f64, total_distance: f64, p_cit: f64, p_gov: f64, eps: f64) -> f64 {
    let d = distance.max(eps);
    let total = total_distance.max(eps);
    let closeness = -(d / total).log10();
    let affinity = p_cit.abs() / ((p_gov - p_cit).abs() + eps);
    (closeness * affinity).max(eps)
}

/// Weighted mean improvement; defined as 0 when there are no voters.
pub fn weighted_avg_improvement(improvements: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(improvements.len(), weights.len());
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    improvements
        .iter()
        .zip(weights)
        .map(|(i, w)| i * w)
        .sum::<f64>()
        / total
}

/// Ordinary least squares `y = b0 + b1 x`, returned as `(b0, b1)`; `None`
/// when there are fewer than two points or all abscissae coincide.
pub fn fit_regression(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let b1 = sxy / sxx;
    Some((mean_y - b1 * mean_x, b1))
}

/// Leadership adjustment: the actual performance shifted by
/// `eta * (actual - predicted)`, where `eta` is the council-share-weighted
/// size of the governed sub-population. Degenerate censuses (no citizens at
/// all) leave the performance untouched.
pub fn adjust_performance(
    actual: f64,
    predicted: f64,
    subpop_size: usize,
    total_citizens: usize,
    council_size: usize,
) -> f64 {
    if total_citizens == 0 || council_size == 0 {
        return actual;
    }
    let eta = (1.0 / council_size as f64) * (subpop_size as f64 / total_citizens as f64);
    actual + eta * (actual - predicted)
}

/// Best index out of `tournament_size` distinct members sampled uniformly.
pub fn tournament_select(pop: &[Individual], tournament_size: usize, rng: &mut impl Rng) -> usize {
    index::sample(rng, pop.len(), tournament_size)
        .into_iter()
        .min_by(|&a, &b| pop[a].actual_perf.total_cmp(&pop[b].actual_perf))
        .expect("tournament needs at least one contestant")
}

/// Swap the tails of two parents at gene boundary `split` (in `1..dim`).
pub fn single_point_crossover(a: &[f64], b: &[f64], split: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(split >= 1 && split < a.len());
    let mut c1 = a[..split].to_vec();
    c1.extend_from_slice(&b[split..]);
    let mut c2 = b[..split].to_vec();
    c2.extend_from_slice(&a[split..]);
    (c1, c2)
}

/// Produce `round(crossover_rate * pop_size)` offspring positions via
/// tournament-selected parents and single-point crossover, generated in
/// pairs. A one-dimensional space has no valid split, so offspring are
/// parent clones there.
pub fn crossover(
    pop: &[Individual],
    crossover_rate: f64,
    tournament_size: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    let wanted = (crossover_rate * pop.len() as f64).round() as usize;
    let dim = pop.first().map_or(0, |ind| ind.position.len());
    let mut offspring = Vec::with_capacity(wanted);
    while offspring.len() < wanted {
        let p1 = &pop[tournament_select(pop, tournament_size, rng)].position;
        let p2 = &pop[tournament_select(pop, tournament_size, rng)].position;
        let (c1, c2) = if dim >= 2 {
            let split = rng.random_range(1..dim);
            single_point_crossover(p1, p2, split)
        } else {
            (p1.clone(), p2.clone())
        };
        offspring.push(c1);
        if offspring.len() < wanted {
            offspring.push(c2);
        }
    }
    offspring
}

/// Run the optimizer and report the best-so-far trace, one entry after
/// initialization plus one per iteration.
pub fn run_epistocracy(obj: &ObjectiveSpec, cfg: &EpistocracyConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let bounds = obj.bounds();
    let mut init_rng = RngStream::new(cfg.seed, STREAM_INIT).rng();
    let mut rng = RngStream::new(cfg.seed, STREAM_LOOP).rng();

    obj.set_iteration(0);
    let plan = LhsPlan::new(cfg.population_size, bounds.clone())?;
    let mut next_id = 0u64;
    let mut fresh_id = || {
        let id = next_id;
        next_id += 1;
        id
    };
    let mut pop: Vec<Individual> = lhs_sample(&plan, &mut init_rng)
        .into_iter()
        .map(|position| Individual::new(fresh_id(), position))
        .collect();
    evaluate_population(&mut pop, obj).map_err(|e| e.at_iteration(0))?;
    let mut evaluations = pop.len();
    let mut best = BestTracker::new();
    for ind in &pop {
        best.observe(&ind.position, ind.actual_perf);
    }
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(best.value());

    // Seats vacated by a vote of no confidence stay barred for the rest of
    // the run; each watch tracks how long the search has gone without
    // improving while the matching seat held power. Watches persist while
    // unseated so that two seats trading power cannot launder their stalls.
    let mut deposed_seats: Vec<Vec<f64>> = Vec::new();
    let mut watches: Vec<Watch> = Vec::new();

    for iteration in 1..=cfg.iterations {
        obj.set_iteration(iteration as u64);

        // Election: rank by adjusted performance (citizens carry their raw
        // value), so a governor penalized by last iteration's regression can
        // lose its seat.
        pop.sort_by(|a, b| a.adjusted_perf.total_cmp(&b.adjusted_perf));
        let separation = separate(
            std::mem::take(&mut pop),
            cfg.governor_fraction,
            bounds,
            cfg.space_resolution,
            &deposed_seats,
            &mut rng,
        )?;

        // Gravitational roulette assigns every citizen to a governor.
        let mut governments =
            assign_governors(separation.citizens, separation.governors, cfg, &mut rng);

        // Citizen steps, then duplicate resolution within each sub-population.
        let mut council_i_avg = Vec::with_capacity(governments.len());
        for Government { governor, citizens } in &mut governments {
            let improvements = compute_improvements(citizens, cfg.epsilon);
            let i_avg = improvements.average.max(cfg.epsilon);
            let i_min = improvements.minimum.max(cfg.epsilon);
            council_i_avg.push(i_avg);
            let variance = {
                let positions: Vec<&[f64]> =
                    citizens.iter().map(|c| c.position.as_slice()).collect();
                scalar_variance(&positions)
            };
            for citizen in citizens.iter_mut() {
                citizen_step(
                    &mut citizen.position,
                    &governor.position,
                    i_avg,
                    i_min,
                    variance,
                    cfg.phi,
                    bounds,
                );
            }
            resolve_duplicates(&governor.position, citizens, bounds, &mut rng);
        }

        // Conditional governor self-moves, scaled by council diversity.
        let council_variance = {
            let positions: Vec<&[f64]> = governments
                .iter()
                .map(|g| g.governor.position.as_slice())
                .collect();
            scalar_variance(&positions)
        };
        let mut accepted_moves = 0usize;
        for (government, &i_avg) in governments.iter_mut().zip(&council_i_avg) {
            let i_j = government.governor.improvement().max(cfg.epsilon);
            let outcome = governor_step(
                &mut government.governor,
                i_avg,
                i_j,
                council_variance,
                bounds,
                obj,
            )
            .map_err(|e| e.at_iteration(iteration))?;
            if outcome != GovernorMove::Stalled {
                evaluations += 1;
            }
            accepted_moves += (outcome == GovernorMove::Accepted) as usize;
        }
        if std::env::var_os("EPI_DEBUG").is_some() && iteration % 5 == 0 {
            let step_scale: f64 = governments
                .iter()
                .flat_map(|g| g.governor.prev_step.as_deref().unwrap())
                .map(|s| s.abs())
                .sum::<f64>()
                / (governments.len() * bounds.dimension()) as f64;
            eprintln!(
                "iter {iteration:3} best {:.3e} council_var {:.3e} step {:.3e} accepts {accepted_moves} i_avg {:?}",
                best.value(),
                council_variance,
                step_scale,
                council_i_avg.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>(),
            );
            for g in &governments {
                eprintln!(
                    "    gov perf {:+.6e} cits {:3} pos {:?}",
                    g.governor.actual_perf,
                    g.citizens.len(),
                    g.governor
                        .position
                        .iter()
                        .map(|v| format!("{v:+.9e}"))
                        .collect::<Vec<_>>(),
                );
            }
        }

        // Evaluate the moved population.
        for Government { governor, citizens } in &mut governments {
            evaluate_individual(governor, obj).map_err(|e| e.at_iteration(iteration))?;
            evaluations += 1;
            best.observe(&governor.position, governor.actual_perf);
            for citizen in citizens.iter_mut() {
                evaluate_individual(citizen, obj).map_err(|e| e.at_iteration(iteration))?;
                evaluations += 1;
                best.observe(&citizen.position, citizen.actual_perf);
            }
        }

        // The seat of power this iteration: the governor leading the largest
        // governed sub-population.
        let incumbent: Option<(u64, Vec<f64>)> = governments
            .iter()
            .max_by_key(|g| g.citizens.len())
            .filter(|g| !g.citizens.is_empty())
            .map(|g| (g.governor.id, g.governor.position.clone()));

        // Voting and regression: council performance explained by
        // vote-weighted improvement; the residual shifts each governor's
        // effective rank in proportion to its share of the governed.
        let points: Vec<(f64, f64)> = governments
            .iter()
            .map(|Government { governor, citizens }| {
                let distances: Vec<f64> = citizens
                    .iter()
                    .map(|c| euclidean_distance(&c.position, &governor.position))
                    .collect();
                let total_distance: f64 = distances.iter().sum();
                let weights: Vec<f64> = citizens
                    .iter()
                    .zip(&distances)
                    .map(|(c, &d)| {
                        vote_weight(d, total_distance, c.actual_perf, governor.actual_perf, cfg.epsilon)
                    })
                    .collect();
                let improvements: Vec<f64> =
                    citizens.iter().map(Individual::improvement).collect();
                (
                    weighted_avg_improvement(&improvements, &weights),
                    governor.actual_perf,
                )
            })
            .collect();
        let fit = fit_regression(&points);
        let total_citizens: usize = governments.iter().map(|g| g.citizens.len()).sum();
        let council_size = governments.len();
        for (government, &(x, _)) in governments.iter_mut().zip(&points) {
            let actual = government.governor.actual_perf;
            let predicted = match fit {
                Some((b0, b1)) => b0 + b1 * x,
                None => actual,
            };
            government.governor.adjusted_perf = adjust_performance(
                actual,
                predicted,
                government.citizens.len(),
                total_citizens,
                council_size,
            );
        }

        // Genetic churn: offspring from the whole population replace the
        // worst citizens; the council is exempt.
        let mut citizens = Vec::with_capacity(cfg.population_size - council_size);
        pop = Vec::with_capacity(cfg.population_size);
        for Government { governor, citizens: c } in governments {
            pop.push(governor);
            citizens.extend(c);
        }
        pop.append(&mut citizens);
        let mut offspring = crossover(&pop, cfg.crossover_rate, cfg.tournament_size, &mut rng);
        offspring.truncate(cfg.population_size - council_size);
        let mut newborns = Vec::with_capacity(offspring.len());
        for mut position in offspring {
            if rng.random::<f64>() < cfg.mutation_rate {
                mutate(&mut position, bounds, &mut rng);
                clamp_in_place(&mut position, bounds);
            }
            let mut child = Individual::new(fresh_id(), position);
            evaluate_individual(&mut child, obj).map_err(|e| e.at_iteration(iteration))?;
            evaluations += 1;
            best.observe(&child.position, child.actual_perf);
            newborns.push(child);
        }
        let mut worst: Vec<usize> = (council_size..pop.len()).collect();
        worst.sort_by(|&a, &b| pop[b].actual_perf.total_cmp(&pop[a].actual_perf));
        for (slot, newborn) in worst.into_iter().zip(newborns) {
            pop[slot] = newborn;
        }

        trace.push(best.value());

        // Vote of no confidence: when the whole search stops finding better
        // ground under one sitting leadership for long enough, that seat has
        // exhausted what its neighborhood can teach, no matter how good its
        // result was. The seat is vacated and barred so the next election
        // must anchor the search somewhere genuinely new; the best-so-far
        // trace keeps whatever the deposed leadership found.
        let margin = improvement_margin(trace[iteration - 1]);
        let improved = trace[iteration] < trace[iteration - 1] - margin;
        if let Some((leader_id, anchor)) = incumbent {
            let patience = if deposed_seats.is_empty() {
                STALL_PATIENCE
            } else {
                STALL_PATIENCE_ESCALATED
            };
            let seated = watches
                .iter()
                .position(|w| within_ball(&w.seat, &anchor, bounds, EVICTION_BALL_FRACTION));
            match seated {
                Some(i) if improved => {
                    watches[i].seat.clone_from(&anchor);
                    watches[i].stalls = 0;
                }
                Some(i) => {
                    watches[i].stalls += 1;
                    if watches[i].stalls >= patience {
                        if std::env::var_os("EPI_DEBUG").is_some() {
                            eprintln!(
                                "iter {iteration:3} deposed {:?} best {:+.6e}",
                                watches[i].seat.iter().map(|v| format!("{v:+.3e}")).collect::<Vec<_>>(),
                                best.value(),
                            );
                        }
                        let seat = watches.swap_remove(i).seat;
                        evaluations += exile_following(
                            &mut pop, leader_id, &seat, bounds, obj, &mut best, &mut rng,
                        )
                        .map_err(|e| e.at_iteration(iteration))?;
                        deposed_seats.push(seat);
                    }
                }
                None => watches.push(Watch {
                    seat: anchor,
                    stalls: usize::from(!improved),
                }),
            }
        }
    }

    Ok(RunRecord {
        trace,
        best_position: best.position().to_vec(),
        best_value: best.value(),
        evaluations,
    })
}

/// Scatter a deposed leadership's following. The governor, everyone assigned
/// to it, and anyone still standing inside the barred ball restart from fresh
/// uniform positions with clean history. The banked result stays in the
/// best-so-far trace; what must not stay is the resident mass that would
/// otherwise keep re-electing the same neighborhood from just outside the
/// barred ball. Returns the number of objective evaluations spent.
fn exile_following(
    pop: &mut [Individual],
    leader_id: u64,
    seat: &[f64],
    bounds: &Bounds,
    obj: &ObjectiveSpec,
    best: &mut BestTracker,
    rng: &mut impl Rng,
) -> Result<usize> {
    let mut evaluations = 0;
    for ind in pop.iter_mut() {
        let follower = ind.id == leader_id
            || ind.governor_id == Some(leader_id)
            || within_ball(&ind.position, seat, bounds, EVICTION_BALL_FRACTION);
        if follower {
            for (dim, x) in ind.position.iter_mut().enumerate() {
                *x = rng.random_range(bounds.lower()[dim]..=bounds.upper()[dim]);
            }
            ind.reset_history();
            evaluate_individual(ind, obj)?;
            evaluations += 1;
            best.observe(&ind.position, ind.actual_perf);
        }
    }
    Ok(evaluations)
}

/// Distribute citizens among governors by gravitational roulette: mass comes
/// from inverse-normalized adjusted performance against the council's spread,
/// attraction from the product of masses over squared distance.
pub fn assign_governors(
    citizens: Vec<Individual>,
    governors: Vec<Individual>,
    cfg: &EpistocracyConfig,
    rng: &mut impl Rng,
) -> Vec<Government> {
    let council_perfs: Vec<f64> = governors.iter().map(|g| g.adjusted_perf).collect();
    let council_masses: Vec<f64> = council_perfs
        .iter()
        .map(|&p| normalize_performance(p, &council_perfs, cfg.epsilon))
        .collect();
    let mut governments: Vec<Government> = governors
        .into_iter()
        .map(|governor| Government { governor, citizens: Vec::new() })
        .collect();
    for mut citizen in citizens {
        let citizen_mass = normalize_performance(citizen.adjusted_perf, &council_perfs, cfg.epsilon);
        let forces: Vec<f64> = governments
            .iter()
            .zip(&council_masses)
            .map(|(government, &mass)| {
                let distance =
                    euclidean_distance(&citizen.position, &government.governor.position);
                gravitational_force(mass, citizen_mass, distance, cfg.gravity, cfg.epsilon)
            })
            .collect();
        let pick = roulette_pick(&forces, rng);
        citizen.governor_id = Some(governments[pick].governor.id);
        governments[pick].citizens.push(citizen);
    }
    governments
}
