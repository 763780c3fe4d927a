//! Shared optimizer substrate: search-space bounds, objective wrappers,
//! population bookkeeping, ranking/separation, and reproducible RNG streams.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Axis-aligned box constraints: one `[lower, upper]` interval per dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::config(format!(
                "bounds need one (lower, upper) pair per dimension, got {} lower / {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::config(format!(
                    "dimension {d}: invalid interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[-half, half]` along every one of `dimension` axes.
    pub fn symmetric(half: f64, dimension: usize) -> Result<Self> {
        Self::new(vec![-half; dimension], vec![half; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Interval width along dimension `d`.
    pub fn range(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .enumerate()
                .all(|(d, v)| *v >= self.lower[d] && *v <= self.upper[d])
    }
}

/// Objective function plus its search box.
///
/// Optimization is always minimization; express a maximization problem by
/// negating inside the closure. Evaluators receive the current iteration
/// number (0 during initialization) so that stateful ones — external
/// processes, loggers — can report progress; pure functions just ignore it.
#[derive(Clone)]
pub struct ObjectiveSpec {
    bounds: Bounds,
    evaluator: Arc<dyn Fn(&[f64], u64) -> Result<f64> + Send + Sync>,
    iteration: Arc<AtomicU64>,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("bounds", &self.bounds)
            .field("iteration", &self.current_iteration())
            .finish_non_exhaustive()
    }
}

impl ObjectiveSpec {
    /// Wrap a pure objective function.
    pub fn new(bounds: Bounds, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::stateful(bounds, move |x, _| Ok(f(x)))
    }

    /// Wrap an evaluator that can fail (table lookups, subprocess queries).
    pub fn fallible(
        bounds: Bounds,
        f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::stateful(bounds, move |x, _| f(x))
    }

    /// Wrap an evaluator that also wants the current iteration number.
    pub fn stateful(
        bounds: Bounds,
        f: impl Fn(&[f64], u64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            bounds,
            evaluator: Arc::new(f),
            iteration: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dimension()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Evaluate at `x`, rejecting non-finite results.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let value = (self.evaluator)(x, self.current_iteration())?;
        if !value.is_finite() {
            return Err(Error::NonFinite { value, position: x.to_vec() });
        }
        Ok(value)
    }

    /// Called by optimizer loops at the start of each iteration.
    pub fn set_iteration(&self, iteration: u64) {
        self.iteration.store(iteration, Ordering::Relaxed);
    }

    pub fn current_iteration(&self) -> u64 {
        self.iteration.load(Ordering::Relaxed)
    }
}

/// Named, reproducible random stream: the same `(seed, stream)` pair yields
/// the same sequence on every platform. Optimizer runs draw their streams
/// from the run seed, one stream id per purpose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Role {
    Governor,
    Citizen,
}

/// One member of the population.
#[derive(Clone, Debug, Serialize)]
pub struct Individual {
    pub id: u64,
    pub position: Vec<f64>,
    /// Objective value at the current position.
    pub actual_perf: f64,
    /// Objective value from before the most recent evaluation.
    pub prev_perf: f64,
    /// Performance after leadership adjustment; equals `actual_perf` for
    /// citizens and for governors that have not been adjusted yet.
    pub adjusted_perf: f64,
    pub role: Role,
    /// Id of the governor this citizen currently follows.
    pub governor_id: Option<u64>,
    /// Governor step memory; `None` for citizens.
    pub prev_step: Option<Vec<f64>>,
}

impl Individual {
    /// A not-yet-evaluated citizen at `position`.
    pub fn new(id: u64, position: Vec<f64>) -> Self {
        Self {
            id,
            position,
            actual_perf: f64::INFINITY,
            prev_perf: f64::INFINITY,
            adjusted_perf: f64::INFINITY,
            role: Role::Citizen,
            governor_id: None,
            prev_step: None,
        }
    }

    /// Whether this individual has ever been evaluated. Successful
    /// evaluations are always finite, so infinity doubles as "fresh".
    pub fn is_evaluated(&self) -> bool {
        self.actual_perf.is_finite()
    }

    /// Improvement achieved by the most recent move (positive = got better
    /// under minimization).
    pub fn improvement(&self) -> f64 {
        self.prev_perf - self.actual_perf
    }

    /// Forget this individual's performance history: the next evaluation
    /// re-baselines `prev_perf` instead of reporting a jump the individual
    /// never walked. Used when diversity maintenance teleports a member, so
    /// improvement statistics keep measuring earned trajectories.
    pub fn reset_history(&mut self) {
        self.actual_perf = f64::INFINITY;
        self.prev_perf = f64::INFINITY;
        self.adjusted_perf = f64::INFINITY;
    }
}

/// Evaluate one individual in place. `prev_perf` keeps the value from before
/// the move; a first evaluation has no history, so it equals the fresh value.
/// `adjusted_perf` tracks the raw value until a leadership adjustment
/// overwrites it later in the same iteration.
pub fn evaluate_individual(ind: &mut Individual, obj: &ObjectiveSpec) -> Result<()> {
    let value = obj.evaluate(&ind.position)?;
    ind.prev_perf = if ind.is_evaluated() { ind.actual_perf } else { value };
    ind.actual_perf = value;
    ind.adjusted_perf = value;
    Ok(())
}

pub fn evaluate_population(pop: &mut [Individual], obj: &ObjectiveSpec) -> Result<()> {
    pop.iter_mut().try_for_each(|ind| evaluate_individual(ind, obj))
}

/// Indices of `pop` sorted by ascending `actual_perf` (best first under
/// minimization); ties keep the lower index first.
pub fn rank(pop: &[Individual]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| pop[a].actual_perf.total_cmp(&pop[b].actual_perf));
    order
}

/// Council size for a population: the rounded fraction, but never fewer than
/// two members.
pub fn governor_count(pop_size: usize, governor_fraction: f64) -> usize {
    ((governor_fraction * pop_size as f64).round() as usize).max(2)
}

/// Fresh governor step memory: per-dimension magnitude
/// `range * space_resolution` with independently random signs.
pub fn initial_governor_step(
    bounds: &Bounds,
    space_resolution: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    (0..bounds.dimension())
        .map(|d| {
            let magnitude = bounds.range(d) * space_resolution;
            if rng.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect()
}

pub struct Separation {
    pub governors: Vec<Individual>,
    pub citizens: Vec<Individual>,
}

/// Fraction of each dimension's range that a deposed governor's last seat
/// blocks from future elections. The ball is much wider than the election
/// distinguishability radius so that it covers the stalled neighborhood, not
/// just the single point the governor sat on.
pub const EVICTION_BALL_FRACTION: f64 = 0.02;

/// True when every coordinate of `a` lies within `fraction` of that axis's
/// range from the matching coordinate of `b`.
pub(crate) fn within_ball(a: &[f64], b: &[f64], bounds: &Bounds, fraction: f64) -> bool {
    a.iter()
        .zip(b)
        .enumerate()
        .all(|(dim, (x, y))| (x - y).abs() < bounds.range(dim) * fraction)
}

/// Fraction of a value's magnitude a gain must exceed to count as reaching
/// meaningfully better ground rather than polishing ground already held.
pub(crate) const IMPROVEMENT_TOLERANCE: f64 = 1e-4;

/// Smallest absolute gain below `value` that counts as meaningful improvement.
pub(crate) fn improvement_margin(value: f64) -> f64 {
    IMPROVEMENT_TOLERANCE * (1.0 + value.abs())
}

/// Split a population (already ordered best-first) into a council of
/// governors and the remaining citizens. The council takes the best
/// individuals whose positions are pairwise distinguishable at the space's
/// resolution — near-copies of one point would collapse the council's
/// diversity and freeze its step scaling — and that do not sit inside the
/// eviction ball of a deposed seat, falling back to the plain ranking only
/// when the population has too few eligible points. Newly promoted governors
/// get fresh step memory; demoted ones drop theirs and revert to their raw
/// performance.
pub fn separate(
    ranked: Vec<Individual>,
    governor_fraction: f64,
    bounds: &Bounds,
    space_resolution: f64,
    deposed: &[Vec<f64>],
    rng: &mut impl Rng,
) -> Result<Separation> {
    if ranked.len() < 2 {
        return Err(Error::config(format!(
            "population of {} cannot elect a council (need at least 2 members)",
            ranked.len()
        )));
    }
    if !(governor_fraction > 0.0 && governor_fraction < 1.0) {
        return Err(Error::config(format!(
            "governor fraction must lie in (0, 1), got {governor_fraction}"
        )));
    }
    let count = governor_count(ranked.len(), governor_fraction).min(ranked.len());
    let mut governors: Vec<Individual> = Vec::with_capacity(count);
    let mut citizens: Vec<Individual> = Vec::with_capacity(ranked.len() - count);
    for ind in ranked {
        let ineligible = governors
            .iter()
            .any(|g| within_ball(&g.position, &ind.position, bounds, space_resolution))
            || deposed
                .iter()
                .any(|seat| within_ball(seat, &ind.position, bounds, EVICTION_BALL_FRACTION));
        if governors.len() < count && !ineligible {
            governors.push(ind);
        } else {
            citizens.push(ind);
        }
    }
    while governors.len() < count {
        // Not enough distinct positions; take the best leftovers anyway.
        governors.push(citizens.remove(0));
    }
    for gov in &mut governors {
        gov.role = Role::Governor;
        gov.governor_id = None;
        if gov.prev_step.is_none() {
            gov.prev_step = Some(initial_governor_step(bounds, space_resolution, rng));
        }
    }
    for cit in &mut citizens {
        if cit.role == Role::Governor {
            cit.adjusted_perf = cit.actual_perf;
        }
        cit.role = Role::Citizen;
        cit.governor_id = None;
        cit.prev_step = None;
    }
    Ok(Separation { governors, citizens })
}

/// Running best-so-far tracker (minimization).
#[derive(Clone, Debug, Default)]
pub struct BestTracker {
    position: Vec<f64>,
    value: f64,
}

impl BestTracker {
    pub fn new() -> Self {
        Self { position: Vec::new(), value: f64::INFINITY }
    }

    pub fn observe(&mut self, position: &[f64], value: f64) {
        if value < self.value || self.position.is_empty() {
            self.value = value;
            self.position.clear();
            self.position.extend_from_slice(position);
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }
}

/// Outcome of a single optimization run.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    /// Best objective value found so far, recorded once after initialization
    /// (index 0) and once per iteration; never increasing.
    pub trace: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_value: f64,
    /// Total objective evaluations performed, trial moves included.
    pub evaluations: usize,
}

impl RunRecord {
    pub fn final_best(&self) -> f64 {
        self.best_value
    }
}
