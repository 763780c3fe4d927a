//! Derivative-free optimization over box-constrained continuous domains.
//!
//! The centerpiece is a multi-population metaheuristic in which top-ranked
//! individuals ("governors") lead sub-populations of citizens, attraction
//! between them follows a gravitational analogy, and citizens' votes feed a
//! regression that adjusts each governor's standing for the next election.
//! Genetic crossover and mutation churn the weakest individuals each
//! iteration.
//!
//! Around it: genetic-algorithm and particle-swarm baselines with the same
//! run interface, a suite of standard multimodal benchmark functions, a
//! repeated-run experiment harness with parallel execution and CSV/JSON
//! reporting, and a discrete grid-tuning mode that snaps the continuous
//! optimizers onto hyper-parameter grids scored by lookup tables or external
//! evaluator processes.
//!
//! ```
//! use epistocracy::{run_epistocracy, Bounds, EpistocracyConfig, ObjectiveSpec};
//!
//! let sphere = ObjectiveSpec::new(Bounds::symmetric(5.0, 2).unwrap(), |x| {
//!     x.iter().map(|v| v * v).sum()
//! });
//! let cfg = EpistocracyConfig { iterations: 40, seed: 7, ..Default::default() };
//! let record = run_epistocracy(&sphere, &cfg).unwrap();
//! assert!(record.best_value < 1e-2);
//! ```

pub mod baselines;
pub mod benchmarks;
pub mod core;
pub mod epistocracy;
pub mod error;
pub mod gridtuner;
pub mod harness;
pub mod sampling;

pub use crate::baselines::{run_ga, run_pso, GaConfig, PsoConfig};
pub use crate::core::{Bounds, Individual, ObjectiveSpec, Role, RngStream, RunRecord};
pub use crate::epistocracy::{run_epistocracy, EpistocracyConfig, GovernorMove};
pub use crate::error::{Error, Result};
pub use crate::harness::{
    run_experiment, run_experiment_with, AlgorithmConfig, ExperimentConfig,
};
