//! Experiment engine: scenario generation, rollouts, exact expected costs,
//! regret accounting, strong-stability diagnostics and Monte-Carlo runs.

pub mod generate;
pub mod monte_carlo;
pub mod online;
pub mod regret;
pub mod rng;
pub mod rollout;
pub mod stability;

pub use generate::{cost_trace_cap, generate_constraint_mask, generate_cost_sequence, generate_plant};
pub use monte_carlo::{monte_carlo_regret, AlgorithmOutcome, MonteCarloOptions, RegretMode, Scenario};
pub use online::{
    comparator_sequence, initial_gain, local_minimizer, path_length, run_online, surrogate_dist, InitPolicy,
    OnlineRun,
};
pub use regret::{compute_regret, cumulative_regret, RegretRecord, RoundDiagnostics};
pub use rng::SeedStream;
pub use rollout::{expected_cost_trace, rollout, rollout_seeded, ExpectedTrace, NoiseDraw};
pub use stability::{decompose, strong_stability, strong_stability_report, StabilityReport};
