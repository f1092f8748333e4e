//! Monte-Carlo regret estimation over a fixed scenario.
//!
//! Policy sequences depend only on the revealed costs, never on the state,
//! so each algorithm is run online once and the runs differ only in the
//! noise fed to the rollouts. Run `r` draws its initial state and process
//! noise from stream `(master_seed, r)`; the comparator and every algorithm
//! consume that same draw.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConstraintSet, CostPair, PlantModel};
use crate::linalg::{self, Matrix};
use crate::optimizers::Algorithm;
use crate::sim::online::{self, comparator_sequence, initial_gain, path_length, InitPolicy, OnlineRun};
use crate::sim::regret::{compute_regret, RegretRecord, RoundDiagnostics};
use crate::sim::rng::SeedStream;
use crate::sim::rollout::{expected_cost_trace, rollout, NoiseDraw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Realized rollouts paired with the comparator by common random numbers.
    Realized,
    /// Exact expectation from the covariance recursion.
    Expected,
}

/// Plant, constraint, cost sequence and the comparator built from them.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: PlantModel,
    pub constraint: ConstraintSet,
    pub costs: Vec<CostPair>,
    pub comparators: Vec<Matrix>,
    /// `X^s` of the first comparator gain; the initial state covariance.
    pub x1_cov: Matrix,
    /// Comparator path length `Σ d̂(K*_t, K*_{t−1})`.
    pub path_length: f64,
}

impl Scenario {
    pub fn build(plant: PlantModel, constraint: ConstraintSet, costs: Vec<CostPair>, comparator_tol: f64) -> Result<Self> {
        let comparators = comparator_sequence(&plant, &costs, &constraint, comparator_tol)?;
        let x1_cov = linalg::solve_discrete_lyapunov(&plant.closed_loop(&comparators[0]), plant.w())?;
        let path_length = path_length(&plant, &comparators)?;
        Ok(Self {
            plant,
            constraint,
            costs,
            comparators,
            x1_cov,
            path_length,
        })
    }

    pub fn horizon(&self) -> usize {
        self.costs.len()
    }
}

/// Outcome for one algorithm.
#[derive(Debug, Clone)]
pub struct AlgorithmOutcome {
    pub algorithm: Algorithm,
    pub online: OnlineRun,
    pub diagnostics: Vec<RoundDiagnostics>,
    /// Regret traces, one per successful run (a single trace in expected mode).
    pub traces: Vec<(usize, Vec<RegretRecord>)>,
    /// Failed runs with their error.
    pub failures: Vec<(usize, Error)>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AlgorithmOutcome {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub runs: usize,
    pub master_seed: u64,
    pub mode: RegretMode,
    pub init: InitPolicy,
    pub comparator_tol: f64,
}

fn diagnostics(scenario: &Scenario, run: &OnlineRun) -> Result<Vec<RoundDiagnostics>> {
    let dists = online::tracking_distances(&scenario.plant, &run.gains, &scenario.comparators)?;
    run.gains
        .iter()
        .zip(&run.steps)
        .zip(dists)
        .map(|((k, step), surrogate_dist)| {
            Ok(RoundDiagnostics {
                eta: step.eta,
                certificate: step.certificate,
                grad_norm_g: step.grad_norm_g,
                closed_loop_radius: scenario.plant.closed_loop_radius(k)?,
                surrogate_dist,
            })
        })
        .collect()
}

/// Sample mean and standard deviation (`n − 1` denominator) per round,
/// accumulated in run order.
pub fn mean_std(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let Some(first) = curves.first() else {
        return (Vec::new(), Vec::new());
    };
    let len = first.len();
    let count = curves.len() as f64;
    let mut mean = vec![0.0; len];
    for c in curves {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut std = vec![0.0; len];
    if curves.len() > 1 {
        for c in curves {
            for ((s, v), m) in std.iter_mut().zip(c).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / (count - 1.0)).sqrt());
    }
    (mean, std)
}

/// Runs every algorithm online on `scenario` and estimates its regret.
pub fn monte_carlo_regret(
    scenario: &Scenario,
    algorithms: &[Algorithm],
    opts: &MonteCarloOptions,
) -> Result<Vec<AlgorithmOutcome>> {
    if opts.runs == 0 {
        return Err(Error::InvalidModel("runs must be at least 1".into()));
    }
    let k1 = initial_gain(
        &scenario.plant,
        &scenario.costs[0],
        &scenario.constraint,
        opts.init,
        opts.comparator_tol,
    )
    .map_err(|e| e.at_round(1, "initialization"))?;

    let mut outcomes = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let online = online::run_online(&scenario.plant, &scenario.costs, &scenario.constraint, algorithm, &k1)?;
        let diagnostics = diagnostics(scenario, &online)?;
        outcomes.push(AlgorithmOutcome {
            algorithm,
            online,
            diagnostics,
            traces: Vec::new(),
            failures: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        });
    }

    match opts.mode {
        RegretMode::Expected => {
            let comp = expected_cost_trace(&scenario.plant, &scenario.comparators, &scenario.costs, &scenario.x1_cov)?;
            for outcome in &mut outcomes {
                let alg = expected_cost_trace(&scenario.plant, &outcome.online.gains, &scenario.costs, &scenario.x1_cov)?;
                let trace = compute_regret(&alg.stage_costs, &comp.stage_costs, &outcome.diagnostics)?;
                outcome.mean = trace.iter().map(|r| r.cumulative_regret).collect();
                outcome.std = vec![0.0; trace.len()];
                outcome.traces.push((0, trace));
            }
        }
        RegretMode::Realized => {
            let per_run: Vec<Result<Vec<Vec<RegretRecord>>>> = (0..opts.runs)
                .into_par_iter()
                .map(|run| realized_run(scenario, &outcomes, opts.master_seed, run))
                .collect();
            for (run, result) in per_run.into_iter().enumerate() {
                match result {
                    Ok(traces) => {
                        for (outcome, trace) in outcomes.iter_mut().zip(traces) {
                            outcome.traces.push((run, trace));
                        }
                    }
                    Err(e) => {
                        for outcome in &mut outcomes {
                            outcome.failures.push((run, e.clone()));
                        }
                    }
                }
            }
            for outcome in &mut outcomes {
                let curves: Vec<Vec<f64>> = outcome
                    .traces
                    .iter()
                    .map(|(_, t)| t.iter().map(|r| r.cumulative_regret).collect())
                    .collect();
                (outcome.mean, outcome.std) = mean_std(&curves);
            }
        }
    }
    Ok(outcomes)
}

fn realized_run(
    scenario: &Scenario,
    outcomes: &[AlgorithmOutcome],
    master_seed: u64,
    run: usize,
) -> Result<Vec<Vec<RegretRecord>>> {
    let mut stream = SeedStream::with_stream(master_seed, run as u64);
    let noise = NoiseDraw::sample(&mut stream, &scenario.plant, &scenario.x1_cov, scenario.horizon())?;
    let comp = rollout(&scenario.plant, &scenario.comparators, &scenario.costs, &noise)?;
    outcomes
        .iter()
        .map(|o| {
            let alg = rollout(&scenario.plant, &o.online.gains, &scenario.costs, &noise)?;
            compute_regret(&alg, &comp, &o.diagnostics)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_constraint_mask, generate_cost_sequence, generate_plant};

    #[test]
    fn mean_std_basic() {
        let (m, s) = mean_std(&[vec![1.0, 2.0], vec![3.0, 2.0]]);
        assert_eq!(m, vec![2.0, 2.0]);
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[1], 0.0);
        let (_, s) = mean_std(&[vec![5.0]]);
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn deterministic_given_seeds() {
        let plant = generate_plant(1, 3, 2, 0.8).unwrap();
        let mask = generate_constraint_mask(2, 3, 2, 0.5).unwrap();
        let costs = generate_cost_sequence(3, 15, 0.5, 3, 2).unwrap();
        let scenario = Scenario::build(plant, mask, costs, 1e-9).unwrap();
        let opts = MonteCarloOptions {
            runs: 4,
            master_seed: 9,
            mode: RegretMode::Realized,
            init: InitPolicy::OfflineConverged,
            comparator_tol: 1e-9,
        };
        let a = monte_carlo_regret(&scenario, &Algorithm::ALL, &opts).unwrap();
        let b = monte_carlo_regret(&scenario, &Algorithm::ALL, &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean, y.mean);
            assert_eq!(x.traces.len(), 4);
        }
    }
}
