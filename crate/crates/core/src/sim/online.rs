//! Round-wise comparator gains and online policy runs.

use crate::error::{Error, Result};
use crate::geometry::{ConstraintSet, CostPair, GeometryCache, PlantModel};
use crate::linalg::{self, Matrix};
use crate::optimizers::{self, offline_local_minimizer, Algorithm, OfflineOptions, StepReport, StepStrategy};

/// Round-wise local minimizers `K*_t` of `f_t` restricted to the constraint.
///
/// Unconstrained problems use the DARE gain. Otherwise `K*_1` starts from
/// `K = 0` and every later round is warm-started from the previous
/// minimizer; the certificate Newton solve falls back to backtracking when it
/// does not reach `tol`.
pub fn comparator_sequence(
    plant: &PlantModel,
    costs: &[CostPair],
    constraint: &ConstraintSet,
    tol: f64,
) -> Result<Vec<Matrix>> {
    if costs.is_empty() {
        return Err(Error::InvalidCost("cost sequence is empty".into()));
    }
    let (m, n) = (plant.input_dim(), plant.state_dim());
    let mut out: Vec<Matrix> = Vec::with_capacity(costs.len());
    for (i, cost) in costs.iter().enumerate() {
        let round = i + 1;
        cost.check_dims(plant).map_err(|e| e.at_round(round, "comparator"))?;
        let k = if constraint.is_unconstrained() {
            linalg::solve_dare(plant.a(), plant.b(), cost.q(), cost.r())
                .map(|s| s.k)
                .map_err(|e| e.at_round(round, "comparator"))?
        } else {
            // Identical consecutive costs share their minimizer.
            if i > 0 && cost == &costs[i - 1] {
                out.push(out[i - 1].clone());
                continue;
            }
            let start = out.last().cloned().unwrap_or_else(|| Matrix::zeros(m, n));
            local_minimizer(plant, cost, constraint, &start, tol).map_err(|e| e.at_round(round, "comparator"))?
        };
        out.push(k);
    }
    Ok(out)
}

/// Certificate Newton from `start`, then backtracking Newton if needed.
pub fn local_minimizer(
    plant: &PlantModel,
    cost: &CostPair,
    constraint: &ConstraintSet,
    start: &Matrix,
    tol: f64,
) -> Result<Matrix> {
    let certificate = OfflineOptions {
        tol,
        ..OfflineOptions::default()
    };
    let report = offline_local_minimizer(plant, cost, constraint, start, &certificate)?;
    if report.converged {
        return Ok(report.k_star);
    }
    let backtracking = OfflineOptions {
        strategy: StepStrategy::Backtracking,
        ..certificate
    };
    let report = offline_local_minimizer(plant, cost, constraint, start, &backtracking)?;
    if report.converged {
        Ok(report.k_star)
    } else {
        Err(Error::NoConvergence {
            iterations: report.iterations,
            residual: report.final_grad_norm_g,
        })
    }
}

/// `Σ_{t≥2} d̂(K*_t, K*_{t−1})` with `d̂(K₁, K₂) = ‖K₁ − K₂‖_{g_{K₂}}`.
///
/// The metric weight `Y_K` depends on the gain only, so the cost pair used to
/// build the cache is irrelevant here.
pub fn path_length(plant: &PlantModel, gains: &[Matrix]) -> Result<f64> {
    let mut total = 0.0;
    for pair in gains.windows(2) {
        total += surrogate_dist(plant, &pair[1], &pair[0])?;
    }
    Ok(total)
}

/// `d̂(K, K_ref) = ‖K − K_ref‖_{g_K}`, measured in the metric at `K`.
pub fn surrogate_dist(plant: &PlantModel, k: &Matrix, k_ref: &Matrix) -> Result<f64> {
    let a_cl = plant.closed_loop(k);
    let y = linalg::solve_discrete_lyapunov(&a_cl, plant.w())?;
    let diff = k - k_ref;
    Ok(linalg::trace_product(&(&diff * y), &diff.transpose()).max(0.0).sqrt())
}

/// How the first applied gain `K_1` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// Backtracking Newton on the first round's cost from `K = 0`, run to
    /// the comparator tolerance.
    OfflineConverged,
    /// `K_1 = 0`.
    Zero,
}

pub fn initial_gain(
    plant: &PlantModel,
    first_cost: &CostPair,
    constraint: &ConstraintSet,
    policy: InitPolicy,
    tol: f64,
) -> Result<Matrix> {
    let zero = Matrix::zeros(plant.input_dim(), plant.state_dim());
    match policy {
        InitPolicy::Zero => Ok(zero),
        InitPolicy::OfflineConverged => {
            let opts = OfflineOptions {
                tol,
                strategy: StepStrategy::Backtracking,
                ..OfflineOptions::default()
            };
            let report = offline_local_minimizer(plant, first_cost, constraint, &zero, &opts)?;
            if report.converged {
                Ok(report.k_star)
            } else {
                local_minimizer(plant, first_cost, constraint, &zero, tol)
            }
        }
    }
}

/// Applied gains `K_1..K_T` and the step taken after each round.
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub algorithm: Algorithm,
    pub gains: Vec<Matrix>,
    /// `steps[t]` maps `K_{t+1}` to `K_{t+2}` (0-based), i.e. the update
    /// made once round `t + 1`'s cost is revealed.
    pub steps: Vec<StepReport>,
}

/// Plays `K_t`, observes `(Q_t, R_t)`, updates with one `algorithm` step.
pub fn run_online(
    plant: &PlantModel,
    costs: &[CostPair],
    constraint: &ConstraintSet,
    algorithm: Algorithm,
    k1: &Matrix,
) -> Result<OnlineRun> {
    if !plant.is_stabilizing(k1) {
        return Err(Error::InfeasibleInit("initial gain is not stabilizing".into()));
    }
    let mut gains = Vec::with_capacity(costs.len());
    let mut steps = Vec::with_capacity(costs.len());
    let mut k = k1.clone();
    for (i, cost) in costs.iter().enumerate() {
        let report = optimizers::step(plant, cost, &k, constraint, algorithm)
            .map_err(|e| e.at_round(i + 1, algorithm.as_str()))?;
        if !(report.closed_loop_radius < 1.0) {
            return Err(Error::NotStable {
                radius: report.closed_loop_radius,
            }
            .at_round(i + 1, algorithm.as_str()));
        }
        gains.push(std::mem::replace(&mut k, report.k_next.clone()));
        steps.push(report);
    }
    Ok(OnlineRun {
        algorithm,
        gains,
        steps,
    })
}

/// `d̂(K_t, K*_t)` for each round.
pub fn tracking_distances(plant: &PlantModel, gains: &[Matrix], comparators: &[Matrix]) -> Result<Vec<f64>> {
    if gains.len() != comparators.len() {
        return Err(Error::LengthMismatch {
            left: gains.len(),
            right: comparators.len(),
        });
    }
    gains
        .iter()
        .zip(comparators)
        .map(|(k, k_star)| surrogate_dist(plant, k, k_star))
        .collect()
}

/// Steady-state cost `f(K)` of a single gain for a cost pair.
pub fn steady_cost(plant: &PlantModel, cost: &CostPair, k: &Matrix) -> Result<f64> {
    Ok(GeometryCache::new(plant, cost, k)?.cost())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_constraint_mask, generate_cost_sequence, generate_plant};

    #[test]
    fn static_costs_give_constant_comparators() {
        let plant = generate_plant(1, 4, 2, 0.8).unwrap();
        let mask = generate_constraint_mask(2, 4, 2, 0.5).unwrap();
        let costs = generate_cost_sequence(3, 5, 0.0, 4, 2).unwrap();
        let ks = comparator_sequence(&plant, &costs, &mask, 1e-9).unwrap();
        for k in &ks {
            assert!((k - &ks[0]).norm() < 1e-9);
        }
        assert!(path_length(&plant, &ks).unwrap() <= 1e-6 * 5.0);
    }

    #[test]
    fn unconstrained_comparators_are_dare_gains() {
        let plant = generate_plant(4, 3, 2, 0.8).unwrap();
        let costs = generate_cost_sequence(5, 4, 0.5, 3, 2).unwrap();
        let ks = comparator_sequence(&plant, &costs, &ConstraintSet::none(2, 3), 1e-9).unwrap();
        for (k, c) in ks.iter().zip(&costs) {
            let dare = linalg::solve_dare(plant.a(), plant.b(), c.q(), c.r()).unwrap();
            assert!((k - dare.k).norm() < 1e-12);
        }
    }

    #[test]
    fn online_run_records_applied_gains() {
        let plant = generate_plant(6, 3, 1, 0.8).unwrap();
        let costs = generate_cost_sequence(7, 6, 0.3, 3, 1).unwrap();
        let none = ConstraintSet::none(1, 3);
        let run = run_online(&plant, &costs, &none, Algorithm::Onm, &Matrix::zeros(1, 3)).unwrap();
        assert_eq!(run.gains.len(), 6);
        assert_eq!(run.gains[0], Matrix::zeros(1, 3));
        for t in 1..6 {
            assert_eq!(run.gains[t], run.steps[t - 1].k_next);
        }
    }
}
