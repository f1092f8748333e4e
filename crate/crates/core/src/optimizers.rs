//! Policy updates on the constrained stabilizing set: the online Newton step,
//! its Euclidean-connection and projected-gradient baselines, and an offline
//! Newton solver for round-wise local minimizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    certificate_from_cache, ConstraintSet, CostPair, DirectionStatus, GeometryCache, Metric,
    PlantModel, Submanifold,
};
use crate::linalg::Matrix;

/// Feasibility tolerance for `M vec(K) = b` on step inputs.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Riemannian Newton under the covariance-weighted metric.
    Onm,
    /// Newton step with the Euclidean metric and connection.
    EuclideanNewton,
    /// Euclidean projected gradient.
    Pg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Onm, Algorithm::EuclideanNewton, Algorithm::Pg];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Onm => "onm",
            Algorithm::EuclideanNewton => "euclidean_newton",
            Algorithm::Pg => "pg",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one certificate-limited update `K⁺ = K + ηG`.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub k_next: Matrix,
    pub direction: Matrix,
    /// `‖G‖_g` under the covariance-weighted metric at `K`.
    pub direction_norm_g: f64,
    /// `‖grad h‖_g` under the covariance-weighted metric at `K`.
    pub grad_norm_g: f64,
    pub eta: f64,
    pub certificate: f64,
    pub status: DirectionStatus,
    /// Spectral radius of `A + B K⁺`.
    pub closed_loop_radius: f64,
    /// `f(K)` for the round's cost.
    pub cost: f64,
}

fn check_input(plant: &PlantModel, k: &Matrix, constraint: &ConstraintSet) -> Result<()> {
    let shape = (plant.input_dim(), plant.state_dim());
    if constraint.shape() != shape || k.shape() != shape {
        return Err(Error::DimensionMismatch {
            expected: shape,
            found: k.shape(),
        });
    }
    let residual = constraint.residual(k);
    if residual > FEASIBILITY_TOL * (1.0 + k.norm()) {
        return Err(Error::InfeasibleInit(format!(
            "constraint residual {residual:e}"
        )));
    }
    Ok(())
}

/// One update of `algorithm` for the cost revealed this round.
pub fn step(
    plant: &PlantModel,
    cost: &CostPair,
    k: &Matrix,
    constraint: &ConstraintSet,
    algorithm: Algorithm,
) -> Result<StepReport> {
    check_input(plant, k, constraint)?;
    let cache = GeometryCache::new(plant, cost, k)?;
    step_from_cache(&cache, constraint, algorithm)
}

pub fn step_from_cache(
    cache: &GeometryCache,
    constraint: &ConstraintSet,
    algorithm: Algorithm,
) -> Result<StepReport> {
    let riemannian = Submanifold::new(cache, constraint, Metric::Lyapunov)?;
    let (direction, status, grad_norm_g) = match algorithm {
        Algorithm::Onm => {
            let nd = riemannian.newton_direction()?;
            (nd.direction, nd.status, nd.grad_norm)
        }
        Algorithm::EuclideanNewton => {
            let nd = Submanifold::new(cache, constraint, Metric::Euclidean)?.newton_direction()?;
            let grad_norm = Metric::Lyapunov.norm(cache, &riemannian.gradient()?)?;
            (nd.direction, nd.status, grad_norm)
        }
        Algorithm::Pg => {
            let euclidean = Submanifold::new(cache, constraint, Metric::Euclidean)?;
            let mut g = -euclidean.gradient()?;
            constraint.enforce_mask(&mut g);
            let grad_norm = Metric::Lyapunov.norm(cache, &riemannian.gradient()?)?;
            (g, DirectionStatus::Gradient, grad_norm)
        }
    };
    let certificate = certificate_from_cache(cache, &direction)?;
    let eta = certificate.min(1.0);
    let mut k_next = cache.k() + &direction * eta;
    constraint.enforce_mask(&mut k_next);
    let closed_loop_radius = cache.plant().closed_loop_radius(&k_next)?;
    Ok(StepReport {
        direction_norm_g: Metric::Lyapunov.norm(cache, &direction)?,
        k_next,
        direction,
        grad_norm_g,
        eta,
        certificate,
        status,
        closed_loop_radius,
        cost: cache.cost(),
    })
}

/// Online Newton on manifold: Riemannian Newton direction, certificate step.
pub fn onm_step(plant: &PlantModel, cost: &CostPair, k: &Matrix, constraint: &ConstraintSet) -> Result<StepReport> {
    step(plant, cost, k, constraint, Algorithm::Onm)
}

/// Newton step with the Euclidean metric (identity weight, zero connection).
pub fn euclidean_newton_step(
    plant: &PlantModel,
    cost: &CostPair,
    k: &Matrix,
    constraint: &ConstraintSet,
) -> Result<StepReport> {
    step(plant, cost, k, constraint, Algorithm::EuclideanNewton)
}

/// `G = −Π_E ∇f(K)`, certificate step.
pub fn projected_gradient_step(
    plant: &PlantModel,
    cost: &CostPair,
    k: &Matrix,
    constraint: &ConstraintSet,
) -> Result<StepReport> {
    step(plant, cost, k, constraint, Algorithm::Pg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStrategy {
    /// `η = min(1, s_K)`.
    Certificate,
    /// Armijo backtracking on `h` with halving, rejecting unstable trials.
    Backtracking,
}

#[derive(Debug, Clone, Copy)]
pub struct OfflineOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: StepStrategy,
    pub armijo_c1: f64,
    pub min_step: f64,
}

impl Default for OfflineOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            strategy: StepStrategy::Certificate,
            armijo_c1: 1e-4,
            min_step: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub k_star: Matrix,
    pub iterations: usize,
    pub final_grad_norm_g: f64,
    pub converged: bool,
    /// `‖grad h‖_g` at every visited iterate, starting with `K_init`.
    pub grad_norm_history: Vec<f64>,
    pub iterates: Vec<Matrix>,
}

/// Riemannian Newton iteration on `h = f|_{S̃}` for a fixed cost pair.
///
/// Returns the first iterate with `‖grad h‖_g ≤ tol`; a report with
/// `converged = false` when `max_iter` is exhausted.
pub fn offline_local_minimizer(
    plant: &PlantModel,
    cost: &CostPair,
    constraint: &ConstraintSet,
    k_init: &Matrix,
    opts: &OfflineOptions,
) -> Result<SolveReport> {
    check_input(plant, k_init, constraint)?;
    if !plant.is_stabilizing(k_init) {
        return Err(Error::InfeasibleInit("initial gain is not stabilizing".into()));
    }
    let mut k = k_init.clone();
    let mut history = Vec::new();
    let mut iterates = vec![k.clone()];
    let mut iterations = 0;
    loop {
        let cache = GeometryCache::new(plant, cost, &k)?;
        let manifold = Submanifold::new(&cache, constraint, Metric::Lyapunov)?;
        let nd = manifold.newton_direction()?;
        history.push(nd.grad_norm);
        if nd.grad_norm <= opts.tol || iterations >= opts.max_iter {
            return Ok(SolveReport {
                converged: nd.grad_norm <= opts.tol,
                final_grad_norm_g: nd.grad_norm,
                k_star: k,
                iterations,
                grad_norm_history: history,
                iterates,
            });
        }
        let next = match opts.strategy {
            StepStrategy::Certificate => {
                let eta = certificate_from_cache(&cache, &nd.direction)?.min(1.0);
                &k + &nd.direction * eta
            }
            StepStrategy::Backtracking => backtrack(&cache, constraint, &nd.direction, &nd.gradient, opts)?,
        };
        k = next;
        constraint.enforce_mask(&mut k);
        iterates.push(k.clone());
        iterations += 1;
    }
}

fn backtrack(
    cache: &GeometryCache,
    constraint: &ConstraintSet,
    direction: &Matrix,
    gradient: &Matrix,
    opts: &OfflineOptions,
) -> Result<Matrix> {
    let mut direction = direction.clone();
    let mut slope = Metric::Lyapunov.inner(cache, gradient, &direction)?;
    if !(slope < 0.0) {
        direction = -gradient;
        slope = Metric::Lyapunov.inner(cache, gradient, &direction)?;
    }
    constraint.enforce_mask(&mut direction);
    let (plant, cost) = (cache.plant(), cache.cost_pair());
    let mut eta = 1.0;
    while eta >= opts.min_step {
        let trial = cache.k() + &direction * eta;
        if plant.closed_loop_radius(&trial)? < 1.0 {
            if let Ok(c) = GeometryCache::new(plant, cost, &trial) {
                // Slack of a few ulps keeps full Newton steps acceptable once the
                // predicted decrease drops below rounding error in the cost.
                let slack = 64.0 * f64::EPSILON * cache.cost().abs();
                if c.cost() <= cache.cost() + opts.armijo_c1 * eta * slope + slack {
                    return Ok(trial);
                }
            }
        }
        eta *= 0.5;
    }
    Err(Error::NoConvergence {
        iterations: 0,
        residual: slope.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_dare;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    fn scalar_problem() -> (PlantModel, CostPair, ConstraintSet) {
        (
            PlantModel::with_isotropic_noise(scalar(0.5), scalar(1.0), 1.0).unwrap(),
            CostPair::identity(1, 1),
            ConstraintSet::none(1, 1),
        )
    }

    #[test]
    fn scalar_onm_step() {
        let (plant, cost, none) = scalar_problem();
        let rep = onm_step(&plant, &cost, &scalar(0.0), &none).unwrap();
        assert!((rep.certificate - 33.0 / 16.0).abs() < 1e-12);
        assert_eq!(rep.eta, 1.0);
        assert!((rep.k_next[(0, 0)] + 2.0 / 11.0).abs() < 1e-13);
        assert_eq!(rep.status, DirectionStatus::Newton);
    }

    #[test]
    fn scalar_projected_gradient_step() {
        let (plant, cost, none) = scalar_problem();
        let rep = projected_gradient_step(&plant, &cost, &scalar(0.0), &none).unwrap();
        assert!((rep.certificate - 27.0 / 128.0).abs() < 1e-13);
        assert!((rep.k_next[(0, 0)] + 0.375).abs() < 1e-13);
    }

    #[test]
    fn scalar_euclidean_newton_differs() {
        // f(k) = (1 + k²)/(1 − (0.5 + k)²); the oracle takes f'(0)/f''(0) by
        // symbolic differentiation: f' = 16/9, f'' = 296/27.
        let (plant, cost, none) = scalar_problem();
        let rep = euclidean_newton_step(&plant, &cost, &scalar(0.0), &none).unwrap();
        assert!((rep.direction[(0, 0)] + 6.0 / 37.0).abs() < 1e-12);
        assert!((rep.direction[(0, 0)] + 2.0 / 11.0).abs() > 1e-3);
    }

    #[test]
    fn repeated_onm_reaches_dare_gain() {
        let (plant, cost, none) = scalar_problem();
        let dare = solve_dare(plant.a(), plant.b(), cost.q(), cost.r()).unwrap();
        let mut k = scalar(0.0);
        for _ in 0..10 {
            k = onm_step(&plant, &cost, &k, &none).unwrap().k_next;
        }
        assert!((k[(0, 0)] - dare.k[(0, 0)]).abs() <= 1e-8);
        let still = onm_step(&plant, &cost, &k, &none).unwrap();
        assert!((still.k_next - &k).norm() <= 1e-8);
    }

    #[test]
    fn offline_matches_dare_for_both_strategies() {
        let (plant, cost, none) = scalar_problem();
        for strategy in [StepStrategy::Certificate, StepStrategy::Backtracking] {
            let opts = OfflineOptions {
                strategy,
                ..Default::default()
            };
            let rep = offline_local_minimizer(&plant, &cost, &none, &scalar(0.0), &opts).unwrap();
            assert!(rep.converged);
            assert!(rep.final_grad_norm_g <= 1e-9);
            assert!((rep.k_star[(0, 0)] + 0.26557).abs() < 1e-5);
        }
    }

    #[test]
    fn offline_fully_pinned_returns_init() {
        let (plant, cost, _) = scalar_problem();
        let full = ConstraintSet::full(1, 1);
        let rep =
            offline_local_minimizer(&plant, &cost, &full, &scalar(0.0), &OfflineOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.k_star, scalar(0.0));
        assert!(rep.converged);
    }

    #[test]
    fn offline_rejects_bad_init() {
        let (plant, cost, none) = scalar_problem();
        let err = offline_local_minimizer(&plant, &cost, &none, &scalar(0.9), &OfflineOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::InfeasibleInit(_)));
        let full = ConstraintSet::full(1, 1);
        let err = offline_local_minimizer(&plant, &cost, &full, &scalar(0.1), &OfflineOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::InfeasibleInit(_)));
    }
}
