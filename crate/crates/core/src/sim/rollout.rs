//! Stochastic rollouts of `x_{t+1} = (A + BK_t)x_t + w_t` and the exact
//! covariance recursion that gives their expected stage costs.

use crate::error::{Error, Result};
use crate::geometry::{CostPair, PlantModel};
use crate::linalg::{self, Matrix, Vector};
use crate::sim::rng::SeedStream;

/// One realization of the initial state and the process noise.
///
/// Algorithm and comparator rollouts of the same run share one draw, which
/// is what pairs them under common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub x1: Vector,
    /// `w_1, …, w_T`.
    pub w: Vec<Vector>,
}

impl NoiseDraw {
    /// Draws `x1 ~ N(0, x1_cov)` and then `w_t ~ N(0, W)` for `t = 1..=horizon`,
    /// all from `stream`, in that order.
    pub fn sample(stream: &mut SeedStream, plant: &PlantModel, x1_cov: &Matrix, horizon: usize) -> Result<Self> {
        let n = plant.state_dim();
        linalg::ensure_shape(x1_cov, n, n)?;
        let x1_factor = psd_factor(x1_cov)?;
        let w_factor = psd_factor(plant.w())?;
        let x1 = stream.gaussian(&x1_factor);
        let w = (0..horizon).map(|_| stream.gaussian(&w_factor)).collect();
        Ok(Self { x1, w })
    }

    /// Noise-free draw: `x1` given, `w_t = 0`.
    pub fn deterministic(x1: Vector, horizon: usize) -> Self {
        let n = x1.len();
        Self {
            x1,
            w: vec![Vector::zeros(n); horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.w.len()
    }
}

/// Cholesky factor, falling back to the symmetric square root for
/// semidefinite inputs (e.g. a zero initial covariance).
fn psd_factor(m: &Matrix) -> Result<Matrix> {
    let sym = linalg::symmetrize(m);
    if let Some(ch) = sym.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.min() < -1e-12 * eig.eigenvalues.amax().max(1.0) {
        return Err(Error::InvalidModel("covariance is not positive semidefinite".into()));
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * Matrix::from_diagonal(&root))
}

fn check_lengths(gains: &[Matrix], costs: &[CostPair]) -> Result<()> {
    if gains.len() != costs.len() {
        return Err(Error::LengthMismatch {
            left: gains.len(),
            right: costs.len(),
        });
    }
    Ok(())
}

/// Realized stage costs `x_tᵀQ_t x_t + u_tᵀR_t u_t` with `u_t = K_t x_t`.
///
/// Stability of the gains is the caller's business; an unstable sequence
/// simply produces large costs.
pub fn rollout(plant: &PlantModel, gains: &[Matrix], costs: &[CostPair], noise: &NoiseDraw) -> Result<Vec<f64>> {
    check_lengths(gains, costs)?;
    if noise.horizon() < gains.len() {
        return Err(Error::LengthMismatch {
            left: gains.len(),
            right: noise.horizon(),
        });
    }
    let mut x = noise.x1.clone();
    let mut out = Vec::with_capacity(gains.len());
    for ((k, cost), w) in gains.iter().zip(costs).zip(&noise.w) {
        let u = k * &x;
        out.push(x.dot(&(cost.q() * &x)) + u.dot(&(cost.r() * &u)));
        x = plant.a() * &x + plant.b() * u + w;
    }
    Ok(out)
}

/// Convenience wrapper drawing the noise from `(noise_seed, 0)`.
pub fn rollout_seeded(
    plant: &PlantModel,
    gains: &[Matrix],
    costs: &[CostPair],
    x1_cov: &Matrix,
    noise_seed: u64,
) -> Result<Vec<f64>> {
    let mut stream = SeedStream::new(noise_seed);
    let noise = NoiseDraw::sample(&mut stream, plant, x1_cov, gains.len())?;
    rollout(plant, gains, costs, &noise)
}

#[derive(Debug, Clone)]
pub struct ExpectedTrace {
    /// `Tr((Q_t + K_tᵀR_tK_t) X_t)`.
    pub stage_costs: Vec<f64>,
    /// `X_t` for `t = 1..=T`.
    pub covariances: Vec<Matrix>,
    /// `X^s_t = 𝕃(A + BK_t, W)`.
    pub steady_states: Vec<Matrix>,
    /// `‖X_t − X^s_t‖₂`.
    pub gaps: Vec<f64>,
}

/// Exact expected stage costs from `X_{t+1} = A_t X_t A_tᵀ + W`,
/// `A_t = A + BK_t`, starting at `X_1 = x1_cov`.
pub fn expected_cost_trace(
    plant: &PlantModel,
    gains: &[Matrix],
    costs: &[CostPair],
    x1_cov: &Matrix,
) -> Result<ExpectedTrace> {
    check_lengths(gains, costs)?;
    let n = plant.state_dim();
    linalg::ensure_shape(x1_cov, n, n)?;
    let t_len = gains.len();
    let mut trace = ExpectedTrace {
        stage_costs: Vec::with_capacity(t_len),
        covariances: Vec::with_capacity(t_len),
        steady_states: Vec::with_capacity(t_len),
        gaps: Vec::with_capacity(t_len),
    };
    let mut x = x1_cov.clone();
    for (k, cost) in gains.iter().zip(costs) {
        let a_cl = plant.closed_loop(k);
        let steady = linalg::solve_discrete_lyapunov(&a_cl, plant.w())?;
        trace.stage_costs.push(linalg::trace_product(&cost.state_weight(k), &x));
        trace.gaps.push(linalg::spectral_norm(&(&x - &steady)));
        trace.steady_states.push(steady);
        let next = linalg::symmetrize(&(&a_cl * &x * a_cl.transpose() + plant.w()));
        trace.covariances.push(std::mem::replace(&mut x, next));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unforced_system_has_zero_cost() {
        let plant = PlantModel::with_isotropic_noise(Matrix::identity(2, 2) * 0.5, Matrix::identity(2, 1), 1.0).unwrap();
        let gains = vec![Matrix::zeros(1, 2); 5];
        let costs = vec![CostPair::identity(2, 1); 5];
        let noise = NoiseDraw::deterministic(Vector::zeros(2), 5);
        assert!(rollout(&plant, &gains, &costs, &noise).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn identity_fixed_point() {
        let n = 3;
        let plant = PlantModel::with_isotropic_noise(Matrix::zeros(n, n), Matrix::identity(n, n), 1.0).unwrap();
        let gains = vec![Matrix::zeros(n, n); 4];
        let costs = vec![CostPair::identity(n, n); 4];
        let tr = expected_cost_trace(&plant, &gains, &costs, &Matrix::identity(n, n)).unwrap();
        for (c, x) in tr.stage_costs.iter().zip(&tr.covariances) {
            assert!((c - n as f64).abs() < 1e-12);
            assert!((x - Matrix::identity(n, n)).norm() < 1e-12);
        }
        assert!(tr.gaps.iter().all(|&g| g < 1e-12));
    }

    #[test]
    fn x_equals_previous_noise_when_a_vanishes() {
        let n = 2;
        let plant = PlantModel::with_isotropic_noise(Matrix::zeros(n, n), Matrix::identity(n, 1), 1.0).unwrap();
        let horizon = 20_000;
        let gains = vec![Matrix::zeros(1, n); horizon];
        let costs = vec![CostPair::identity(n, 1); horizon];
        let costs_seq = rollout_seeded(&plant, &gains, &costs, &Matrix::identity(n, n), 3).unwrap();
        let mean = costs_seq.iter().sum::<f64>() / horizon as f64;
        assert!((mean - n as f64).abs() < 0.1);
    }

    #[test]
    fn mismatched_lengths() {
        let plant = PlantModel::with_isotropic_noise(Matrix::zeros(1, 1), Matrix::identity(1, 1), 1.0).unwrap();
        let err = expected_cost_trace(&plant, &[Matrix::zeros(1, 1)], &[], &Matrix::identity(1, 1));
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }
}
