use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::plant::{CostPair, PlantModel};
use crate::linalg::{self, ensure_shape, LyapunovOperator, Matrix};

/// Smallest admissible eigenvalue of the metric weight.
pub const METRIC_FLOOR: f64 = 1e-12;

/// Per-gain quantities shared by every geometric operation at `K`.
///
/// Built once by [`GeometryCache::new`] and never mutated afterwards; the
/// coordinate partials of the metric weight are filled lazily on first use.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    plant: PlantModel,
    cost_pair: CostPair,
    k: Matrix,
    a_cl: Matrix,
    radius: f64,
    /// `Y = 𝕃(A_cl, W)`
    y: Matrix,
    y_inv: Matrix,
    /// `P = 𝕃(A_clᵀ, Q + KᵀRK)`
    p: Matrix,
    state_weight: Matrix,
    cost: f64,
    eucl_grad: Matrix,
    riem_grad: Matrix,
    forward: LyapunovOperator,
    adjoint: LyapunovOperator,
    partials: OnceLock<Vec<Matrix>>,
}

impl GeometryCache {
    pub fn new(plant: &PlantModel, cost_pair: &CostPair, k: &Matrix) -> Result<Self> {
        let (n, m) = (plant.state_dim(), plant.input_dim());
        ensure_shape(k, m, n)?;
        cost_pair.check_dims(plant)?;
        let a_cl = plant.closed_loop(k);
        let radius = linalg::spectral_radius(&a_cl)?;
        let forward = LyapunovOperator::new(&a_cl)?;
        let adjoint = LyapunovOperator::new(&a_cl.transpose())?;

        let y = forward.solve(plant.w())?;
        let state_weight = cost_pair.state_weight(k);
        let p = adjoint.solve(&state_weight)?;
        let cost = linalg::trace_product(&p, plant.w());

        let y_min = linalg::lambda_min_sym(&y);
        if y_min <= METRIC_FLOOR {
            return Err(Error::SingularMetric { lambda_min: y_min });
        }
        let y_inv = linalg::symmetrize(
            &y.clone()
                .cholesky()
                .ok_or(Error::SingularMetric { lambda_min: y_min })?
                .inverse(),
        );

        let riem_grad = (cost_pair.r() * k + plant.b().transpose() * &p * &a_cl) * 2.0;
        let eucl_grad = &riem_grad * &y;

        Ok(Self {
            plant: plant.clone(),
            cost_pair: cost_pair.clone(),
            k: k.clone(),
            a_cl,
            radius,
            y,
            y_inv,
            p,
            state_weight,
            cost,
            eucl_grad,
            riem_grad,
            forward,
            adjoint,
            partials: OnceLock::new(),
        })
    }

    pub fn plant(&self) -> &PlantModel {
        &self.plant
    }

    pub fn cost_pair(&self) -> &CostPair {
        &self.cost_pair
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn closed_loop(&self) -> &Matrix {
        &self.a_cl
    }

    pub fn closed_loop_radius(&self) -> f64 {
        self.radius
    }

    /// Stationary state covariance `Y_K`.
    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn y_inv(&self) -> &Matrix {
        &self.y_inv
    }

    /// Value matrix `P_K`.
    pub fn p(&self) -> &Matrix {
        &self.p
    }

    /// `Q + Kᵀ R K`.
    pub fn state_weight(&self) -> &Matrix {
        &self.state_weight
    }

    /// `f(K) = Tr(P_K W)`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// `∇f(K) = 2(RK + BᵀP A_cl) Y`.
    pub fn eucl_grad(&self) -> &Matrix {
        &self.eucl_grad
    }

    /// `grad f(K) = 2(RK + BᵀP A_cl)`, the gradient under `g_K(U,V) = Tr(U Y Vᵀ)`.
    pub fn riem_grad(&self) -> &Matrix {
        &self.riem_grad
    }

    pub fn gain_shape(&self) -> (usize, usize) {
        self.k.shape()
    }

    /// Solves `X = A_cl X A_clᵀ + Z`.
    pub fn lyap_forward(&self, z: &Matrix) -> Result<Matrix> {
        self.forward.solve(z)
    }

    /// Solves `X = A_clᵀ X A_cl + Z`.
    pub fn lyap_adjoint(&self, z: &Matrix) -> Result<Matrix> {
        self.adjoint.solve(z)
    }

    /// `DY[U] = 𝕃(A_cl, BU·Y·A_clᵀ + A_cl·Y·(BU)ᵀ)`.
    pub fn covariance_derivative(&self, u: &Matrix) -> Result<Matrix> {
        ensure_shape(u, self.k.nrows(), self.k.ncols())?;
        let bu = self.plant.b() * u;
        let half = &bu * &self.y * self.a_cl.transpose();
        let rhs = &half + half.transpose();
        self.lyap_forward(&rhs)
    }

    /// `DP[U] = 𝕃(A_clᵀ, (BU)ᵀP A_cl + A_clᵀP BU + UᵀRK + KᵀRU)`.
    pub fn value_derivative(&self, u: &Matrix) -> Result<Matrix> {
        ensure_shape(u, self.k.nrows(), self.k.ncols())?;
        let bu = self.plant.b() * u;
        let half = bu.transpose() * &self.p * &self.a_cl + u.transpose() * self.cost_pair.r() * &self.k;
        let rhs = &half + half.transpose();
        self.lyap_adjoint(&rhs)
    }

    /// `D(grad f)[U] = 2(RU + Bᵀ·DP[U]·A_cl + BᵀP·BU)`.
    pub fn riem_grad_derivative(&self, u: &Matrix) -> Result<Matrix> {
        let dp = self.value_derivative(u)?;
        let b = self.plant.b();
        Ok((self.cost_pair.r() * u + b.transpose() * dp * &self.a_cl + b.transpose() * &self.p * b * u)
            * 2.0)
    }

    /// Euclidean Hessian `D(∇f)[U] = D(grad f)[U]·Y + grad f·DY[U]`.
    pub fn eucl_grad_derivative(&self, u: &Matrix) -> Result<Matrix> {
        let de = self.riem_grad_derivative(u)?;
        let dy = self.covariance_derivative(u)?;
        Ok(de * &self.y + &self.riem_grad * dy)
    }

    /// `DY[E_a]` for each coordinate direction `E_a`, ordered as `vec(K)`.
    pub fn covariance_partials(&self) -> Result<&[Matrix]> {
        if let Some(p) = self.partials.get() {
            return Ok(p);
        }
        let (m, n) = self.k.shape();
        let mut out = Vec::with_capacity(m * n);
        for a in 0..m * n {
            let mut e = Matrix::zeros(m, n);
            e[(a % m, a / m)] = 1.0;
            out.push(self.covariance_derivative(&e)?);
        }
        Ok(self.partials.get_or_init(|| out))
    }
}
