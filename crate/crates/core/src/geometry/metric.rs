//! Metric-dependent calculus on the stabilizing set: inner products, the
//! Levi-Civita connection in vectorized coordinates, and covariant Hessians.
//!
//! Both supported metrics have the form `g_K(U, V) = Tr(U·W_K·Vᵀ)` for a
//! symmetric positive-definite weight `W_K`, i.e. `W_K ⊗ I_m` on `vec(K)`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cache::{GeometryCache, METRIC_FLOOR};
use crate::linalg::{self, ensure_shape, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Weight `Y_K = 𝕃(A + BK, W)`, the closed-loop state covariance.
    Lyapunov,
    /// Identity weight; flat, so its connection vanishes.
    Euclidean,
}

impl Metric {
    pub fn weight(self, cache: &GeometryCache) -> Cow<'_, Matrix> {
        match self {
            Metric::Lyapunov => Cow::Borrowed(cache.y()),
            Metric::Euclidean => {
                let n = cache.gain_shape().1;
                Cow::Owned(Matrix::identity(n, n))
            }
        }
    }

    pub fn weight_inv(self, cache: &GeometryCache) -> Cow<'_, Matrix> {
        match self {
            Metric::Lyapunov => Cow::Borrowed(cache.y_inv()),
            Metric::Euclidean => self.weight(cache),
        }
    }

    /// Directional derivative of the weight along `U`.
    pub fn weight_derivative(self, cache: &GeometryCache, u: &Matrix) -> Result<Matrix> {
        match self {
            Metric::Lyapunov => cache.covariance_derivative(u),
            Metric::Euclidean => {
                check_tangent(cache, u)?;
                let n = cache.gain_shape().1;
                Ok(Matrix::zeros(n, n))
            }
        }
    }

    /// `g_K(U, V) = Tr(U W_K Vᵀ)`.
    pub fn inner(self, cache: &GeometryCache, u: &Matrix, v: &Matrix) -> Result<f64> {
        check_tangent(cache, u)?;
        check_tangent(cache, v)?;
        Ok(match self {
            Metric::Lyapunov => (u * cache.y()).component_mul(v).sum(),
            Metric::Euclidean => u.component_mul(v).sum(),
        })
    }

    pub fn norm(self, cache: &GeometryCache, u: &Matrix) -> Result<f64> {
        Ok(self.inner(cache, u, u)?.max(0.0).sqrt())
    }

    /// Gradient of the cost with respect to this metric.
    pub fn gradient(self, cache: &GeometryCache) -> &Matrix {
        match self {
            Metric::Lyapunov => cache.riem_grad(),
            Metric::Euclidean => cache.eucl_grad(),
        }
    }

    /// Directional derivative of the gradient field `K ↦ grad f(K)`.
    pub fn gradient_derivative(self, cache: &GeometryCache, u: &Matrix) -> Result<Matrix> {
        match self {
            Metric::Lyapunov => cache.riem_grad_derivative(u),
            Metric::Euclidean => cache.eucl_grad_derivative(u),
        }
    }

    /// `Γ_K(U, V)` from `Γ^c_{ab} = ½ g^{cd}(∂_a g_{db} + ∂_b g_{da} − ∂_d g_{ab})`.
    ///
    /// With `g = W⊗I_m` and `∂_a g = DW[E_a]⊗I_m` this reads
    /// `Γ(U,V) = ½ (V·DW[U] + U·DW[V] − Z)·W⁻¹` where
    /// `Z_a = Tr(V·DW[E_a]·Uᵀ)`.
    pub fn christoffel(self, cache: &GeometryCache, u: &Matrix, v: &Matrix) -> Result<Matrix> {
        check_tangent(cache, u)?;
        check_tangent(cache, v)?;
        let (m, n) = cache.gain_shape();
        match self {
            Metric::Euclidean => Ok(Matrix::zeros(m, n)),
            Metric::Lyapunov => {
                let lambda_min = linalg::lambda_min_sym(cache.y());
                if lambda_min <= METRIC_FLOOR {
                    return Err(Error::SingularMetric { lambda_min });
                }
                let partials = cache.covariance_partials()?;
                let mut dw_u = Matrix::zeros(n, n);
                let mut dw_v = Matrix::zeros(n, n);
                let mut z = Matrix::zeros(m, n);
                let ut = u.transpose();
                for (a, d) in partials.iter().enumerate() {
                    let (i, j) = (a % m, a / m);
                    dw_u += d * u[(i, j)];
                    dw_v += d * v[(i, j)];
                    z[(i, j)] = linalg::trace_product(&(v * d), &ut);
                }
                Ok((v * dw_u + u * dw_v - z) * cache.y_inv() * 0.5)
            }
        }
    }

    /// Ambient covariant Hessian `Hess f[U] = D(grad f)[U] + Γ(U, grad f)`.
    pub fn hessian_apply(self, cache: &GeometryCache, u: &Matrix) -> Result<Matrix> {
        let dg = self.gradient_derivative(cache, u)?;
        let gamma = self.christoffel(cache, u, self.gradient(cache))?;
        Ok(dg + gamma)
    }
}

pub(crate) fn check_tangent(cache: &GeometryCache, u: &Matrix) -> Result<()> {
    let (m, n) = cache.gain_shape();
    ensure_shape(u, m, n)
}

/// `g_K(U, V) = Tr(U·Y_K·Vᵀ)`.
pub fn metric_inner(cache: &GeometryCache, u: &Matrix, v: &Matrix) -> Result<f64> {
    Metric::Lyapunov.inner(cache, u, v)
}

/// `DY_K[U]`.
pub fn metric_derivative(cache: &GeometryCache, u: &Matrix) -> Result<Matrix> {
    Metric::Lyapunov.weight_derivative(cache, u)
}

pub fn christoffel_apply(cache: &GeometryCache, u: &Matrix, v: &Matrix) -> Result<Matrix> {
    Metric::Lyapunov.christoffel(cache, u, v)
}

pub fn ambient_hessian_apply(cache: &GeometryCache, u: &Matrix) -> Result<Matrix> {
    Metric::Lyapunov.hessian_apply(cache, u)
}

/// Surrogate distance `‖K₁ − K₂‖_{g_{K₁}}`, where `cache` is built at `K₁`.
pub fn surrogate_distance(cache: &GeometryCache, other: &Matrix) -> Result<f64> {
    let diff = cache.k() - other;
    Metric::Lyapunov.norm(cache, &diff)
}
