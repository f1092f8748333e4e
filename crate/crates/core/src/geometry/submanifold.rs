//! Calculus on the constrained submanifold `S̃ = S ∩ {M vec(K) = b}`:
//! metric projections, restricted gradient and Hessian, and the Newton system.

use nalgebra::linalg::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cache::GeometryCache;
use crate::geometry::constraint::ConstraintSet;
use crate::geometry::metric::{check_tangent, Metric};
use crate::linalg::{self, Matrix, Vector};

/// Reduced Hessians whose smallest eigenvalue falls below
/// `NEWTON_PD_TOL · max(1, λ_max)` trigger the gradient fallback.
pub const NEWTON_PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionStatus {
    Newton,
    GradientFallback,
    /// First-order direction by construction (projected gradient).
    Gradient,
}

impl DirectionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionStatus::Newton => "newton",
            DirectionStatus::GradientFallback => "gradient_fallback",
            DirectionStatus::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonDirection {
    pub direction: Matrix,
    pub status: DirectionStatus,
    /// Restricted gradient `grad h` at the base point.
    pub gradient: Matrix,
    pub grad_norm: f64,
    /// Reduced Hessian before symmetrization.
    pub reduced_hessian: Matrix,
    /// `‖H_red − H_redᵀ‖_F / (1 + ‖H_red‖_F)`.
    pub hessian_asymmetry: f64,
}

/// Metric projection onto the tangent space of a constraint at one point.
#[derive(Debug, Clone)]
pub struct Submanifold<'a> {
    cache: &'a GeometryCache,
    constraint: &'a ConstraintSet,
    metric: Metric,
    /// Columns `G⁻¹ Mᵀ e_r` in `vec` coordinates.
    ginv_mt: Matrix,
    gram: Option<Cholesky<f64, nalgebra::Dyn>>,
}

impl<'a> Submanifold<'a> {
    pub fn new(cache: &'a GeometryCache, constraint: &'a ConstraintSet, metric: Metric) -> Result<Self> {
        let (m, n) = cache.gain_shape();
        if constraint.shape() != (m, n) {
            return Err(Error::DimensionMismatch {
                expected: (m, n),
                found: constraint.shape(),
            });
        }
        let coord = constraint.coord_matrix();
        let p = coord.nrows();
        if p == 0 {
            return Ok(Self {
                cache,
                constraint,
                metric,
                ginv_mt: Matrix::zeros(m * n, 0),
                gram: None,
            });
        }
        let w_inv = metric.weight_inv(cache);
        let mut ginv_mt = Matrix::zeros(m * n, p);
        for r in 0..p {
            let row = linalg::unvectorize(&coord.row(r).transpose(), m, n);
            ginv_mt.set_column(r, &linalg::vectorize(&(row * w_inv.as_ref())));
        }
        let gram = coord * &ginv_mt;
        let gram = linalg::symmetrize(&gram);
        let chol = gram.clone().cholesky().ok_or(Error::SingularConstraint)?;
        let diag_min = chol.l_dirty().diagonal().min();
        let diag_max = chol.l_dirty().diagonal().max();
        if !(diag_min > 1e-8 * diag_max) {
            return Err(Error::SingularConstraint);
        }
        Ok(Self {
            cache,
            constraint,
            metric,
            ginv_mt,
            gram: Some(chol),
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn cache(&self) -> &GeometryCache {
        self.cache
    }

    pub fn constraint(&self) -> &ConstraintSet {
        self.constraint
    }

    /// `Π_K U`.
    pub fn project(&self, u: &Matrix) -> Result<Matrix> {
        check_tangent(self.cache, u)?;
        if self.constraint.tangent_dim() == 0 {
            let (m, n) = self.cache.gain_shape();
            return Ok(Matrix::zeros(m, n));
        }
        Ok(u - self.normal_part(u))
    }

    /// `U − Π_K U`.
    pub fn normal_part(&self, u: &Matrix) -> Matrix {
        let (m, n) = self.cache.gain_shape();
        match &self.gram {
            None => Matrix::zeros(m, n),
            Some(chol) => {
                let lambda = chol.solve(&(self.constraint.coord_matrix() * linalg::vectorize(u)));
                linalg::unvectorize(&(&self.ginv_mt * lambda), m, n)
            }
        }
    }

    /// `grad h = Π_K grad f`.
    pub fn gradient(&self) -> Result<Matrix> {
        self.project(self.metric.gradient(self.cache))
    }

    /// `Hess h[U] = Π(D(Π grad f)[U] + Γ(U, Π grad f))`.
    ///
    /// The derivative of the projector satisfies
    /// `DΠ[U] Z = Π((Z − ΠZ)·DW[U]·W⁻¹)`, so the normal component of the
    /// ambient gradient enters through the weight derivative.
    pub fn hessian_apply(&self, u: &Matrix) -> Result<Matrix> {
        check_tangent(self.cache, u)?;
        let grad = self.metric.gradient(self.cache);
        let normal = self.normal_part(grad);
        let grad_h = grad - &normal;
        let mut inner = self.metric.gradient_derivative(self.cache, u)?;
        inner += self.metric.christoffel(self.cache, u, &grad_h)?;
        if self.gram.is_some() && self.metric == Metric::Lyapunov {
            let dw = self.metric.weight_derivative(self.cache, u)?;
            inner += normal * dw * self.metric.weight_inv(self.cache).as_ref();
        }
        self.project(&inner)
    }

    /// Solves `Hess h[G] = −grad h` in the constraint's tangent basis.
    pub fn newton_direction(&self) -> Result<NewtonDirection> {
        let grad_h = self.gradient()?;
        let grad_norm = self.metric.norm(self.cache, &grad_h)?;
        let basis = self.constraint.tangent_basis();
        let d = basis.len();
        let (m, n) = self.cache.gain_shape();
        if d == 0 {
            return Ok(NewtonDirection {
                direction: Matrix::zeros(m, n),
                status: DirectionStatus::Newton,
                gradient: grad_h,
                grad_norm,
                reduced_hessian: Matrix::zeros(0, 0),
                hessian_asymmetry: 0.0,
            });
        }
        let hess_cols = basis
            .iter()
            .map(|b| self.hessian_apply(b))
            .collect::<Result<Vec<_>>>()?;
        let mut h_red = Matrix::zeros(d, d);
        let mut g_red = Vector::zeros(d);
        for (i, bi) in basis.iter().enumerate() {
            for (j, hj) in hess_cols.iter().enumerate() {
                h_red[(i, j)] = self.metric.inner(self.cache, bi, hj)?;
            }
            g_red[i] = self.metric.inner(self.cache, bi, &grad_h)?;
        }
        let hessian_asymmetry = linalg::asymmetry(&h_red);
        let h_sym = linalg::symmetrize(&h_red);
        let eig = h_sym.clone().symmetric_eigen();
        let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());

        let (mut direction, status) = if lo <= NEWTON_PD_TOL * hi.max(1.0) {
            (-grad_h.clone(), DirectionStatus::GradientFallback)
        } else {
            let rhs = -&g_red;
            let coords = match h_sym.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => {
                    let vt_rhs = eig.eigenvectors.transpose() * rhs;
                    let scaled = vt_rhs.component_div(&eig.eigenvalues);
                    &eig.eigenvectors * scaled
                }
            };
            (self.constraint.from_reduced(&coords), DirectionStatus::Newton)
        };
        self.constraint.enforce_mask(&mut direction);
        Ok(NewtonDirection {
            direction,
            status,
            gradient: grad_h,
            grad_norm,
            reduced_hessian: h_red,
            hessian_asymmetry,
        })
    }
}

/// `g`-orthogonal projection onto the constraint's tangent space.
pub fn tangent_project(cache: &GeometryCache, constraint: &ConstraintSet, u: &Matrix) -> Result<Matrix> {
    Submanifold::new(cache, constraint, Metric::Lyapunov)?.project(u)
}

pub fn submanifold_gradient(cache: &GeometryCache, constraint: &ConstraintSet) -> Result<Matrix> {
    Submanifold::new(cache, constraint, Metric::Lyapunov)?.gradient()
}

pub fn submanifold_hessian_apply(
    cache: &GeometryCache,
    constraint: &ConstraintSet,
    u: &Matrix,
) -> Result<Matrix> {
    Submanifold::new(cache, constraint, Metric::Lyapunov)?.hessian_apply(u)
}

pub fn newton_direction(cache: &GeometryCache, constraint: &ConstraintSet) -> Result<NewtonDirection> {
    Submanifold::new(cache, constraint, Metric::Lyapunov)?.newton_direction()
}
