use crate::error::{Error, Result};
use crate::linalg::{self, ensure_shape, Matrix};

/// Known LTI plant `x⁺ = A x + B u + w`, `w ~ N(0, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: Matrix,
    b: Matrix,
    w: Matrix,
    sigma_sq: f64,
}

impl PlantModel {
    /// Validates dimensions, `W ⪰ σ²I`, and stabilizability of `(A, B)`.
    pub fn new(a: Matrix, b: Matrix, w: Matrix, sigma_sq: f64) -> Result<Self> {
        let n = linalg::ensure_square(&a)?;
        if n == 0 {
            return Err(Error::InvalidModel("state dimension must be positive".into()));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: (n, b.ncols().max(1)),
                found: b.shape(),
            });
        }
        ensure_shape(&w, n, n)?;
        if [&a, &b, &w].iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidModel("non-finite entries".into()));
        }
        if !(sigma_sq > 0.0) {
            return Err(Error::InvalidModel("sigma_sq must be positive".into()));
        }
        let (w_min, _) = linalg::sym_eig_extremes(&w)?;
        if w_min < sigma_sq * (1.0 - 1e-12) {
            return Err(Error::InvalidModel(format!(
                "noise covariance λ_min {w_min} is below sigma_sq {sigma_sq}"
            )));
        }
        let m = b.ncols();
        linalg::solve_dare(&a, &b, &Matrix::identity(n, n), &Matrix::identity(m, m))?;
        Ok(Self {
            a,
            b,
            w: linalg::symmetrize(&w),
            sigma_sq,
        })
    }

    /// Plant with `W = σ² I`.
    pub fn with_isotropic_noise(a: Matrix, b: Matrix, sigma_sq: f64) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, b, Matrix::identity(n, n) * sigma_sq, sigma_sq)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self, k: &Matrix) -> Matrix {
        &self.a + &self.b * k
    }

    pub fn closed_loop_radius(&self, k: &Matrix) -> Result<f64> {
        ensure_shape(k, self.input_dim(), self.state_dim())?;
        linalg::spectral_radius(&self.closed_loop(k))
    }

    pub fn is_stabilizing(&self, k: &Matrix) -> bool {
        self.closed_loop_radius(k).is_ok_and(|r| r < 1.0)
    }
}

/// One round's positive-definite cost pair `(Q_t, R_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    q: Matrix,
    r: Matrix,
}

impl CostPair {
    pub fn new(q: Matrix, r: Matrix) -> Result<Self> {
        Self::with_trace_cap(q, r, f64::INFINITY)
    }

    /// Also enforces `Tr(Q), Tr(R) ≤ cap`.
    pub fn with_trace_cap(q: Matrix, r: Matrix, cap: f64) -> Result<Self> {
        for (name, mat) in [("Q", &q), ("R", &r)] {
            let (lo, _) = linalg::sym_eig_extremes(mat)?;
            if !(lo > 0.0) {
                return Err(Error::InvalidCost(format!("{name} is not positive definite")));
            }
            if mat.trace() > cap {
                return Err(Error::InvalidCost(format!(
                    "Tr({name}) = {} exceeds cap {cap}",
                    mat.trace()
                )));
            }
        }
        Ok(Self {
            q: linalg::symmetrize(&q),
            r: linalg::symmetrize(&r),
        })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            q: Matrix::identity(n, n),
            r: Matrix::identity(m, m),
        }
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `Q + Kᵀ R K`.
    pub fn state_weight(&self, k: &Matrix) -> Matrix {
        linalg::symmetrize(&(&self.q + k.transpose() * &self.r * k))
    }

    pub fn check_dims(&self, plant: &PlantModel) -> Result<()> {
        ensure_shape(&self.q, plant.state_dim(), plant.state_dim())?;
        ensure_shape(&self.r, plant.input_dim(), plant.input_dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_noise_below_floor() {
        let err = PlantModel::new(
            Matrix::identity(2, 2) * 0.5,
            Matrix::identity(2, 2),
            Matrix::identity(2, 2) * 0.5,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn rejects_unstabilizable_pair() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let err = PlantModel::with_isotropic_noise(a, b, 1.0).unwrap_err();
        assert_eq!(err, Error::NotStabilizable);
    }

    #[test]
    fn cost_pair_validation() {
        assert!(CostPair::new(Matrix::identity(2, 2), Matrix::identity(1, 1)).is_ok());
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(CostPair::new(bad, Matrix::identity(1, 1)).is_err());
        let capped = CostPair::with_trace_cap(Matrix::identity(3, 3), Matrix::identity(1, 1), 2.5);
        assert!(matches!(capped, Err(Error::InvalidCost(_))));
    }
}
