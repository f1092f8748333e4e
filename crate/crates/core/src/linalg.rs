//! Dense real-matrix kernels: discrete Lyapunov and Riccati solvers, spectral
//! radius and symmetric eigenvalue extremes.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. Vectorization is column-major
//! (`vec(X)` stacks columns), so `vec(A X Bᵀ) = (B ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// A closed loop whose spectral radius exceeds `1 - STABILITY_MARGIN` is
/// treated as unstable by the Lyapunov solver.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Relative symmetry tolerance used when validating symmetric inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative pivot threshold below which the vectorized Lyapunov system is
/// declared singular.
const SINGULAR_PIVOT: f64 = 1e-14;

pub fn ensure_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_shape(m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            expected: (rows, cols),
            found: m.shape(),
        });
    }
    Ok(())
}

/// Largest absolute deviation from symmetry, relative to `1 + ‖M‖_F`.
pub fn asymmetry(m: &Matrix) -> f64 {
    (m - m.transpose()).norm() / (1.0 + m.norm())
}

pub fn is_symmetric(m: &Matrix) -> bool {
    m.is_square() && asymmetry(m) <= SYMMETRY_TOL
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Column-major vectorization.
pub fn vectorize(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Vector, rows: usize, cols: usize) -> Matrix {
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    // Tr(A B) without forming the product.
    a.component_mul(&b.transpose()).sum()
}

/// Maximum eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(m[(0, 0)].abs());
    }
    let eig = m.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn sym_eig_extremes(m: &Matrix) -> Result<(f64, f64)> {
    let n = ensure_square(m)?;
    let skew = asymmetry(m);
    if skew > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: skew });
    }
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    Ok((eig.min(), eig.max()))
}

/// Smallest eigenvalue after symmetrizing; for internal use on matrices that
/// are symmetric up to rounding.
pub(crate) fn lambda_min_sym(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

pub(crate) fn lambda_max_sym(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().max()
}

/// Factorized operator `X ↦ X − A X Aᵀ` for repeated Lyapunov solves with the
/// same `A`.
#[derive(Debug, Clone)]
pub struct LyapunovOperator {
    a: Matrix,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LyapunovOperator {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = ensure_square(a)?;
        let radius = spectral_radius(a)?;
        if radius >= 1.0 - STABILITY_MARGIN {
            return Err(Error::NotStable { radius });
        }
        let system = Matrix::identity(n * n, n * n) - a.kronecker(a);
        let lu = system.lu();
        let u = lu.u();
        let scale = u.diagonal().amax().max(f64::MIN_POSITIVE);
        if u.diagonal().iter().any(|d| d.abs() <= SINGULAR_PIVOT * scale) {
            return Err(Error::SingularSolve);
        }
        Ok(Self { a: a.clone(), lu })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Solves `X = A X Aᵀ + Z`. One step of iterative refinement is applied.
    pub fn solve(&self, z: &Matrix) -> Result<Matrix> {
        let n = self.dim();
        ensure_shape(z, n, n)?;
        let rhs = vectorize(z);
        let mut x = self.lu.solve(&rhs).ok_or(Error::SingularSolve)?;
        let xm = unvectorize(&x, n, n);
        let residual = z - (&xm - &self.a * &xm * self.a.transpose());
        if let Some(dx) = self.lu.solve(&vectorize(&residual)) {
            x += dx;
        }
        let out = unvectorize(&x, n, n);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSolve);
        }
        if is_symmetric(z) {
            Ok(symmetrize(&out))
        } else {
            Ok(out)
        }
    }
}

/// Unique solution `X` of `X = A X Aᵀ + Z` for a stable `A`.
pub fn solve_discrete_lyapunov(a: &Matrix, z: &Matrix) -> Result<Matrix> {
    LyapunovOperator::new(a)?.solve(z)
}

/// `‖X − A X Aᵀ − Z‖_F`.
pub fn lyapunov_residual(a: &Matrix, z: &Matrix, x: &Matrix) -> f64 {
    (x - a * x * a.transpose() - z).norm()
}

#[derive(Debug, Clone, Copy)]
pub struct DareOptions {
    /// Stop once the Riccati residual is below `residual_tol · (1 + ‖Q‖)`.
    pub residual_tol: f64,
    /// Residual accepted when the iteration stalls at rounding level.
    pub accept_tol: f64,
    pub max_iter: usize,
    /// Iterations of the Riccati difference recursion used to find a
    /// stabilizing seed when `A` itself is unstable.
    pub seed_iter: usize,
}

impl Default for DareOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            accept_tol: 1e-10,
            max_iter: 100,
            seed_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DareSolution {
    pub p: Matrix,
    /// Optimal gain for `u = K x`, i.e. `K = −(R + BᵀPB)⁻¹BᵀPA`.
    pub k: Matrix,
    pub iterations: usize,
    pub residual: f64,
}

pub fn riccati_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> f64 {
    let btpa = b.transpose() * p * a;
    let s = r + b.transpose() * p * b;
    match s.clone().cholesky() {
        Some(ch) => {
            let rhs = a.transpose() * p * a - btpa.transpose() * ch.solve(&btpa) + q;
            (p - rhs).norm()
        }
        None => f64::INFINITY,
    }
}

fn riccati_gain(a: &Matrix, b: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let s = r + b.transpose() * p * b;
    let ch = symmetrize(&s).cholesky().ok_or(Error::SingularSolve)?;
    Ok(-ch.solve(&(b.transpose() * p * a)))
}

/// Riccati difference recursion from `P = Q` until the induced gain is
/// stabilizing.
fn stabilizing_seed(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    opts: &DareOptions,
) -> Result<Matrix> {
    let mut p = q.clone();
    for _ in 0..opts.seed_iter {
        let k = riccati_gain(a, b, r, &p)?;
        if spectral_radius(&(a + b * &k))? < 1.0 - 1e-6 {
            return Ok(k);
        }
        let closed = a + b * &k;
        p = symmetrize(&(closed.transpose() * &p * &closed + q + k.transpose() * r * &k));
        if p.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::NotStabilizable)
}

/// Stabilizing solution of the discrete algebraic Riccati equation by
/// Newton–Kleinman iteration.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<DareSolution> {
    solve_dare_with(a, b, q, r, &DareOptions::default())
}

pub fn solve_dare_with(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    opts: &DareOptions,
) -> Result<DareSolution> {
    let n = ensure_square(a)?;
    let m = b.ncols();
    ensure_shape(b, n, m)?;
    ensure_shape(q, n, n)?;
    ensure_shape(r, m, m)?;
    if lambda_min_sym(q) <= 0.0 {
        return Err(Error::InvalidCost("Q must be positive definite".into()));
    }
    if lambda_min_sym(r) <= 0.0 {
        return Err(Error::InvalidCost("R must be positive definite".into()));
    }

    let mut k = if spectral_radius(a)? < 1.0 - 1e-6 {
        Matrix::zeros(m, n)
    } else {
        stabilizing_seed(a, b, q, r, opts)?
    };

    let q_scale = 1.0 + q.norm();
    let mut p_prev: Option<Matrix> = None;
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let closed = a + b * &k;
        let weight = q + k.transpose() * r * &k;
        let p = LyapunovOperator::new(&closed.transpose())
            .map_err(|e| match e {
                Error::NotStable { .. } => Error::NotStabilizable,
                other => other,
            })?
            .solve(&symmetrize(&weight))?;
        k = riccati_gain(a, b, r, &p)?;
        residual = riccati_residual(a, b, q, r, &p);
        let stalled = p_prev
            .as_ref()
            .is_some_and(|prev| (&p - prev).norm() <= 1e-14 * (1.0 + p.norm()));
        if residual <= opts.residual_tol * q_scale || (stalled && residual <= opts.accept_tol * q_scale)
        {
            return Ok(DareSolution {
                p,
                k,
                iterations: iter,
                residual,
            });
        }
        p_prev = Some(p);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}
