use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, ensure_shape, Matrix, Vector};

/// Relative singular-value threshold used for rank decisions.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    None,
    /// `C K = D` with `C ∈ R^{p×m}` of full row rank.
    RowAffine { c: Matrix, d: Matrix },
    /// Masked entries are pinned to zero.
    EntrywiseMask { mask: DMatrix<bool> },
}

/// Affine restriction on an `m×n` gain, lowered to `M vec(K) = b` in
/// column-major coordinates, together with a basis of the homogeneous
/// solution space (the tangent space of the constrained submanifold).
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    kind: ConstraintKind,
    m: usize,
    n: usize,
    coord: Matrix,
    rhs: Vector,
    basis: Vec<Matrix>,
}

impl ConstraintSet {
    pub fn none(m: usize, n: usize) -> Self {
        let basis = (0..m * n)
            .map(|a| unit(m, n, a % m, a / m))
            .collect();
        Self {
            kind: ConstraintKind::None,
            m,
            n,
            coord: Matrix::zeros(0, m * n),
            rhs: Vector::zeros(0),
            basis,
        }
    }

    /// Every entry pinned to zero; the tangent space is `{0}`.
    pub fn full(m: usize, n: usize) -> Self {
        Self::mask(DMatrix::from_element(m, n, true))
    }

    /// `mask[(i, j)] == true` forces `K_ij = 0`.
    pub fn mask(mask: DMatrix<bool>) -> Self {
        let (m, n) = mask.shape();
        let mut rows = Vec::new();
        let mut basis = Vec::new();
        // column-major walk so coordinates follow vec(K)
        for j in 0..n {
            for i in 0..m {
                let a = i + m * j;
                if mask[(i, j)] {
                    rows.push(a);
                } else {
                    basis.push(unit(m, n, i, j));
                }
            }
        }
        let mut coord = Matrix::zeros(rows.len(), m * n);
        for (r, &a) in rows.iter().enumerate() {
            coord[(r, a)] = 1.0;
        }
        Self {
            kind: ConstraintKind::EntrywiseMask { mask },
            m,
            n,
            coord,
            rhs: Vector::zeros(rows.len()),
            basis,
        }
    }

    pub fn row_affine(c: Matrix, d: Matrix) -> Result<Self> {
        let (p, m) = c.shape();
        let n = d.ncols();
        ensure_shape(&d, p, n)?;
        if p > m {
            return Err(Error::InvalidConstraint(format!(
                "C has more rows ({p}) than the input dimension ({m})"
            )));
        }
        // Pad C to m×m so the SVD returns a complete right basis.
        let mut padded = Matrix::zeros(m, m);
        padded.view_mut((0, 0), (p, m)).copy_from(&c);
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested V");
        let s_max = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * s_max.max(1.0))
            .count();
        if rank != p {
            return Err(Error::InvalidConstraint(format!(
                "C must have full row rank {p}, found rank {rank}"
            )));
        }
        let null: Vec<Vector> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= RANK_TOL * s_max.max(1.0))
            .map(|(idx, _)| v_t.row(idx).transpose())
            .collect();
        let mut basis = Vec::with_capacity(null.len() * n);
        for j in 0..n {
            for v in &null {
                let mut u = Matrix::zeros(m, n);
                u.set_column(j, v);
                basis.push(u);
            }
        }
        let coord = Matrix::identity(n, n).kronecker(&c);
        let rhs = linalg::vectorize(&d);
        Ok(Self {
            kind: ConstraintKind::RowAffine { c, d },
            m,
            n,
            coord,
            rhs,
            basis,
        })
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    /// `(m, n)` gain shape.
    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Coordinate matrix `M` with `M vec(K) = b`.
    pub fn coord_matrix(&self) -> &Matrix {
        &self.coord
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn tangent_basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn tangent_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.coord.nrows() == 0
    }

    /// `‖M vec(K) − b‖`.
    pub fn residual(&self, k: &Matrix) -> f64 {
        (&self.coord * linalg::vectorize(k) - &self.rhs).norm()
    }

    /// `‖M vec(U)‖`.
    pub fn homogeneous_residual(&self, u: &Matrix) -> f64 {
        (&self.coord * linalg::vectorize(u)).norm()
    }

    pub fn is_feasible(&self, k: &Matrix, tol: f64) -> bool {
        k.shape() == (self.m, self.n) && self.residual(k) <= tol
    }

    /// Expands reduced coordinates in the tangent basis.
    pub fn from_reduced(&self, coords: &Vector) -> Matrix {
        self.basis
            .iter()
            .zip(coords.iter())
            .fold(Matrix::zeros(self.m, self.n), |acc, (b, c)| acc + b * *c)
    }

    /// Zeroes masked entries exactly; identity for the other kinds.
    pub fn enforce_mask(&self, k: &mut Matrix) {
        if let ConstraintKind::EntrywiseMask { mask } = &self.kind {
            for (v, &pinned) in k.iter_mut().zip(mask.iter()) {
                if pinned {
                    *v = 0.0;
                }
            }
        }
    }
}

fn unit(m: usize, n: usize, i: usize, j: usize) -> Matrix {
    let mut u = Matrix::zeros(m, n);
    u[(i, j)] = 1.0;
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_basis_and_coordinates() {
        let mask = DMatrix::from_row_slice(2, 3, &[true, false, false, false, true, false]);
        let c = ConstraintSet::mask(mask);
        assert_eq!(c.tangent_dim(), 4);
        assert_eq!(c.coord_matrix().nrows(), 2);
        for b in c.tangent_basis() {
            assert_eq!(c.homogeneous_residual(b), 0.0);
        }
        let mut k = Matrix::from_element(2, 3, 1.0);
        assert!(!c.is_feasible(&k, 1e-12));
        c.enforce_mask(&mut k);
        assert!(c.is_feasible(&k, 0.0));
    }

    #[test]
    fn full_and_none_dimensions() {
        assert_eq!(ConstraintSet::full(3, 6).tangent_dim(), 0);
        assert_eq!(ConstraintSet::none(3, 6).tangent_dim(), 18);
        assert!(ConstraintSet::none(3, 6).is_unconstrained());
    }

    #[test]
    fn row_affine_basis_spans_null_space() {
        let c = Matrix::from_row_slice(1, 3, &[1.0, 2.0, -1.0]);
        let d = Matrix::from_row_slice(1, 2, &[0.5, 0.0]);
        let set = ConstraintSet::row_affine(c.clone(), d).unwrap();
        assert_eq!(set.tangent_dim(), 4);
        let stacked = Matrix::from_columns(
            &set
                .tangent_basis()
                .iter()
                .map(linalg::vectorize)
                .collect::<Vec<_>>(),
        );
        assert_eq!(stacked.rank(1e-10), 4);
        for b in set.tangent_basis() {
            assert!((&c * b).norm() < 1e-14);
        }
    }

    #[test]
    fn row_affine_rejects_rank_deficient() {
        let c = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let d = Matrix::zeros(2, 3);
        assert!(matches!(
            ConstraintSet::row_affine(c, d),
            Err(Error::InvalidConstraint(_))
        ));
    }
}
