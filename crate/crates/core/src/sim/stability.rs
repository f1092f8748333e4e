//! Strong-stability diagnostics for a sequence of applied gains.
//!
//! Each closed loop is written `A + BK_t = H_t L_t H_t⁻¹`. The primary
//! construction takes `H_t` as the (complex) eigenvector matrix with unit
//! columns and `L_t` diagonal. Columns of `H_{t+1}` are matched to those of
//! `H_t` and phase-aligned so that the link `H_{t+1}⁻¹H_t` stays close to the
//! identity for slowly varying gains. When the eigenvector matrix is
//! ill-conditioned the complex Schur form is used instead, with a diagonal
//! rescaling that shrinks the strictly upper triangle.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::geometry::PlantModel;
use crate::linalg::{self, Matrix};
use crate::sim::rollout::expected_cost_trace;
use crate::geometry::CostPair;

type CMatrix = DMatrix<Complex<f64>>;

/// Eigenvector conditioning beyond which the Schur fallback is used.
pub const EIGEN_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMethod {
    Eigen,
    Schur,
}

/// `A_cl = H L H⁻¹` together with the norms Definition 1 asks about.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub h: CMatrix,
    pub h_inv: CMatrix,
    pub l_norm: f64,
    pub h_norm: f64,
    pub h_inv_norm: f64,
    pub method: DecompositionMethod,
}

impl Decomposition {
    pub fn condition(&self) -> f64 {
        self.h_norm * self.h_inv_norm
    }
}

fn complexify(m: &Matrix) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

fn cnorm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

fn finish(h: CMatrix, l_norm: f64, method: DecompositionMethod) -> Result<Decomposition> {
    let h_inv = h.clone().try_inverse().ok_or(Error::DefectiveClosedLoop { condition: f64::INFINITY })?;
    Ok(Decomposition {
        h_norm: cnorm(&h),
        h_inv_norm: cnorm(&h_inv),
        h,
        h_inv,
        l_norm,
        method,
    })
}

/// Eigenvector matrix with unit columns; `None` when an eigenvalue cluster
/// lacks a full set of eigenvectors.
fn eigen_basis(a: &Matrix) -> Option<(CMatrix, f64)> {
    let n = a.nrows();
    let eigs: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    let scale = linalg::spectral_norm(a).max(1.0);
    let cluster_tol = 1e-8 * scale;
    let ca = complexify(a);
    let mut used = vec![false; n];
    let mut h = CMatrix::zeros(n, n);
    let mut col = 0;
    let mut l_norm: f64 = 0.0;
    for i in 0..n {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..n).filter(|&j| !used[j] && (eigs[j] - eigs[i]).norm() <= cluster_tol).collect();
        let lambda = members.iter().map(|&j| eigs[j]).sum::<Complex<f64>>() / members.len() as f64;
        for &j in &members {
            used[j] = true;
        }
        l_norm = l_norm.max(lambda.norm());
        let shifted = &ca - CMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&p, &q| svd.singular_values[p].total_cmp(&svd.singular_values[q]));
        let r = members.len();
        if svd.singular_values[order[r - 1]] > 1e-6 * scale {
            return None;
        }
        for &idx in order.iter().take(r) {
            let v = v_t.row(idx).adjoint();
            let norm = v.norm();
            h.set_column(col, &(v / Complex::new(norm, 0.0)));
            col += 1;
        }
    }
    Some((h, l_norm))
}

/// Complex Schur form `A = Q T Q*` rescaled by `D = diag(δ^i)` until the
/// strictly upper part of `D⁻¹TD` leaves `‖L‖` within the stability margin.
fn schur_basis(a: &Matrix) -> Result<Decomposition> {
    let n = a.nrows();
    let (q, t) = complexify(a).schur().unpack();
    let rho = (0..n).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
    let target = rho + 0.5 * (1.0 - rho).max(0.0);
    let mut delta: f64 = 1.0;
    while delta > 1e-12 {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| Complex::new(delta.powi(i as i32), 0.0)));
        let d_inv = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
            Complex::new(delta.powi(-(i as i32)), 0.0)
        }));
        let l = &d_inv * &t * &d;
        let l_norm = cnorm(&l);
        if l_norm <= target || rho >= 1.0 {
            return finish(&q * d, l_norm, DecompositionMethod::Schur);
        }
        delta *= 0.5;
    }
    Err(Error::DefectiveClosedLoop { condition: f64::INFINITY })
}

/// Decomposition of one closed loop.
pub fn decompose(a_cl: &Matrix) -> Result<Decomposition> {
    linalg::ensure_square(a_cl)?;
    if let Some((h, l_norm)) = eigen_basis(a_cl) {
        if let Ok(dec) = finish(h, l_norm, DecompositionMethod::Eigen) {
            if dec.condition() <= EIGEN_CONDITION_LIMIT {
                return Ok(dec);
            }
        }
    }
    schur_basis(a_cl)
}

/// `(κ, γ)` of a single gain: `κ = max(‖K‖, ‖H‖‖H⁻¹‖)`, `γ = 1 − ‖L‖`.
pub fn strong_stability(plant: &PlantModel, k: &Matrix) -> Result<(f64, f64)> {
    let dec = decompose(&plant.closed_loop(k))?;
    Ok((linalg::spectral_norm(k).max(dec.condition()), 1.0 - dec.l_norm))
}

/// Permutes and phase-aligns the columns of `next` against `prev`.
fn align_columns(prev: &CMatrix, next: &CMatrix) -> CMatrix {
    let n = prev.ncols();
    let overlap = prev.adjoint() * next;
    let mut taken_prev = vec![false; n];
    let mut taken_next = vec![false; n];
    let mut out = CMatrix::zeros(n, n);
    for _ in 0..n {
        let mut best = (0, 0, -1.0);
        for i in (0..n).filter(|&i| !taken_prev[i]) {
            for j in (0..n).filter(|&j| !taken_next[j]) {
                let v = overlap[(i, j)].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (i, j, mag) = best;
        taken_prev[i] = true;
        taken_next[j] = true;
        let phase = if mag > 0.0 {
            overlap[(i, j)].conj() / mag
        } else {
            Complex::new(1.0, 0.0)
        };
        out.set_column(i, &(next.column(j) * phase));
    }
    out
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RoundStability {
    pub t: usize,
    pub kappa: f64,
    pub gamma: f64,
    /// `‖H_{t+1}⁻¹H_t‖`; `None` for the last round.
    pub link_norm: Option<f64>,
    /// `‖X_t − X^s_t‖₂`.
    pub cov_gap: f64,
    /// Right-hand side of the sequential covariance bound at `t`.
    pub gap_bound: f64,
    pub method: DecompositionMethod,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityReport {
    pub rounds: Vec<RoundStability>,
    /// Sequential constant `max(max‖K_t‖, max‖H_t‖·max‖H_t⁻¹‖)`.
    pub kappa: f64,
    /// `min_t γ_t`.
    pub gamma: f64,
    /// Every link satisfies `‖H_{t+1}⁻¹H_t‖ ≤ 1 + γ/2`.
    pub links_ok: bool,
    /// Every gap is below its bound (meaningful when `links_ok`).
    pub bound_holds: bool,
}

/// Per-round `(κ_t, γ_t)`, links and covariance gaps for applied gains
/// starting from `X_1 = x1_cov`, plus the sequential covariance bound
///
/// `‖X_t − X^s_t‖ ≤ e^{−(t−1)γ}κ²‖X_1 − X^s_1‖ + κ² Σ_{i=0}^{t−2} (1−γ/2)^{2i} ‖X^s_{t−i} − X^s_{t−1−i}‖`.
pub fn strong_stability_report(plant: &PlantModel, gains: &[Matrix], x1_cov: &Matrix) -> Result<StabilityReport> {
    let costs = vec![CostPair::identity(plant.state_dim(), plant.input_dim()); gains.len()];
    let expected = expected_cost_trace(plant, gains, &costs, x1_cov)?;
    let mut decs = Vec::with_capacity(gains.len());
    for (i, k) in gains.iter().enumerate() {
        let mut dec = decompose(&plant.closed_loop(k)).map_err(|e| e.at_round(i + 1, "stability"))?;
        if let (Some(prev), DecompositionMethod::Eigen) = (decs.last(), dec.method) {
            let prev: &Decomposition = prev;
            if prev.method == DecompositionMethod::Eigen {
                dec.h = align_columns(&prev.h, &dec.h);
                dec.h_inv = dec.h.clone().try_inverse().ok_or(Error::DefectiveClosedLoop { condition: f64::INFINITY })?;
            }
        }
        decs.push(dec);
    }

    let k_max = gains.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
    let h_max = decs.iter().map(|d| d.h_norm).fold(0.0, f64::max);
    let h_inv_max = decs.iter().map(|d| d.h_inv_norm).fold(0.0, f64::max);
    let kappa = k_max.max(h_max * h_inv_max);
    let gamma = decs.iter().map(|d| 1.0 - d.l_norm).fold(f64::INFINITY, f64::min);

    let mut rounds = Vec::with_capacity(gains.len());
    let mut links_ok = true;
    let mut bound_holds = true;
    let ratio = (1.0 - gamma / 2.0).powi(2);
    let mut drift_sum = 0.0;
    let gap1 = expected.gaps.first().copied().unwrap_or(0.0);
    for (i, dec) in decs.iter().enumerate() {
        let link_norm = decs.get(i + 1).map(|next| cnorm(&(&next.h_inv * &dec.h)));
        if let Some(link) = link_norm {
            links_ok &= link <= 1.0 + gamma / 2.0;
        }
        if i > 0 {
            let drift = linalg::spectral_norm(&(&expected.steady_states[i] - &expected.steady_states[i - 1]));
            drift_sum = drift + ratio * drift_sum;
        }
        let gap_bound = (-(i as f64) * gamma).exp() * kappa * kappa * gap1 + kappa * kappa * drift_sum;
        let cov_gap = expected.gaps[i];
        bound_holds &= cov_gap <= gap_bound * (1.0 + 1e-9) + 1e-12;
        rounds.push(RoundStability {
            t: i + 1,
            kappa: linalg::spectral_norm(&gains[i]).max(dec.condition()),
            gamma: 1.0 - dec.l_norm,
            link_norm,
            cov_gap,
            gap_bound,
            method: dec.method,
        });
    }
    Ok(StabilityReport {
        rounds,
        kappa,
        gamma,
        links_ok,
        bound_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_closed_loop() {
        let plant = PlantModel::with_isotropic_noise(Matrix::identity(3, 3) * 0.5, Matrix::identity(3, 1), 1.0).unwrap();
        let (kappa, gamma) = strong_stability(&plant, &Matrix::zeros(1, 3)).unwrap();
        assert!((kappa - 1.0).abs() < 1e-12);
        assert!((gamma - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decomposition_reconstructs() {
        let a = Matrix::from_row_slice(3, 3, &[0.2, 0.7, 0.0, -0.6, 0.3, 0.1, 0.05, 0.0, -0.4]);
        let dec = decompose(&a).unwrap();
        assert_eq!(dec.method, DecompositionMethod::Eigen);
        let l = &dec.h_inv * complexify(&a) * &dec.h;
        let off: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| l[(i, j)].norm())
            .sum();
        assert!(off < 1e-10);
        let rho = linalg::spectral_radius(&a).unwrap();
        assert!((dec.l_norm - rho).abs() < 1e-10);
    }

    #[test]
    fn jordan_block_uses_schur() {
        let a = Matrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        let dec = decompose(&a).unwrap();
        assert_eq!(dec.method, DecompositionMethod::Schur);
        assert!(dec.l_norm < 1.0);
        let l = &dec.h_inv * complexify(&a) * &dec.h;
        assert!((cnorm(&l) - dec.l_norm).abs() < 1e-10);
    }

    #[test]
    fn constant_sequence_has_unit_links() {
        let a = Matrix::from_row_slice(2, 2, &[0.3, 0.4, -0.5, 0.1]);
        let plant = PlantModel::with_isotropic_noise(a, Matrix::identity(2, 1), 1.0).unwrap();
        let gains = vec![Matrix::zeros(1, 2); 6];
        let report = strong_stability_report(&plant, &gains, &Matrix::identity(2, 2)).unwrap();
        for r in &report.rounds[..5] {
            assert!((r.link_norm.unwrap() - 1.0).abs() < 1e-10);
        }
        assert!(report.links_ok && report.bound_holds);
    }
}
