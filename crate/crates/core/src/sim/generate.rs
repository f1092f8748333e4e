//! Seeded generation of plants, sparsity masks and cost sequences.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{ConstraintSet, CostPair, PlantModel};
use crate::linalg::{self, Matrix};
use crate::sim::rng::SeedStream;

const MAX_PLANT_ATTEMPTS: u64 = 64;

/// `A`, `B` with i.i.d. standard normal entries, `A` rescaled to spectral
/// radius `target_rho`, `W = I`.
///
/// A draw with `ρ(A) = 0` (or one that fails validation) is retried on the
/// next sub-stream of `seed`.
pub fn generate_plant(seed: u64, n: usize, m: usize, target_rho: f64) -> Result<PlantModel> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidModel("n and m must be positive".into()));
    }
    if !(target_rho > 0.0 && target_rho < 1.0) {
        return Err(Error::InvalidModel(format!("target_rho {target_rho} outside (0, 1)")));
    }
    for attempt in 0..MAX_PLANT_ATTEMPTS {
        let mut stream = SeedStream::with_stream(seed, attempt);
        let a = stream.normal_matrix(n, n);
        let b = stream.normal_matrix(n, m);
        let rho = linalg::spectral_radius(&a)?;
        if rho <= f64::EPSILON {
            continue;
        }
        let a = a * (target_rho / rho);
        if let Ok(plant) = PlantModel::with_isotropic_noise(a, b, 1.0) {
            return Ok(plant);
        }
    }
    Err(Error::DegenerateDraw(format!(
        "no admissible plant after {MAX_PLANT_ATTEMPTS} attempts for seed {seed}"
    )))
}

/// Entrywise mask pinning `⌊density·mn⌋` entries of `K ∈ R^{m×n}` to zero,
/// positions drawn without replacement.
pub fn generate_constraint_mask(seed: u64, n: usize, m: usize, density: f64) -> Result<ConstraintSet> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidConstraint(format!("mask density {density} outside [0, 1]")));
    }
    let total = m * n;
    let count = (density * total as f64 + 1e-9).floor() as usize;
    let mut stream = SeedStream::new(seed);
    let mut mask = DMatrix::from_element(m, n, false);
    for a in stream.sample_without_replacement(total, count) {
        mask[(a % m, a / m)] = true;
    }
    Ok(ConstraintSet::mask(mask))
}

/// `Q_t = I + vf·N_tᵀN_t` and `R_t = I + vf·M_tᵀM_t` with diagonal `N_t`,
/// `M_t` whose entries are uniform on `(0, 1)`.
///
/// The uniform draws do not depend on `variation_factor`, so sequences
/// generated from one seed at different factors share their noise.
pub fn generate_cost_sequence(
    seed: u64,
    horizon: usize,
    variation_factor: f64,
    n: usize,
    m: usize,
) -> Result<Vec<CostPair>> {
    if !(variation_factor >= 0.0) || !variation_factor.is_finite() {
        return Err(Error::InvalidCost(format!(
            "variation factor {variation_factor} must be finite and non-negative"
        )));
    }
    let mut stream = SeedStream::new(seed);
    let diag = |dim: usize, stream: &mut SeedStream| {
        let mut out = Matrix::identity(dim, dim);
        for i in 0..dim {
            let u = stream.open_uniform();
            out[(i, i)] += variation_factor * u * u;
        }
        out
    };
    (0..horizon)
        .map(|_| {
            let q = diag(n, &mut stream);
            let r = diag(m, &mut stream);
            CostPair::new(q, r)
        })
        .collect()
}

/// Trace cap `C = max(n, m)·(1 + vf)` satisfied by every generated pair.
pub fn cost_trace_cap(n: usize, m: usize, variation_factor: f64) -> f64 {
    n.max(m) as f64 * (1.0 + variation_factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_radius_and_determinism() {
        let p1 = generate_plant(42, 6, 3, 0.8).unwrap();
        let p2 = generate_plant(42, 6, 3, 0.8).unwrap();
        assert_eq!(p1, p2);
        assert_eq!((p1.state_dim(), p1.input_dim()), (6, 3));
        let rho = linalg::spectral_radius(p1.a()).unwrap();
        assert!((rho - 0.8).abs() < 1e-9);
        assert_eq!(p1.w(), &Matrix::identity(6, 6));
        assert_ne!(generate_plant(43, 6, 3, 0.8).unwrap(), p1);
    }

    #[test]
    fn mask_counts() {
        assert_eq!(generate_constraint_mask(1, 6, 3, 0.5).unwrap().coord_matrix().nrows(), 9);
        assert_eq!(generate_constraint_mask(1, 6, 3, 0.0).unwrap().tangent_dim(), 18);
        assert_eq!(generate_constraint_mask(1, 6, 3, 1.0).unwrap().tangent_dim(), 0);
        let c = generate_constraint_mask(1, 6, 3, 0.5).unwrap();
        assert!(c.is_feasible(&Matrix::zeros(3, 6), 0.0));
    }

    #[test]
    fn cost_sequence_bounds() {
        let seq = generate_cost_sequence(3, 50, 0.7, 6, 3).unwrap();
        assert_eq!(seq.len(), 50);
        for pair in &seq {
            let (lo, hi) = linalg::sym_eig_extremes(pair.q()).unwrap();
            assert!(lo >= 1.0 && hi <= 1.7);
            assert!(pair.q().trace() <= cost_trace_cap(6, 3, 0.7));
            assert!(pair.r().trace() <= cost_trace_cap(6, 3, 0.7));
        }
        let flat = generate_cost_sequence(3, 5, 0.0, 4, 2).unwrap();
        assert!(flat.iter().all(|p| p == &CostPair::identity(4, 2)));
    }
}
