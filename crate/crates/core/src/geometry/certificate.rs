use crate::error::Result;
use crate::geometry::cache::GeometryCache;
use crate::geometry::plant::{CostPair, PlantModel};
use crate::linalg::{self, ensure_shape, LyapunovOperator, Matrix};

/// Step-size bound `s_K = λ_min(𝒬) / (2·λ_max(𝕃(A_clᵀ, 𝒬))·‖BG‖₂)` with
/// `𝒬 = Q + KᵀRK`. Every `η ∈ [0, s_K]` keeps `K + ηG` stabilizing.
/// Returns `+∞` when `BG = 0`.
pub fn stability_certificate(plant: &PlantModel, cost: &CostPair, k: &Matrix, g: &Matrix) -> Result<f64> {
    ensure_shape(k, plant.input_dim(), plant.state_dim())?;
    ensure_shape(g, plant.input_dim(), plant.state_dim())?;
    cost.check_dims(plant)?;
    let weight = cost.state_weight(k);
    let a_cl = plant.closed_loop(k);
    let value = LyapunovOperator::new(&a_cl.transpose())?.solve(&weight)?;
    Ok(certificate_from_parts(&weight, &value, &(plant.b() * g)))
}

/// Same bound using the value matrix already held by `cache` (for which
/// `𝕃(A_clᵀ, Q + KᵀRK) = P_K`).
pub fn certificate_from_cache(cache: &GeometryCache, g: &Matrix) -> Result<f64> {
    let (m, n) = cache.gain_shape();
    ensure_shape(g, m, n)?;
    Ok(certificate_from_parts(
        cache.state_weight(),
        cache.p(),
        &(cache.plant().b() * g),
    ))
}

fn certificate_from_parts(weight: &Matrix, value: &Matrix, bg: &Matrix) -> f64 {
    let bg_norm = linalg::spectral_norm(bg);
    if bg_norm == 0.0 {
        return f64::INFINITY;
    }
    linalg::lambda_min_sym(weight) / (2.0 * linalg::lambda_max_sym(value) * bg_norm)
}
