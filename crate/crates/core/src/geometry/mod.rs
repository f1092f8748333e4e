//! Riemannian geometry of the stabilizing-controller manifold under the
//! covariance-weighted metric `g_K(U, V) = Tr(U·Y_K·Vᵀ)`.

mod cache;
mod certificate;
mod constraint;
mod metric;
mod plant;
mod submanifold;

pub use cache::{GeometryCache, METRIC_FLOOR};
pub use certificate::{certificate_from_cache, stability_certificate};
pub use constraint::{ConstraintKind, ConstraintSet};
pub use metric::{
    ambient_hessian_apply, christoffel_apply, metric_derivative, metric_inner, surrogate_distance,
    Metric,
};
pub use plant::{CostPair, PlantModel};
pub use submanifold::{
    newton_direction, submanifold_gradient, submanifold_hessian_apply, tangent_project,
    DirectionStatus, NewtonDirection, Submanifold, NEWTON_PD_TOL,
};

/// Builds the per-gain cache for `(plant, cost)` at `k`.
pub fn closed_loop_cache(
    plant: &PlantModel,
    cost: &CostPair,
    k: &crate::linalg::Matrix,
) -> crate::error::Result<GeometryCache> {
    GeometryCache::new(plant, cost, k)
}
