//! C ABI over `manifold-lqg`.
//!
//! Matrices cross the boundary as dense row-major `double` arrays whose
//! shape is implied by the plant dimensions (`n` states, `m` inputs): gains
//! are `m x n`, `A` and `Q` are `n x n`, `B` is `n x m`, `R` is `m x m`.
//! Plants, costs and constraints live behind opaque handles that the caller
//! releases with the matching `*_free` function. Every fallible call returns
//! an [`MlqStatus`]; the message of the most recent failure on the calling
//! thread is available from [`mlq_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use manifold_lqg::geometry::{stability_certificate, ConstraintSet, CostPair, DirectionStatus, GeometryCache, PlantModel};
use manifold_lqg::linalg::{self, Matrix};
use manifold_lqg::optimizers::{self, offline_local_minimizer, Algorithm, OfflineOptions, StepStrategy};
use manifold_lqg::sim::generate_plant;
use manifold_lqg::Error;

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotStable = 4,
    Singular = 5,
    NoConvergence = 6,
    Infeasible = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqAlgorithm {
    Onm = 0,
    EuclideanNewton = 1,
    ProjectedGradient = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqDirectionStatus {
    Newton = 0,
    GradientFallback = 1,
    Gradient = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqStrategy {
    Certificate = 0,
    Backtracking = 1,
}

/// Scalars reported by one online step. The next gain is written to the
/// caller's buffer.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlqStepReport {
    pub eta: f64,
    pub certificate: f64,
    pub grad_norm_g: f64,
    pub direction_norm_g: f64,
    pub closed_loop_radius: f64,
    pub cost: f64,
    pub status: MlqDirectionStatus,
}

/// Summary of an offline Newton solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlqSolveReport {
    pub iterations: usize,
    pub final_grad_norm_g: f64,
    pub converged: bool,
}

/// Opaque plant handle.
pub struct MlqPlant(PlantModel);
/// Opaque cost-pair handle.
pub struct MlqCost(CostPair);
/// Opaque constraint handle.
pub struct MlqConstraint(ConstraintSet);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(MlqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::AtRound { source, .. } => Failure::from((**source).clone()).0,
            Error::NotStable { .. } | Error::NotStabilizable => MlqStatus::NotStable,
            Error::SingularSolve | Error::SingularMetric { .. } | Error::SingularConstraint => MlqStatus::Singular,
            Error::NoConvergence { .. } => MlqStatus::NoConvergence,
            Error::DimensionMismatch { .. } | Error::NonSquare { .. } | Error::LengthMismatch { .. } => {
                MlqStatus::DimensionMismatch
            }
            Error::InfeasibleInit(_) => MlqStatus::Infeasible,
            Error::NotSymmetric { .. }
            | Error::InvalidModel(_)
            | Error::InvalidCost(_)
            | Error::InvalidConstraint(_)
            | Error::DegenerateDraw(_) => MlqStatus::InvalidArgument,
            Error::DefectiveClosedLoop { .. } => MlqStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MlqStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting failures and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MlqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MlqStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside manifold-lqg".into());
            MlqStatus::Panic
        }
    }
}

unsafe fn read_matrix(ptr: *const f64, rows: usize, cols: usize, what: &str) -> Result<Matrix, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    let data = std::slice::from_raw_parts(ptr, rows * cols);
    Ok(Matrix::from_row_slice(rows, cols, data))
}

unsafe fn write_matrix(ptr: *mut f64, m: &Matrix, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    let out = std::slice::from_raw_parts_mut(ptr, m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[i * m.ncols() + j] = m[(i, j)];
        }
    }
    Ok(())
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the last error message of the calling thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn mlq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mlq_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Plant from row-major `A` (n x n), `B` (n x m), `W` (n x n) and the noise
/// floor `sigma_sq` with `W ⪰ sigma_sq·I`.
#[no_mangle]
pub unsafe extern "C" fn mlq_plant_new(
    n: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    w: *const f64,
    sigma_sq: f64,
    out: *mut *mut MlqPlant,
) -> MlqStatus {
    guard(|| {
        let a = read_matrix(a, n, n, "a")?;
        let b = read_matrix(b, n, m, "b")?;
        let w = read_matrix(w, n, n, "w")?;
        store(out, MlqPlant(PlantModel::new(a, b, w, sigma_sq)?))
    })
}

/// Random open-loop-stable plant with `ρ(A) = target_rho` and `W = I`.
#[no_mangle]
pub unsafe extern "C" fn mlq_plant_generate(
    seed: u64,
    n: usize,
    m: usize,
    target_rho: f64,
    out: *mut *mut MlqPlant,
) -> MlqStatus {
    guard(|| store(out, MlqPlant(generate_plant(seed, n, m, target_rho)?)))
}

#[no_mangle]
pub unsafe extern "C" fn mlq_plant_dims(plant: *const MlqPlant, n: *mut usize, m: *mut usize) -> MlqStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.0;
        if n.is_null() || m.is_null() {
            return Err(null("dimension output"));
        }
        *n = p.state_dim();
        *m = p.input_dim();
        Ok(())
    })
}

/// Spectral radius of `A + BK` for a row-major `m x n` gain.
#[no_mangle]
pub unsafe extern "C" fn mlq_closed_loop_radius(plant: *const MlqPlant, k: *const f64, out: *mut f64) -> MlqStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.0;
        let k = read_matrix(k, p.input_dim(), p.state_dim(), "k")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.closed_loop_radius(&k)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mlq_plant_free(plant: *mut MlqPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// Cost pair from row-major `Q` (n x n) and `R` (m x m).
#[no_mangle]
pub unsafe extern "C" fn mlq_cost_new(n: usize, m: usize, q: *const f64, r: *const f64, out: *mut *mut MlqCost) -> MlqStatus {
    guard(|| {
        let q = read_matrix(q, n, n, "q")?;
        let r = read_matrix(r, m, m, "r")?;
        store(out, MlqCost(CostPair::new(q, r)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn mlq_cost_free(cost: *mut MlqCost) {
    if !cost.is_null() {
        drop(Box::from_raw(cost));
    }
}

/// Unconstrained gains (`m x n`).
#[no_mangle]
pub unsafe extern "C" fn mlq_constraint_none(m: usize, n: usize, out: *mut *mut MlqConstraint) -> MlqStatus {
    guard(|| store(out, MlqConstraint(ConstraintSet::none(m, n))))
}

/// Entrywise sparsity: nonzero bytes of the row-major `m x n` `mask` pin
/// the corresponding gain entries to zero.
#[no_mangle]
pub unsafe extern "C" fn mlq_constraint_mask(
    m: usize,
    n: usize,
    mask: *const u8,
    out: *mut *mut MlqConstraint,
) -> MlqStatus {
    guard(|| {
        if mask.is_null() {
            return Err(null("mask"));
        }
        let bytes = std::slice::from_raw_parts(mask, m * n);
        let pinned = manifold_lqg::linalg::Matrix::from_row_slice(m, n, &bytes.iter().map(|&b| b as f64).collect::<Vec<_>>())
            .map(|v| v != 0.0);
        store(out, MlqConstraint(ConstraintSet::mask(pinned)))
    })
}

/// Row-affine constraint `C K = D` with row-major `C` (p x m), `D` (p x n).
#[no_mangle]
pub unsafe extern "C" fn mlq_constraint_row_affine(
    m: usize,
    n: usize,
    p: usize,
    c: *const f64,
    d: *const f64,
    out: *mut *mut MlqConstraint,
) -> MlqStatus {
    guard(|| {
        let c = read_matrix(c, p, m, "c")?;
        let d = read_matrix(d, p, n, "d")?;
        store(out, MlqConstraint(ConstraintSet::row_affine(c, d)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn mlq_constraint_tangent_dim(constraint: *const MlqConstraint, out: *mut usize) -> MlqStatus {
    guard(|| {
        let c = &deref(constraint, "constraint")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c.tangent_dim();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mlq_constraint_free(constraint: *mut MlqConstraint) {
    if !constraint.is_null() {
        drop(Box::from_raw(constraint));
    }
}

/// Infinite-horizon average cost `f(K) = Tr(P_K W)`.
#[no_mangle]
pub unsafe extern "C" fn mlq_cost_value(
    plant: *const MlqPlant,
    cost: *const MlqCost,
    k: *const f64,
    out: *mut f64,
) -> MlqStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.0;
        let c = &deref(cost, "cost")?.0;
        let k = read_matrix(k, p.input_dim(), p.state_dim(), "k")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = GeometryCache::new(p, c, &k)?.cost();
        Ok(())
    })
}

/// Step-size bound `s_K` for direction `g` (both `m x n`); `+inf` when `BG = 0`.
#[no_mangle]
pub unsafe extern "C" fn mlq_stability_certificate(
    plant: *const MlqPlant,
    cost: *const MlqCost,
    k: *const f64,
    g: *const f64,
    out: *mut f64,
) -> MlqStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.0;
        let c = &deref(cost, "cost")?.0;
        let k = read_matrix(k, p.input_dim(), p.state_dim(), "k")?;
        let g = read_matrix(g, p.input_dim(), p.state_dim(), "g")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = stability_certificate(p, c, &k, &g)?;
        Ok(())
    })
}

/// One certificate-limited update of `algorithm` from gain `k`; the next
/// gain is written to `k_next` and the scalars to `report`.
#[no_mangle]
pub unsafe extern "C" fn mlq_step(
    plant: *const MlqPlant,
    cost: *const MlqCost,
    constraint: *const MlqConstraint,
    algorithm: MlqAlgorithm,
    k: *const f64,
    k_next: *mut f64,
    report: *mut MlqStepReport,
) -> MlqStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.0;
        let c = &deref(cost, "cost")?.0;
        let con = &deref(constraint, "constraint")?.0;
        let k = read_matrix(k, p.input_dim(), p.state_dim(), "k")?;
        if report.is_null() {
            return Err(null("report"));
        }
        let algorithm = match algorithm {
            MlqAlgorithm::Onm => Algorithm::Onm,
            MlqAlgorithm::EuclideanNewton => Algorithm::EuclideanNewton,
            MlqAlgorithm::ProjectedGradient => Algorithm::Pg,
        };
        let r = optimizers::step(p, c, &k, con, algorithm)?;
        write_matrix(k_next, &r.k_next, "k_next")?;
        *report = MlqStepReport {
            eta: r.eta,
            certificate: r.certificate,
            grad_norm_g: r.grad_norm_g,
            direction_norm_g: r.direction_norm_g,
            closed_loop_radius: r.closed_loop_radius,
            cost: r.cost,
            status: match r.status {
                DirectionStatus::Newton => MlqDirectionStatus::Newton,
                DirectionStatus::GradientFallback => MlqDirectionStatus::GradientFallback,
                DirectionStatus::Gradient => MlqDirectionStatus::Gradient,
            },
        };
        Ok(())
    })
}

/// Offline Riemannian Newton from `k_init` until `‖grad h‖_g ≤ tol` or
/// `max_iter` iterations. Running out of iterations is not an error: the
/// report says `converged = false` and `k_out` holds the last iterate.
#[no_mangle]
pub unsafe extern "C" fn mlq_offline_minimizer(
    plant: *const MlqPlant,
    cost: *const MlqCost,
    constraint: *const MlqConstraint,
    k_init: *const f64,
    tol: f64,
    max_iter: usize,
    strategy: MlqStrategy,
    k_out: *mut f64,
    report: *mut MlqSolveReport,
) -> MlqStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.0;
        let c = &deref(cost, "cost")?.0;
        let con = &deref(constraint, "constraint")?.0;
        let k = read_matrix(k_init, p.input_dim(), p.state_dim(), "k_init")?;
        if report.is_null() {
            return Err(null("report"));
        }
        if !(tol >= 0.0) {
            return Err(Failure(MlqStatus::InvalidArgument, format!("tol {tol} must be non-negative")));
        }
        let opts = OfflineOptions {
            tol,
            max_iter,
            strategy: match strategy {
                MlqStrategy::Certificate => StepStrategy::Certificate,
                MlqStrategy::Backtracking => StepStrategy::Backtracking,
            },
            ..OfflineOptions::default()
        };
        let r = offline_local_minimizer(p, c, con, &k, &opts)?;
        write_matrix(k_out, &r.k_star, "k_out")?;
        *report = MlqSolveReport {
            iterations: r.iterations,
            final_grad_norm_g: r.final_grad_norm_g,
            converged: r.converged,
        };
        Ok(())
    })
}

/// Stabilizing DARE solution for row-major `A` (n x n), `B` (n x m),
/// `Q` (n x n), `R` (m x m); writes `P` (n x n) and `K` (m x n) with
/// `u = Kx`.
#[no_mangle]
pub unsafe extern "C" fn mlq_solve_dare(
    n: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    q: *const f64,
    r: *const f64,
    p_out: *mut f64,
    k_out: *mut f64,
) -> MlqStatus {
    guard(|| {
        let a = read_matrix(a, n, n, "a")?;
        let b = read_matrix(b, n, m, "b")?;
        let q = read_matrix(q, n, n, "q")?;
        let r = read_matrix(r, m, m, "r")?;
        let sol = linalg::solve_dare(&a, &b, &q, &r)?;
        write_matrix(p_out, &sol.p, "p_out")?;
        write_matrix(k_out, &sol.k, "k_out")
    })
}
