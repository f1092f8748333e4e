use std::ffi::CStr;
use std::ptr;

use manifold_lqg_ffi::*;

unsafe fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    mlq_last_error_message(buf.as_mut_ptr(), buf.len());
    CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
}

struct Handles {
    plant: *mut MlqPlant,
    cost: *mut MlqCost,
    none: *mut MlqConstraint,
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            mlq_plant_free(self.plant);
            mlq_cost_free(self.cost);
            mlq_constraint_free(self.none);
        }
    }
}

const N: usize = 3;
const M: usize = 2;

fn eye(n: usize) -> Vec<f64> {
    (0..n * n).map(|i| if i % (n + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

unsafe fn setup() -> Handles {
    let mut h = Handles {
        plant: ptr::null_mut(),
        cost: ptr::null_mut(),
        none: ptr::null_mut(),
    };
    assert_eq!(mlq_plant_generate(11, N, M, 0.8, &mut h.plant), MlqStatus::Ok);
    assert_eq!(mlq_cost_new(N, M, eye(N).as_ptr(), eye(M).as_ptr(), &mut h.cost), MlqStatus::Ok);
    assert_eq!(mlq_constraint_none(M, N, &mut h.none), MlqStatus::Ok);
    h
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(mlq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn plant_round_trip_and_dims() {
    unsafe {
        let h = setup();
        let (mut n, mut m) = (0, 0);
        assert_eq!(mlq_plant_dims(h.plant, &mut n, &mut m), MlqStatus::Ok);
        assert_eq!((n, m), (N, M));
        let mut rho = 0.0;
        let k = [0.0; M * N];
        assert_eq!(mlq_closed_loop_radius(h.plant, k.as_ptr(), &mut rho), MlqStatus::Ok);
        assert!((rho - 0.8).abs() < 1e-8, "{rho}");
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        let mut out = ptr::null_mut();
        let status = mlq_plant_new(2, 1, ptr::null(), ptr::null(), ptr::null(), 1.0, &mut out);
        assert_eq!(status, MlqStatus::NullPointer);
        assert!(out.is_null());
        assert!(last_error().contains("null"));
        let mut n = 0;
        assert_eq!(mlq_plant_dims(ptr::null(), &mut n, &mut n), MlqStatus::NullPointer);
    }
}

#[test]
fn unstabilizable_plant_is_rejected() {
    unsafe {
        let a = [2.0, 0.0, 0.0, 0.5];
        let b = [0.0, 1.0];
        let w = eye(2);
        let mut out = ptr::null_mut();
        let status = mlq_plant_new(2, 1, a.as_ptr(), b.as_ptr(), w.as_ptr(), 1.0, &mut out);
        assert_ne!(status, MlqStatus::Ok);
        assert!(!last_error().is_empty());
        mlq_plant_free(out);
    }
}

#[test]
fn unconstrained_minimizer_matches_dare() {
    unsafe {
        let h = setup();
        let k0 = [0.0; M * N];
        let mut k_star = vec![0.0; M * N];
        let mut rep = MlqSolveReport {
            iterations: 0,
            final_grad_norm_g: 0.0,
            converged: false,
        };
        let status = mlq_offline_minimizer(
            h.plant,
            h.cost,
            h.none,
            k0.as_ptr(),
            1e-10,
            50,
            MlqStrategy::Backtracking,
            k_star.as_mut_ptr(),
            &mut rep,
        );
        assert_eq!(status, MlqStatus::Ok, "{}", last_error());
        assert!(rep.converged);

        let mut f_star = 0.0;
        assert_eq!(mlq_cost_value(h.plant, h.cost, k_star.as_ptr(), &mut f_star), MlqStatus::Ok);
        let mut f0 = 0.0;
        assert_eq!(mlq_cost_value(h.plant, h.cost, k0.as_ptr(), &mut f0), MlqStatus::Ok);
        assert!(f_star <= f0);

        let mut next = vec![0.0; M * N];
        let mut step = std::mem::zeroed::<MlqStepReport>();
        let status = mlq_step(h.plant, h.cost, h.none, MlqAlgorithm::Onm, k_star.as_ptr(), next.as_mut_ptr(), &mut step);
        assert_eq!(status, MlqStatus::Ok);
        assert!(step.grad_norm_g < 1e-9);
        assert!((step.cost - f_star).abs() < 1e-12 * f_star.abs().max(1.0));
    }
}

#[test]
fn dare_on_scalar_system() {
    // x+ = x + u, q = r = 1: p = (1 + sqrt 5) / 2, k = -p / (1 + p).
    unsafe {
        let one = [1.0];
        let mut p = [0.0];
        let mut k = [0.0];
        let status = mlq_solve_dare(1, 1, one.as_ptr(), one.as_ptr(), one.as_ptr(), one.as_ptr(), p.as_mut_ptr(), k.as_mut_ptr());
        assert_eq!(status, MlqStatus::Ok);
        let p_ref = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p[0] - p_ref).abs() < 1e-10);
        assert!((k[0] + p_ref / (1.0 + p_ref)).abs() < 1e-10);
    }
}

#[test]
fn step_algorithms_and_certificate() {
    unsafe {
        let h = setup();
        let k = [0.0; M * N];
        for alg in [MlqAlgorithm::Onm, MlqAlgorithm::EuclideanNewton, MlqAlgorithm::ProjectedGradient] {
            let mut next = vec![f64::NAN; M * N];
            let mut rep = std::mem::zeroed::<MlqStepReport>();
            assert_eq!(mlq_step(h.plant, h.cost, h.none, alg, k.as_ptr(), next.as_mut_ptr(), &mut rep), MlqStatus::Ok);
            assert!(next.iter().all(|v| v.is_finite()));
            assert!(rep.eta > 0.0 && rep.eta <= 1.0);
            assert!(rep.closed_loop_radius < 1.0);
            if alg == MlqAlgorithm::ProjectedGradient {
                assert_eq!(rep.status, MlqDirectionStatus::Gradient);
            }
        }
        let g = [1.0; M * N];
        let mut s = 0.0;
        assert_eq!(mlq_stability_certificate(h.plant, h.cost, k.as_ptr(), g.as_ptr(), &mut s), MlqStatus::Ok);
        assert!(s > 0.0 && s.is_finite());
    }
}

#[test]
fn mask_constraint_keeps_pinned_entries() {
    unsafe {
        let h = setup();
        let mask: Vec<u8> = vec![1, 0, 0, 0, 1, 0];
        let mut c = ptr::null_mut();
        assert_eq!(mlq_constraint_mask(M, N, mask.as_ptr(), &mut c), MlqStatus::Ok);
        let mut dim = 0;
        assert_eq!(mlq_constraint_tangent_dim(c, &mut dim), MlqStatus::Ok);
        assert_eq!(dim, 4);
        let k = [0.0; M * N];
        let mut next = vec![0.0; M * N];
        let mut rep = std::mem::zeroed::<MlqStepReport>();
        assert_eq!(mlq_step(h.plant, h.cost, c, MlqAlgorithm::Onm, k.as_ptr(), next.as_mut_ptr(), &mut rep), MlqStatus::Ok);
        assert_eq!(next[0], 0.0);
        assert_eq!(next[4], 0.0);
        mlq_constraint_free(c);
    }
}

#[test]
fn row_affine_tangent_dim() {
    unsafe {
        let c = [1.0, 1.0];
        let d = [0.0; N];
        let mut out = ptr::null_mut();
        assert_eq!(mlq_constraint_row_affine(M, N, 1, c.as_ptr(), d.as_ptr(), &mut out), MlqStatus::Ok);
        let mut dim = 0;
        mlq_constraint_tangent_dim(out, &mut dim);
        assert_eq!(dim, (M - 1) * N);
        mlq_constraint_free(out);
    }
}

#[test]
fn error_message_truncates() {
    unsafe {
        let mut n = 0;
        mlq_plant_dims(ptr::null(), &mut n, &mut n);
        let mut buf = [1 as std::ffi::c_char; 4];
        let full = mlq_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(full > 3);
        assert_eq!(buf[3], 0);
        assert_eq!(mlq_last_error_message(ptr::null_mut(), 0), full);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/manifold_lqg.h")).unwrap();
    for name in [
        "mlq_plant_new",
        "mlq_plant_generate",
        "mlq_cost_new",
        "mlq_constraint_mask",
        "mlq_step",
        "mlq_offline_minimizer",
        "mlq_solve_dare",
        "mlq_last_error_message",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
