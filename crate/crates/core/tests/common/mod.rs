#![allow(dead_code)]

use manifold_lqg::geometry::{CostPair, PlantModel};
use manifold_lqg::linalg::Matrix;
use manifold_lqg::sim::{generate_plant, SeedStream};

pub struct Instance {
    pub plant: PlantModel,
    pub cost: CostPair,
    pub k: Matrix,
}

/// Random plant with `ρ(A) = 0.7`, random diagonal-plus-rank-one costs, and a
/// random gain shrunk until `ρ(A + BK) ≤ 0.85`.
pub fn random_instance(seed: u64, n: usize, m: usize) -> Instance {
    let plant = generate_plant(seed, n, m, 0.7).unwrap();
    let mut s = SeedStream::with_stream(seed, 1_000);
    let spd = |dim: usize, s: &mut SeedStream| {
        let v = s.normal_matrix(dim, 1);
        let mut out = Matrix::identity(dim, dim) + &v * v.transpose() * 0.3;
        for i in 0..dim {
            out[(i, i)] += s.uniform();
        }
        out
    };
    let q = spd(n, &mut s);
    let r = spd(m, &mut s);
    let cost = CostPair::new(q, r).unwrap();
    let mut k = s.normal_matrix(m, n) * 0.3;
    while plant.closed_loop_radius(&k).unwrap() > 0.85 {
        k *= 0.7;
    }
    Instance { plant, cost, k }
}

pub fn random_direction(seed: u64, m: usize, n: usize) -> Matrix {
    SeedStream::with_stream(seed, 2_000).normal_matrix(m, n)
}

pub fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-12)
}
