//! Fixtures shared by the criterion benchmarks.

use navmorl::agents::derive_seed;
use navmorl::nn::{Activation, Matrix, Mlp};
use navmorl::pareto::ObjectivePoint;
use navmorl::sim::{stage_build, World};

/// Uniform value in `[0, 1)` from a counter-based stream.
pub fn unit(seed: u64, i: u64) -> f64 {
    (derive_seed(seed, i) >> 11) as f64 / (1u64 << 53) as f64
}

/// `n` points with `k` objectives on a noisy simplex, so a sizeable share
/// is nondominated.
pub fn point_cloud(n: usize, k: usize, seed: u64) -> Vec<ObjectivePoint> {
    (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..k).map(|j| unit(seed, (i * k + j) as u64) + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            let jitter = 0.9 + 0.1 * unit(seed ^ 0xBEEF, i as u64);
            ObjectivePoint::untagged(raw.iter().map(|v| 10.0 * v / s * jitter).collect())
        })
        .collect()
}

/// Actor-shaped network for the default observation width.
pub fn actor(hidden: usize, seed: u64) -> Mlp {
    Mlp::new(&[28, hidden, hidden, 2], &[Activation::Relu, Activation::Relu, Activation::Tanh], seed).expect("valid sizes")
}

pub fn batch(rows: usize, cols: usize, seed: u64) -> Matrix {
    let data = (0..rows * cols).map(|i| 2.0 * unit(seed, i as u64) - 1.0).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// Stage A world after a seeded reset.
pub fn stage_a_world(seed: u64) -> World {
    let mut w = World::new(stage_build("stageA").expect("preset")).expect("valid preset");
    w.reset(seed).expect("placement");
    w
}
