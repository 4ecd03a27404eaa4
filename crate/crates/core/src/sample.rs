//! Seeded sampling of feasible points, used by verification spot-checks and
//! the property tests.

use crate::sets::SetKind;
use rand::Rng;

/// Uniform-ish point of the given set: exponential-normalization for the
/// simplex, uniform for boxes.
pub fn sample_point<R: Rng>(kind: SetKind, dim: usize, rng: &mut R) -> Vec<f64> {
    match kind {
        SetKind::Simplex => sample_simplex(dim, rng),
        SetKind::Box { lo, hi } => (0..dim).map(|_| rng.gen_range(lo..=hi)).collect(),
    }
}

pub fn sample_simplex<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..dim)
        .map(|_| -(rng.gen::<f64>().max(1e-300)).ln())
        .collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}
