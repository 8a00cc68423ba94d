//! Shared inputs for the benchmarks.

use gradflow::sampling;
use gradflow::{Diagonalisation, Matrix, DEFAULT_TOL};

pub const DIMS: [usize; 3] = [4, 16, 48];

/// A seeded real diagonalisable matrix with `cond(V) ≤ 100` and its
/// diagonalisation.
pub fn system(d: usize, seed: u64) -> (Matrix, Diagonalisation) {
    let mut rng = sampling::rng(seed);
    let truth = sampling::random_diagonalisation(&mut rng, d, 100.0, (-5.0, 0.0), DEFAULT_TOL);
    (truth.reconstruct(), truth)
}
