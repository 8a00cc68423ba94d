//! Seeded samplers for the randomized certificates and test fixtures.
//!
//! Every sampler draws from a ChaCha stream keyed only by the caller's seed,
//! so a seed fully determines the sample sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{Matrix, Vector};
use crate::spectral::Diagonalisation;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

/// Uniform point in the Euclidean ball of the given radius.
pub fn unit_ball<R: Rng>(rng: &mut R, d: usize, radius: f64) -> Vector {
    let dir = loop {
        let g = gaussian_vector(rng, d);
        let n = g.norm();
        if n > 0.0 {
            break g / n;
        }
    };
    let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
    dir * (radius * r)
}

/// Point of the open probability simplex with every coordinate at least
/// `floor` (requires `d * floor < 1`).
pub fn simplex_interior<R: Rng>(rng: &mut R, d: usize, floor: f64) -> Vector {
    let e = Vector::from_fn(d, |_, _| Exp1.sample(rng));
    let y = &e / e.sum();
    y * (1.0 - d as f64 * floor) + Vector::from_element(d, floor)
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `V = Q₁ diag(s) Q₂` with singular values `s ∈ [1, max_cond]`, so that
/// `cond(V) ≤ max_cond`.
pub fn random_similarity<R: Rng>(rng: &mut R, d: usize, max_cond: f64) -> Matrix {
    let q1 = random_orthogonal(rng, d);
    let q2 = random_orthogonal(rng, d);
    let s = Vector::from_fn(d, |_, _| max_cond.powf(rng.random::<f64>()));
    q1 * Matrix::from_diagonal(&s) * q2
}

/// A random diagonalisation with `f` uniform in `f_range`.
pub fn random_diagonalisation<R: Rng>(
    rng: &mut R,
    d: usize,
    max_cond: f64,
    f_range: (f64, f64),
    tol: f64,
) -> Diagonalisation {
    let v = random_similarity(rng, d, max_cond);
    let f = Vector::from_fn(d, |_, _| rng.random_range(f_range.0..f_range.1));
    Diagonalisation::from_parts(v, f, tol).expect("condition bounded by construction")
}

/// Random irreducible reversible transposed generator on `d` states.
///
/// Draws a positive stationary law `π` and symmetric conductances
/// `w_ij ∈ [0.1, 1)`, then sets `A_ij = w_ij / π_j`, which satisfies detailed
/// balance `A_ij π_j = A_ji π_i`.
pub fn random_reversible_generator<R: Rng>(rng: &mut R, d: usize) -> Matrix {
    let pi = simplex_interior(rng, d, 0.05 / d as f64);
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let w = rng.random_range(0.1..1.0);
            a[(i, j)] = w / pi[j];
            a[(j, i)] = w / pi[i];
        }
    }
    for j in 0..d {
        let s: f64 = (0..d).filter(|&i| i != j).map(|i| a[(i, j)]).sum();
        a[(j, j)] = -s;
    }
    a
}
