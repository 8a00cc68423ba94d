//! Finite-state Markov chains in the transposed-generator convention.
//!
//! Probability vectors evolve by `ẋ = Ax`, so `A_ij` (for `i ≠ j`) is the jump
//! rate from state `j` to state `i` and every column of `A` sums to zero.
//! Reversible chains carry the entropic gradient structure: relative entropy
//! `F(x) = Σ xᵢ log(xᵢ/πᵢ)` driven through the weighted graph Laplacian
//! `K(x) = Σ_{i<j} w_ij Λ(xᵢ/πᵢ, xⱼ/πⱼ) (eᵢ−eⱼ)(eᵢ−eⱼ)ᵀ` built from logarithmic
//! means `Λ`.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::sampling;
use crate::synthesis::{FlowResidualReport, GeneralisedSystemProbe};

/// Lower bound on every coordinate of sampled simplex points.
pub const SIMPLEX_FLOOR: f64 = 1e-3;

/// A validated transposed generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix(Matrix);

impl GeneratorMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

fn rate_scale(a: &Matrix) -> f64 {
    a.amax().max(f64::MIN_POSITIVE)
}

/// Checks non-negative off-diagonal rates and zero column sums.
pub fn validate_generator(a: &Matrix, tol: f64) -> Result<GeneratorMatrix> {
    let d = linalg::check_square(a)?;
    linalg::check_finite(a)?;
    let slack = tol * rate_scale(a);
    for j in 0..d {
        for i in 0..d {
            if i != j && a[(i, j)] < -slack {
                return Err(Error::NegativeRate {
                    row: i,
                    col: j,
                    rate: a[(i, j)],
                });
            }
        }
    }
    for (j, col) in a.column_iter().enumerate() {
        let sum = col.sum();
        if sum.abs() > slack * d as f64 {
            return Err(Error::ColumnSumNonzero { col: j, sum });
        }
    }
    Ok(GeneratorMatrix(a.clone()))
}

/// The invariant law `π` with `Aπ = 0`, `πᵢ > 0` and `Σπᵢ = 1`.
pub fn stationary_distribution(g: &GeneratorMatrix, tol: f64) -> Result<Vector> {
    let a = g.matrix();
    let d = g.dim();
    if d == 1 {
        return Ok(Vector::from_element(1, 1.0));
    }
    let (sv, basis) = linalg::right_singular_pairs(a);
    let kernel_dim = sv.iter().filter(|&&s| s <= tol * sv[0]).count();
    if kernel_dim != 1 {
        return Err(Error::DegenerateKernel(kernel_dim));
    }
    let k = basis.column(d - 1).into_owned();
    let total = k.sum();
    if total == 0.0 {
        return Err(Error::NonPositive);
    }
    let pi = k / total;
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(Error::NonPositive);
    }
    Ok(pi)
}

/// Largest detailed-balance defect `|A_ij π_j − A_ji π_i|`, relative to the
/// largest probability flux.
pub fn reversibility_defect(g: &GeneratorMatrix, pi: &Vector) -> f64 {
    let a = g.matrix();
    let d = g.dim();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                worst = worst.max((a[(i, j)] * pi[j] - a[(j, i)] * pi[i]).abs());
                scale = scale.max((a[(i, j)] * pi[j]).abs());
            }
        }
    }
    linalg::relative(worst, scale)
}

pub fn is_reversible(g: &GeneratorMatrix, pi: &Vector, tol: f64) -> bool {
    pi.len() == g.dim() && reversibility_defect(g, pi) <= tol
}

/// Logarithmic mean `Λ(a, b) = (a − b)/(log a − log b)` with `Λ(a, a) = a`.
pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    for x in [a, b] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::NonPositiveInput(x));
        }
    }
    let dl = a.ln() - b.ln();
    if dl.abs() < 1e-8 {
        // Λ = m(1 − δ²/12 + O(δ⁴)) with m the arithmetic mean, δ = (a − b)/m.
        let m = 0.5 * (a + b);
        let delta = (a - b) / m;
        return Ok(m * (1.0 - delta * delta / 12.0));
    }
    Ok((a - b) / dl)
}

/// Stationary law and symmetric edge conductances `w_ij = A_ij π_j` of a
/// reversible chain.
#[derive(Debug, Clone)]
pub struct EntropicStructure {
    pi: Vector,
    weights: Matrix,
}

impl EntropicStructure {
    /// Requires detailed balance at `tol`.
    pub fn from_generator(g: &GeneratorMatrix, tol: f64) -> Result<Self> {
        let pi = stationary_distribution(g, tol)?;
        let defect = reversibility_defect(g, &pi);
        if defect > tol {
            return Err(Error::NotReversible(defect));
        }
        let a = g.matrix();
        let d = g.dim();
        let weights = Matrix::from_fn(d, d, |i, j| {
            if i == j {
                0.0
            } else {
                0.5 * (a[(i, j)] * pi[j] + a[(j, i)] * pi[i])
            }
        });
        Ok(Self { pi, weights })
    }

    pub fn pi(&self) -> &Vector {
        &self.pi
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }
}

fn check_positive(x: &Vector) -> Result<()> {
    match x.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        Some(&v) => Err(Error::NonPositiveInput(v)),
        None => Ok(()),
    }
}

/// State-dependent Onsager operator `K(x)`: symmetric, positive semidefinite,
/// with `K(x)𝟙 = 0`.
pub fn entropic_onsager(es: &EntropicStructure, x: &Vector) -> Result<Matrix> {
    let d = es.dim();
    linalg::check_len(x, d)?;
    check_positive(x)?;
    let mut k = Matrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let w = es.weights[(i, j)];
            if w == 0.0 {
                continue;
            }
            let c = w * log_mean(x[i] / es.pi[i], x[j] / es.pi[j])?;
            k[(i, j)] -= c;
            k[(j, i)] -= c;
            k[(i, i)] += c;
            k[(j, j)] += c;
        }
    }
    Ok(k)
}

/// Relative entropy `Σ xᵢ log(xᵢ/πᵢ)` and its gradient `log(xᵢ/πᵢ) + 1`.
pub fn relative_entropy(x: &Vector, pi: &Vector) -> Result<(f64, Vector)> {
    linalg::check_len(x, pi.len())?;
    check_positive(x)?;
    check_positive(pi)?;
    let logs = x.zip_map(pi, |xi, pi| (xi / pi).ln());
    let value = x.dot(&logs);
    Ok((value, logs.add_scalar(1.0)))
}

/// Samples interior probability vectors and reports the largest
/// `‖Ax + K(x)DF(x)‖ / ‖Ax‖` (the denominator is floored near equilibrium).
pub fn verify_entropic_flow(
    g: &GeneratorMatrix,
    es: &EntropicStructure,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<FlowResidualReport> {
    let d = g.dim();
    if es.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: es.dim(),
        });
    }
    let defect = reversibility_defect(g, es.pi());
    if defect > tol {
        return Err(Error::NotReversible(defect));
    }
    let a = g.matrix();
    let floor = 1e-10 * a.norm();
    let mut rng = sampling::rng(seed);
    let mut max_residual = 0.0_f64;
    let mut worst_point = es.pi().clone();
    for _ in 0..samples {
        let x = sampling::simplex_interior(&mut rng, d, SIMPLEX_FLOOR.min(0.5 / d as f64));
        let r = entropic_residual(g, es, &x)?;
        let ax = (a * &x).norm();
        let rel = linalg::relative(r, ax.max(floor * x.norm()));
        if rel > max_residual {
            max_residual = rel;
            worst_point = x;
        }
    }
    Ok(FlowResidualReport {
        max_residual,
        num_samples: samples,
        worst_point,
        passed: max_residual <= tol,
    })
}

/// `‖Ax + K(x)DF(x)‖` at one state.
pub fn entropic_residual(g: &GeneratorMatrix, es: &EntropicStructure, x: &Vector) -> Result<f64> {
    let k = entropic_onsager(es, x)?;
    let (_, df) = relative_entropy(x, es.pi())?;
    Ok((g.matrix() * x + k * df).norm())
}

/// The entropic structure viewed as a generalised gradient system with
/// `Ψ*(x, ξ) = ½⟨ξ, K(x)ξ⟩`, conserving total mass.
pub fn entropic_probe(es: &EntropicStructure) -> GeneralisedSystemProbe {
    let d = es.dim();
    let pi = es.pi().clone();
    let es_f = es.clone();
    let es_k = es.clone();
    let nan = move || Vector::from_element(d, f64::NAN);
    GeneralisedSystemProbe::new(
        pi,
        Box::new(move |x| relative_entropy(x, es_f.pi()).map(|(_, g)| g).unwrap_or_else(|_| nan())),
        Box::new(move |x, xi| entropic_onsager(&es_k, x).map(|k| k * xi).unwrap_or_else(|_| nan())),
    )
    .with_conserved_direction(Vector::from_element(d, 1.0))
}

/// The two three-state chains used throughout the documentation and tests.
pub mod fixtures {
    use nalgebra::dmatrix;

    use crate::linalg::Matrix;

    /// Symmetric (hence reversible) chain with uniform stationary law.
    pub fn reversible_generator() -> Matrix {
        dmatrix![
            -2.0, 1.0, 1.0;
            1.0, -2.0, 1.0;
            1.0, 1.0, -2.0
        ]
    }

    /// Non-reversible but real diagonalisable chain, spectrum `{0, −3, −6}`.
    pub fn nonreversible_generator() -> Matrix {
        dmatrix![
            -2.0, 0.0, 2.0;
            1.0, -3.0, 2.0;
            1.0, 3.0, -4.0
        ]
    }

    /// A constant Onsager operator for [`nonreversible_generator`].
    pub fn nonreversible_onsager() -> Matrix {
        dmatrix![
            3.0, 1.5, -1.5;
            1.5, 2.25, -0.75;
            -1.5, -0.75, 5.25
        ]
    }

    /// Energy Hessian pairing with [`nonreversible_onsager`]: `A = −K B`.
    pub fn nonreversible_energy_hessian() -> Matrix {
        dmatrix![
            4.0, -4.0, 0.0;
            -4.0, 6.0, -2.0;
            0.0, -2.0, 2.0
        ] / 3.0
    }
}
