//! Dense spectral kernel.
//!
//! Decides real diagonalisability of a square matrix `A`, i.e. whether there is
//! an invertible `V` and a real vector `f` with `A = V⁻¹ diag(f) V`. The state
//! space is `{1, …, d}` with counting measure, so the multiplication operator
//! is simply `diag(f)` and adjoints are transposes.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::linalg::Schur;
use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Relative tolerance used when callers have no better information.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Consecutive computed eigenvalues closer than this (relative to `‖A‖₂`) are
/// candidates for a shared eigenspace.
const MERGE_REL: f64 = 1e-8;

/// Singular values of `A - λI` below this (relative to `‖A‖₂`) span the
/// numerical eigenspace of `λ`.
const NULL_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    ComplexSpectrum,
    Defective,
    None,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::ComplexSpectrum => "ComplexSpectrum",
            FailureKind::Defective => "Defective",
            FailureKind::None => "None",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Diagnostic summary of a diagonalisability test.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub real_diagonalisable: bool,
    pub failure_kind: FailureKind,
    /// `‖V‖₂ ‖V⁻¹‖₂`, present when the test succeeded.
    pub condition_of_v: Option<f64>,
}

/// A certified real diagonalisation `A = V⁻¹ diag(f) V`.
///
/// `V⁻¹` is the eigenvector matrix: its columns have unit Euclidean norm and
/// their first nonzero component is positive. `f` is sorted ascending.
#[derive(Debug, Clone)]
pub struct Diagonalisation {
    v: Matrix,
    v_inv: Matrix,
    f: Vector,
    residual: f64,
    tol: f64,
}

impl Diagonalisation {
    /// Builds a diagonalisation from an explicit invertible `V` and real `f`.
    ///
    /// The represented operator is `V⁻¹ diag(f) V` by definition, so the
    /// recorded residual only measures the round-off of the inversion.
    pub fn from_parts(v: Matrix, f: Vector, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let d = linalg::check_square(&v)?;
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: f.len(),
            });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let sv = linalg::singular_values(&v);
        let (smax, smin) = (sv[0], sv[d - 1]);
        if smin <= tol * smax {
            return Err(Error::IllConditioned(smax / smin));
        }
        let v_inv = linalg::inverse(&v)?;
        let residual = (&v * &v_inv - Matrix::identity(d, d)).norm();
        Ok(Self {
            v,
            v_inv,
            f,
            residual,
            tol,
        })
    }

    /// Assembles a diagonalisation whose residual the caller will certify.
    pub(crate) fn from_raw(v: Matrix, v_inv: Matrix, f: Vector, tol: f64) -> Self {
        Self {
            v,
            v_inv,
            f,
            residual: 0.0,
            tol,
        }
    }

    pub(crate) fn with_residual(mut self, residual: f64) -> Self {
        self.residual = residual;
        self
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// The similarity `V` mapping state space coordinates to eigen-coordinates.
    pub fn v(&self) -> &Matrix {
        &self.v
    }

    /// `V⁻¹`, whose columns are eigenvectors of `A`.
    pub fn v_inv(&self) -> &Matrix {
        &self.v_inv
    }

    /// The multiplier `f` (eigenvalues of `A`).
    pub fn f(&self) -> &Vector {
        &self.f
    }

    /// Frobenius certification defect recorded at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `V⁻¹ diag(f) V`.
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.v.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= self.f[i];
        }
        &self.v_inv * scaled
    }

    /// Largest entry of `f`; the essential supremum under counting measure.
    pub fn max_f(&self) -> f64 {
        self.f.max()
    }

    pub fn condition(&self) -> f64 {
        linalg::operator_norm(&self.v) * linalg::operator_norm(&self.v_inv)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::BadTolerance(tol))
    }
}

/// Runs the diagonalisability test and always returns a report, together with
/// the diagonalisation when one exists.
pub fn analyse(a: &Matrix, tol: f64) -> Result<(SpectralReport, Option<Diagonalisation>)> {
    check_tol(tol)?;
    let d = linalg::check_square(a)?;
    linalg::check_finite(a)?;

    let scale = linalg::operator_norm(a);
    let fro = a.norm();
    let symmetric = (a - a.transpose()).norm() <= tol * fro;

    let eigenvalues: Vec<Complex<f64>> = if symmetric {
        linalg::symmetrize(a)
            .symmetric_eigenvalues()
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .collect()
    } else {
        let schur = Schur::try_new(a.clone(), f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
        schur.complex_eigenvalues().iter().copied().collect()
    };

    let fail = |kind| SpectralReport {
        eigenvalues: eigenvalues.clone(),
        real_diagonalisable: false,
        failure_kind: kind,
        condition_of_v: None,
    };

    if eigenvalues.iter().any(|z| z.im.abs() > tol * scale) {
        return Ok((fail(FailureKind::ComplexSpectrum), None));
    }

    let eigvecs = if symmetric {
        Some(linalg::symmetrize(a).symmetric_eigen().eigenvectors)
    } else {
        let mut lambdas: Vec<f64> = eigenvalues.iter().map(|z| z.re).collect();
        lambdas.sort_by(f64::total_cmp);
        eigenvector_matrix(a, &lambdas, scale, true)
    };
    let Some(mut w) = eigvecs else {
        return Ok((fail(FailureKind::Defective), None));
    };
    debug_assert_eq!(w.ncols(), d);

    for mut col in w.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }

    let sv = linalg::singular_values(&w);
    let (smax, smin) = (sv[0], sv[d - 1]);
    if !(smin > tol * smax) {
        return Ok((fail(FailureKind::Defective), None));
    }
    let Ok(v) = linalg::inverse(&w) else {
        return Ok((fail(FailureKind::Defective), None));
    };

    // Refine each eigenvalue as the two-sided Rayleigh quotient.
    let vaw = &v * a * &w;
    let mut pairs: Vec<(f64, Vector)> = (0..d)
        .map(|i| (vaw[(i, i)], w.column(i).into_owned()))
        .collect();
    pairs.sort_by(|(fa, wa), (fb, wb)| fa.total_cmp(fb).then_with(|| lexicographic(wa, wb)));

    let f = Vector::from_iterator(d, pairs.iter().map(|(x, _)| *x));
    let columns: Vec<Vector> = pairs.into_iter().map(|(_, c)| c).collect();
    let w = Matrix::from_columns(&columns);
    let v = linalg::inverse(&w)?;

    let mut diag = Diagonalisation {
        v,
        v_inv: w,
        f,
        residual: 0.0,
        tol,
    };
    let residual = (a - diag.reconstruct()).norm();
    if residual > tol * fro {
        return Ok((fail(FailureKind::Defective), None));
    }
    diag.residual = residual;

    let report = SpectralReport {
        eigenvalues,
        real_diagonalisable: true,
        failure_kind: FailureKind::None,
        condition_of_v: Some(smax / smin),
    };
    Ok((report, Some(diag)))
}

/// Real diagonalisation of `A`, or the report explaining why none exists.
pub fn real_diagonalise(a: &Matrix, tol: f64) -> Result<Diagonalisation> {
    match analyse(a, tol)? {
        (_, Some(diag)) => Ok(diag),
        (report, None) => Err(Error::NotDiagonalisable(Box::new(report))),
    }
}

fn lexicographic(a: &Vector, b: &Vector) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Assembles eigenvectors for sorted real eigenvalue estimates.
///
/// Runs of nearly equal eigenvalues share one numerical null space of
/// `A - λI`; a run longer than that null space means the eigenvalue is
/// defective and `None` is returned. Inside a shared null space the operator
/// is compressed and diagonalised again, which separates close but distinct
/// eigenvalues that happened to be grouped.
fn eigenvector_matrix(a: &Matrix, lambdas: &[f64], scale: f64, merge: bool) -> Option<Matrix> {
    let d = a.nrows();
    let merge_tol = if merge { MERGE_REL * scale } else { 0.0 };
    let null_tol = NULL_REL * scale;
    let mut columns: Vec<Vector> = Vec::with_capacity(d);

    let mut i = 0;
    while i < d {
        let lambda = lambdas[i];
        let run = lambdas[i..]
            .iter()
            .take_while(|&&x| x - lambda <= merge_tol)
            .count();
        let shifted = a - Matrix::identity(d, d) * lambda;
        let (sv, basis) = linalg::right_singular_pairs(&shifted);

        if run == 1 {
            columns.push(basis.column(d - 1).into_owned());
            i += 1;
            continue;
        }

        let null_dim = sv.iter().filter(|&&s| s <= null_tol).count();
        if null_dim < run {
            // Fewer independent directions than the algebraic multiplicity.
            return None;
        }
        let n = basis.columns(d - run, run).into_owned();
        let compressed = n.transpose() * a * &n;
        let fro = compressed.norm();
        let inner = if (&compressed - compressed.transpose()).norm() <= 1e-9 * fro.max(f64::MIN_POSITIVE) {
            linalg::symmetrize(&compressed).symmetric_eigen().eigenvectors
        } else {
            let schur = Schur::try_new(compressed.clone(), f64::EPSILON, 0)?;
            let mut inner_l: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.re).collect();
            inner_l.sort_by(f64::total_cmp);
            eigenvector_matrix(&compressed, &inner_l, linalg::operator_norm(&compressed), false)?
        };
        let mapped = n * inner;
        columns.extend(mapped.column_iter().map(|c| c.into_owned()));
        i += run;
    }
    Some(Matrix::from_columns(&columns))
}

/// Symmetric positive definite test with relative tolerance `tol`.
pub fn is_spd(k: &Matrix, tol: f64) -> bool {
    if k.nrows() != k.ncols() || k.is_empty() || k.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let fro = k.norm();
    if fro == 0.0 {
        return false;
    }
    if (k - k.transpose()).norm() > tol * fro {
        return false;
    }
    let eig = linalg::symmetrize(k).symmetric_eigenvalues();
    let max_abs = eig.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    eig.min() > tol * max_abs
}

/// The unique symmetric positive definite `S` with `S·S = K`.
pub fn symmetric_sqrt(k: &Matrix, tol: f64) -> Result<Matrix> {
    check_tol(tol)?;
    linalg::check_square(k)?;
    if !is_spd(k, tol) {
        return Err(Error::NotSpd);
    }
    let eig = linalg::symmetrize(k).symmetric_eigen();
    let roots = eig.eigenvalues.map(f64::sqrt);
    let q = &eig.eigenvectors;
    let s = linalg::symmetrize(&(q * Matrix::from_diagonal(&roots) * q.transpose()));
    if (&s * &s - k).norm() > tol * k.norm() {
        return Err(Error::NotSpd);
    }
    Ok(s)
}

/// Spectral norm (largest singular value); zero for the zero matrix.
pub fn operator_norm(m: &Matrix) -> f64 {
    linalg::operator_norm(m)
}
