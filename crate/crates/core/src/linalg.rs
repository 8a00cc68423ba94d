//! Small dense helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Returns the dimension of a non-empty square matrix.
pub fn check_square(m: &Matrix) -> Result<usize> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn check_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

pub fn check_len(v: &Vector, d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Singular values in descending order with the matching right singular
/// vectors as columns; the last column spans the most nearly null direction.
pub fn right_singular_pairs(m: &Matrix) -> (Vec<f64>, Matrix) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<Vector> = order.iter().map(|&i| v_t.row(i).transpose()).collect();
    (sv, Matrix::from_columns(&cols))
}

pub fn operator_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))
}

/// `defect / reference`, with an exactly zero defect mapping to zero even when
/// the reference vanishes.
pub fn relative(defect: f64, reference: f64) -> f64 {
    if defect == 0.0 {
        0.0
    } else {
        defect / reference.max(f64::MIN_POSITIVE)
    }
}
