//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Inverse of a square matrix; fails instead of returning a pseudo-inverse.
pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular(format!("{what} has non-finite entries")));
    }
    let scale = m.amax();
    if scale == 0.0 {
        return Err(Error::Singular(format!("{what} is zero")));
    }
    let sv = m.singular_values();
    let smin = sv.min();
    if smin <= 1e-13 * sv.max() {
        return Err(Error::Singular(format!(
            "{what} is numerically singular (condition > 1e13)"
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// `v' A^{-1} v`.
pub fn inv_quad_form(a: &DMatrix<f64>, v: &DVector<f64>, what: &str) -> Result<f64> {
    let ai = inverse(a, what)?;
    Ok(v.dot(&(&ai * v)))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().min()
}

pub fn is_positive_semidefinite(m: &DMatrix<f64>) -> bool {
    let s = symmetrize(m);
    let tol = 1e-12 * s.amax().max(1e-300);
    s.symmetric_eigenvalues().iter().all(|&e| e >= -tol)
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}
