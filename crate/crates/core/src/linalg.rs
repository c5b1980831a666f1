//! Tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `A x = rhs` for tridiagonal `A` by forward elimination and back
/// substitution (Thomas algorithm). `lower[i]` couples row `i + 1` to column
/// `i`, `upper[i]` couples row `i` to column `i + 1`; both have length `n - 1`.
///
/// No pivoting: intended for diagonally dominant or M-matrix systems.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(lower.len() + 1, n.max(1));
    assert_eq!(upper.len() + 1, n.max(1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SolverBreakdown { row: 0 });
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SolverBreakdown { row: i });
        }
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
