// SPDX-License-Identifier: Apache-2.0

//! Thomas algorithm for tridiagonal systems.

/// Solve `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place,
/// overwriting `rhs` with the solution. `scratch` holds the modified upper
/// diagonal and must be at least as long as `rhs`.
///
/// No pivoting: intended for diagonally dominant M-matrices, where the
/// forward sweep keeps every pivot positive.
pub fn solve_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    debug_assert!(lower.len() >= n && diag.len() >= n && upper.len() >= n);
    debug_assert!(scratch.len() >= n);

    let mut pivot = diag[0];
    scratch[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / pivot;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}
