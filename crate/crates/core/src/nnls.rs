//! Nonnegative least squares (Lawson–Hanson active set) and the conical-hull
//! membership test built on it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lstsq;
use crate::matrix::HsiMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct NnlsResult {
    /// Nonnegative coefficients, one per column of `B`.
    pub x: Vec<f64>,
    /// `‖Bx − y‖₂`, recomputed from `x`.
    pub residual_norm: f64,
    /// Outer active-set iterations (variables moved into the passive set).
    pub iterations: usize,
}

/// Solves `min_{x ≥ 0} ‖Bx − y‖₂²` with the default iteration cap of `10·m`.
pub fn nnls_solve(b: &HsiMatrix, y: &[f64], tol_nnls: f64) -> Result<NnlsResult> {
    nnls_solve_capped(b, y, tol_nnls, 10 * b.ncols())
}

/// Lawson–Hanson active-set NNLS.
///
/// The entering variable is the one with the most negative gradient
/// (largest `w = Bᵀ(y − Bx)`), ties going to the lowest index. Stops when
/// every inactive gradient component is at least `−tol_nnls · s`, with
/// `s = max(1, ‖B‖_F ‖y‖₂)`.
pub fn nnls_solve_capped(
    b: &HsiMatrix,
    y: &[f64],
    tol_nnls: f64,
    max_iterations: usize,
) -> Result<NnlsResult> {
    let (d, m) = b.shape();
    if y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("right-hand side of length {d}"),
            found: format!("length {}", y.len()),
        });
    }
    let scale = (b.frobenius_norm() * norm2(y)).max(1.0);
    let tol = tol_nnls * scale;

    let mut x = vec![0.0; m];
    let mut passive = vec![false; m];
    // Candidates that failed the entry test since `x` last changed.
    let mut rejected = vec![false; m];
    let mut w = gradient(b, &x, y);
    let mut iterations = 0;

    loop {
        let mut enter = None;
        let mut best = tol;
        for j in 0..m {
            if !passive[j] && !rejected[j] && w[j] > best {
                best = w[j];
                enter = Some(j);
            }
        }
        let Some(t) = enter else { break };
        iterations += 1;
        if iterations > max_iterations {
            return Err(Error::MaxIterations {
                cap: max_iterations,
            });
        }
        passive[t] = true;

        let mut first_pass = true;
        let mut inner = 0;
        loop {
            inner += 1;
            if inner > max_iterations.max(m) + 1 {
                return Err(Error::MaxIterations {
                    cap: max_iterations,
                });
            }
            let cols: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
            let z = solve_on(b, &cols, y);
            if first_pass {
                first_pass = false;
                let zt = cols
                    .iter()
                    .position(|&c| c == t)
                    .map_or(0.0, |p| z[p]);
                if zt <= 0.0 {
                    // Rounding made the candidate look useful; leave `x` alone.
                    passive[t] = false;
                    rejected[t] = true;
                    break;
                }
            }
            if z.iter().all(|&v| v > 0.0) {
                for (p, &c) in cols.iter().enumerate() {
                    x[c] = z[p];
                }
                rejected.iter_mut().for_each(|r| *r = false);
                break;
            }
            // Step from x toward z until the first passive coordinate hits zero.
            let mut alpha = f64::INFINITY;
            let mut blocking = cols[0];
            for (p, &c) in cols.iter().enumerate() {
                if z[p] <= 0.0 {
                    let a = x[c] / (x[c] - z[p]);
                    if a < alpha {
                        alpha = a;
                        blocking = c;
                    }
                }
            }
            for (p, &c) in cols.iter().enumerate() {
                x[c] += alpha * (z[p] - x[c]);
            }
            x[blocking] = 0.0;
            for &c in &cols {
                if x[c] <= 0.0 {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            rejected.iter_mut().for_each(|r| *r = false);
        }
        w = gradient(b, &x, y);
    }

    let residual_norm = norm2(&residual(b, &x, y));
    Ok(NnlsResult {
        x,
        residual_norm,
        iterations,
    })
}

/// Tests whether `a` lies (numerically) in the cone spanned by the columns of
/// `sub`: true iff the NNLS residual is strictly below `eps_feas`.
pub fn cone_membership(
    sub: &HsiMatrix,
    a: &[f64],
    eps_feas: f64,
    tol_nnls: f64,
) -> Result<(bool, NnlsResult)> {
    let res = nnls_solve(sub, a, tol_nnls)?;
    Ok((res.residual_norm < eps_feas, res))
}

fn solve_on(b: &HsiMatrix, cols: &[usize], y: &[f64]) -> Vec<f64> {
    let d = b.nrows();
    let mut data = Vec::with_capacity(d * cols.len());
    for &c in cols {
        data.extend_from_slice(b.column(c));
    }
    lstsq::solve(&DMatrix::from_vec(d, cols.len(), data), y)
}

fn residual(b: &HsiMatrix, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (ri, bij) in r.iter_mut().zip(b.column(j)) {
                *ri -= bij * xj;
            }
        }
    }
    r
}

/// `Bᵀ(y − Bx)`, the negative gradient of `½‖Bx − y‖²`.
fn gradient(b: &HsiMatrix, x: &[f64], y: &[f64]) -> Vec<f64> {
    let r = residual(b, x, y);
    b.columns()
        .map(|col| col.iter().zip(&r).map(|(p, q)| p * q).sum())
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
