//! Minimum-cost assignment (Hungarian method with potentials).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Assigns each of the `n` rows of `c` a distinct column, minimizing the
/// total cost. Requires `n ≤ m`. Returns the column of every row and the
/// total.
fn hungarian(c: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = c.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let m = c[0].len();
    debug_assert!(n <= m);
    // 1-based arrays; p[j] is the row matched to column j, 0 meaning none.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            cols[p[j] - 1] = j - 1;
        }
    }
    let total = cols.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
    (cols, total)
}

fn check_finite(cost: &DMatrix<f64>) -> Result<()> {
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("assignment costs must be finite".into()));
    }
    Ok(())
}

/// Optimal permutation for a square cost matrix.
///
/// Returns `σ` with `σ[j]` the row matched to column `j`, minimizing
/// `Σⱼ cost(σ(j), j)`. Among optimal permutations the lexicographically
/// smallest `(σ(0), σ(1), …)` is returned.
pub fn solve_assignment(cost: &DMatrix<f64>) -> Result<Vec<usize>> {
    let r = cost.nrows();
    if cost.ncols() != r {
        return Err(Error::DimensionMismatch {
            expected: format!("{r}x{r}"),
            found: format!("{}x{}", r, cost.ncols()),
        });
    }
    check_finite(cost)?;
    // Columns are the agents here, rows the tasks.
    let full: Vec<Vec<f64>> = (0..r).map(|j| (0..r).map(|i| cost[(i, j)]).collect()).collect();
    let (_, best) = hungarian(&full);
    let slack = 1e-12 * (1.0 + best.abs());

    let mut sigma = Vec::with_capacity(r);
    let mut used = vec![false; r];
    let mut fixed_cost = 0.0;
    for j in 0..r {
        let rest_cols: Vec<usize> = (j + 1..r).collect();
        let mut picked = None;
        for i in (0..r).filter(|&i| !used[i]) {
            let rest_rows: Vec<usize> = (0..r).filter(|&k| !used[k] && k != i).collect();
            let sub: Vec<Vec<f64>> = rest_cols
                .iter()
                .map(|&jj| rest_rows.iter().map(|&ii| cost[(ii, jj)]).collect())
                .collect();
            let (_, rest) = hungarian(&sub);
            if fixed_cost + cost[(i, j)] + rest <= best + slack {
                picked = Some(i);
                break;
            }
        }
        // Rounding can in principle reject every candidate; the first unused
        // row keeps the result a permutation.
        let i = picked.unwrap_or_else(|| (0..r).find(|&i| !used[i]).expect("unused row"));
        used[i] = true;
        fixed_cost += cost[(i, j)];
        sigma.push(i);
    }
    Ok(sigma)
}

/// Matches every row of an `r x k` cost matrix (`r ≤ k`) to a distinct
/// column. Returns the column of each row and the total cost.
pub fn rectangular_assignment(cost: &DMatrix<f64>) -> Result<(Vec<usize>, f64)> {
    let (r, k) = cost.shape();
    if r > k {
        return Err(Error::KSmallerThanR { k, r });
    }
    check_finite(cost)?;
    let rows: Vec<Vec<f64>> = (0..r).map(|i| cost.row(i).iter().copied().collect()).collect();
    Ok(hungarian(&rows))
}

/// Applies `σ` to a square cost matrix.
pub fn assignment_cost(cost: &DMatrix<f64>, sigma: &[usize]) -> f64 {
    sigma.iter().enumerate().map(|(j, &i)| cost[(i, j)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_gives_identity() {
        let c = DMatrix::zeros(4, 4);
        assert_eq!(solve_assignment(&c).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn unique_minima() {
        let c = DMatrix::from_row_slice(3, 3, &[9.0, 0.0, 9.0, 9.0, 9.0, 0.0, 0.0, 9.0, 9.0]);
        // Column 0's minimum is row 2, column 1's is row 0, column 2's is row 1.
        assert_eq!(solve_assignment(&c).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn lexicographic_tie_break() {
        // Both permutations cost 2.
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(solve_assignment(&c).unwrap(), vec![0, 1]);
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 5.0, 0.0, 1.0, 5.0, 5.0, 5.0, 0.0]);
        assert_eq!(solve_assignment(&c).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn rectangular() {
        let c = DMatrix::from_row_slice(2, 4, &[5.0, 1.0, 3.0, 2.0, 5.0, 1.0, 9.0, 9.0]);
        let (cols, total) = rectangular_assignment(&c).unwrap();
        assert_eq!(cols, vec![3, 1]);
        assert_eq!(total, 3.0);
        assert!(rectangular_assignment(&c.transpose()).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut c = DMatrix::zeros(2, 2);
        c[(0, 1)] = f64::NAN;
        assert!(solve_assignment(&c).is_err());
    }
}
