//! Dense two-phase tableau simplex with Bland's anti-cycling rule.

use super::{LinearProgram, LpResult, LpStatus, Sense};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Entries smaller than this are never used as pivots.
    pub pivot_tol: f64,
    /// Phase-one objective above this means the problem is infeasible.
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            optimality_tol: 1e-10,
            pivot_tol: 1e-11,
            feasibility_tol: 1e-9,
        }
    }
}

struct Tableau {
    rows: usize,
    /// Columns excluding the right-hand side.
    cols: usize,
    /// Row-major `(rows + 1) x (cols + 1)`; the last row holds reduced costs
    /// and `-z` in its last entry.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width();
        let p = self.at(row, col);
        for j in 0..w {
            self.data[row * w + j] /= p;
        }
        self.data[row * w + col] = 1.0;
        for i in 0..=self.rows {
            if i == row {
                continue;
            }
            let f = self.data[i * w + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.data[i * w + j] -= f * self.data[row * w + j];
            }
            self.data[i * w + col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Loads `cost` into the objective row, expressed in the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width();
        let z = self.rows * w;
        for j in 0..w {
            self.data[z + j] = if j < self.cols { cost[j] } else { 0.0 };
        }
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.data[z + j] -= cb * self.data[i * w + j];
                }
            }
        }
    }

    /// Runs Bland's rule over columns `< enterable`. Returns `Ok(true)` at
    /// optimality, `Ok(false)` when unbounded.
    fn optimize(
        &mut self,
        enterable: usize,
        opts: &SimplexOptions,
        iterations: &mut usize,
    ) -> std::result::Result<bool, ()> {
        loop {
            let z = self.rows;
            let Some(col) = (0..enterable).find(|&j| self.at(z, j) < -opts.optimality_tol) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > opts.pivot_tol {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best || (ratio == best && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            *iterations += 1;
            if *iterations > opts.max_iterations {
                return Err(());
            }
            self.pivot(row, col);
        }
    }
}

/// Solves `lp` to an exact vertex (up to rounding).
pub fn solve_simplex(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpResult> {
    let n = lp.num_vars();
    let m = lp.rows.len();
    let slack_count = lp.rows.iter().filter(|r| r.sense == Sense::Le).count();

    // Rows with a +1 slack after sign normalization start with the slack in
    // the basis; the rest need an artificial.
    let mut needs_artificial = Vec::with_capacity(m);
    for row in &lp.rows {
        let flipped = row.rhs < 0.0;
        needs_artificial.push(row.sense == Sense::Eq || flipped);
    }
    let art_count = needs_artificial.iter().filter(|&&b| b).count();
    let cols = n + slack_count + art_count;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * w],
        basis: vec![0; m],
    };

    let mut slack = n;
    let mut art = n + slack_count;
    for (i, row) in lp.rows.iter().enumerate() {
        let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        for &(j, a) in &row.coeffs {
            t.data[i * w + j] += sign * a;
        }
        t.data[i * w + cols] = sign * row.rhs;
        if row.sense == Sense::Le {
            t.data[i * w + slack] = sign;
            if !needs_artificial[i] {
                t.basis[i] = slack;
            }
            slack += 1;
        }
        if needs_artificial[i] {
            t.data[i * w + art] = 1.0;
            t.basis[i] = art;
            art += 1;
        }
    }

    let mut iterations = 0;
    let first_art = n + slack_count;
    if art_count > 0 {
        let mut phase_one = vec![0.0; cols];
        phase_one[first_art..].iter_mut().for_each(|c| *c = 1.0);
        t.set_objective(&phase_one);
        if t.optimize(cols, opts, &mut iterations).is_err() {
            return Ok(limit(n, iterations));
        }
        let infeasibility = -t.at(m, cols);
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpResult {
                x: vec![0.0; n],
                objective: f64::NAN,
                status: LpStatus::Infeasible,
                iterations,
            });
        }
        // Drive zero-level artificials out of the basis where possible; rows
        // where that fails are redundant and keep their artificial at zero.
        for i in 0..m {
            if t.basis[i] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| t.at(i, j).abs() > 1e-9) {
                    t.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    t.set_objective(&cost);
    match t.optimize(first_art, opts, &mut iterations) {
        Err(()) => return Ok(limit(n, iterations)),
        Ok(false) => {
            return Ok(LpResult {
                x: vec![0.0; n],
                objective: f64::NEG_INFINITY,
                status: LpStatus::Unbounded,
                iterations,
            })
        }
        Ok(true) => {}
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i);
        }
    }
    Ok(LpResult {
        objective: lp.objective_value(&x),
        x,
        status: LpStatus::Optimal,
        iterations,
    })
}

fn limit(n: usize, iterations: usize) -> LpResult {
    LpResult {
        x: vec![0.0; n],
        objective: f64::NAN,
        status: LpStatus::IterationLimit,
        iterations,
    }
}
