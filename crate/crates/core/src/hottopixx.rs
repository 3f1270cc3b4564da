//! The Hottopixx LP (model H) and centroid-based postprocessing.
//!
//! Model H is
//!
//! ```text
//! minimize    ‖A − AX‖₁ (entrywise)
//! subject to  Σᵢ X(i,i) = r,  0 ≤ X(i,j) ≤ X(i,i) ≤ 1
//! ```
//!
//! linearized with an epigraph matrix `T`: minimize `1ᵀT1` subject to
//! `−T ≤ A − AX ≤ T`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lp::{
    solve_interior_point, solve_simplex, LinearProgram, LpResult, LpStatus, Sense,
    SimplexOptions,
};
use crate::matrix::{HsiMatrix, IndexSet};

/// Largest column count for which the dense simplex is used as a fallback
/// when the interior-point solve fails.
pub const SIMPLEX_FALLBACK_MAX_M: usize = 60;

/// Model H as an explicit LP.
///
/// Variable layout: `X(i,j)` at `j·m + i`, then `T(k,j)` at
/// `m² + j·rows + k`.
#[derive(Clone, Debug)]
pub struct ModelH {
    a: HsiMatrix,
    r: usize,
    lp: LinearProgram,
}

/// Constraint counts of model H, with `X(i,j) ≤ X(i,i)` counted for every
/// pair (the `m` diagonal instances are trivially true and are left out of
/// the assembled LP) and `X ≥ 0` counted as `m²` bound constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Census {
    pub variables: usize,
    pub residual: usize,
    pub trace: usize,
    pub coupling: usize,
    pub nonnegativity: usize,
    pub diagonal_upper: usize,
}

impl Census {
    pub fn total(&self) -> usize {
        self.residual + self.trace + self.coupling + self.nonnegativity + self.diagonal_upper
    }
}

impl ModelH {
    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn matrix(&self) -> &HsiMatrix {
        &self.a
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn x_index(&self, i: usize, j: usize) -> usize {
        j * self.m() + i
    }

    pub fn t_index(&self, k: usize, j: usize) -> usize {
        self.m() * self.m() + j * self.rows() + k
    }

    pub fn census(&self) -> Census {
        let (m, rows) = (self.m(), self.rows());
        Census {
            variables: self.lp.num_vars(),
            residual: 2 * rows * m,
            trace: 1,
            coupling: m * m,
            nonnegativity: m * m,
            diagonal_upper: m,
        }
    }

    fn unpack_x(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        DMatrix::from_column_slice(m, m, &x[..m * m])
    }
}

/// Builds model H for the columns of `a`.
pub fn build_model_h(a: &HsiMatrix, r: usize) -> Result<ModelH> {
    let (rows, m) = a.shape();
    if r == 0 || r > m {
        return Err(Error::BadRank { r, m });
    }
    let xi = |i: usize, j: usize| j * m + i;
    let ti = |k: usize, j: usize| m * m + j * rows + k;
    let mut lp = LinearProgram::new(m * m + rows * m);
    for j in 0..m {
        for k in 0..rows {
            lp.objective[ti(k, j)] = 1.0;
        }
    }
    for j in 0..m {
        for k in 0..rows {
            // (AX)(k,j) − T(k,j) ≤ A(k,j)  and  −(AX)(k,j) − T(k,j) ≤ −A(k,j)
            let ax: Vec<(usize, f64)> = (0..m)
                .filter(|&i| a.get(k, i) != 0.0)
                .map(|i| (xi(i, j), a.get(k, i)))
                .collect();
            let mut upper = ax.clone();
            upper.push((ti(k, j), -1.0));
            lp.add_row(upper, Sense::Le, a.get(k, j));
            let mut lower: Vec<(usize, f64)> = ax.into_iter().map(|(v, c)| (v, -c)).collect();
            lower.push((ti(k, j), -1.0));
            lp.add_row(lower, Sense::Le, -a.get(k, j));
        }
    }
    lp.add_row((0..m).map(|i| (xi(i, i), 1.0)).collect(), Sense::Eq, r as f64);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                lp.add_row(vec![(xi(i, j), 1.0), (xi(i, i), -1.0)], Sense::Le, 0.0);
            }
        }
    }
    for i in 0..m {
        lp.add_row(vec![(xi(i, i), 1.0)], Sense::Le, 1.0);
    }
    let mut names = Vec::with_capacity(lp.num_vars());
    for j in 0..m {
        for i in 0..m {
            names.push(format!("X_{i}_{j}"));
        }
    }
    for j in 0..m {
        for k in 0..rows {
            names.push(format!("T_{k}_{j}"));
        }
    }
    lp.names = Some(names);
    Ok(ModelH {
        a: a.clone(),
        r,
        lp,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpBackend {
    InteriorPoint,
    Simplex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    /// `m x m`.
    pub x: DMatrix<f64>,
    /// `‖A − AX‖₁` recomputed from `x`.
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
    pub backend: LpBackend,
}

/// Solves model H with the interior-point method, falling back to the dense
/// simplex for `m ≤ SIMPLEX_FALLBACK_MAX_M` when the interior-point result
/// is unusable (breakdown, iteration limit, or a constraint violation above
/// `tol_lp`).
pub fn solve_model_h(model: &ModelH, tol_lp: f64) -> Result<LpSolution> {
    let ipm = solve_with(model, LpBackend::InteriorPoint, tol_lp);
    let fallback = model.m() <= SIMPLEX_FALLBACK_MAX_M;
    match ipm {
        Ok(sol) if audit_model_h(model.matrix(), model.r(), &sol.x, tol_lp).passed => Ok(sol),
        _ if fallback => solve_with(model, LpBackend::Simplex, tol_lp),
        Ok(_) => Err(Error::NumericalBreakdown(
            "interior-point solution violates model H constraints".into(),
        )),
        Err(e) => Err(e),
    }
}

/// Solves model H with the chosen backend and no fallback.
pub fn solve_with(model: &ModelH, backend: LpBackend, tol_lp: f64) -> Result<LpSolution> {
    let res: LpResult = match backend {
        // Solve a notch tighter than the audit tolerance so that the audit has
        // headroom.
        LpBackend::InteriorPoint => solve_interior_point(model.lp(), tol_lp * 1e-2)?,
        LpBackend::Simplex => solve_simplex(model.lp(), &SimplexOptions::default())?,
    };
    match res.status {
        LpStatus::IterationLimit => return Err(Error::IterationLimit),
        LpStatus::Unbounded => {
            return Err(Error::NumericalBreakdown("model H reported unbounded".into()))
        }
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("model H reported infeasible".into()))
        }
        LpStatus::Optimal => {}
    }
    let x = model.unpack_x(&res.x);
    let objective = residual_l1(model.matrix(), &x);
    Ok(LpSolution {
        x,
        objective,
        status: res.status,
        iterations: res.iterations,
        backend,
    })
}

/// Entrywise `‖A − AX‖₁`.
pub fn residual_l1(a: &HsiMatrix, x: &DMatrix<f64>) -> f64 {
    let a = a.as_dmatrix();
    (a - a * x).iter().map(|v| v.abs()).sum()
}

/// Outcome of [`audit_model_h`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HAudit {
    pub max_violation: f64,
    pub trace_error: f64,
    pub passed: bool,
}

/// Checks `X` against the constraints of model H directly, without going
/// through the LP encoding.
pub fn audit_model_h(a: &HsiMatrix, r: usize, x: &DMatrix<f64>, tol: f64) -> HAudit {
    let m = a.ncols();
    if x.shape() != (m, m) {
        return HAudit {
            max_violation: f64::INFINITY,
            trace_error: f64::INFINITY,
            passed: false,
        };
    }
    let mut worst = 0.0f64;
    for i in 0..m {
        let d = x[(i, i)];
        worst = worst.max(d - 1.0);
        for j in 0..m {
            worst = worst.max(-x[(i, j)]);
            worst = worst.max(x[(i, j)] - d);
        }
    }
    let trace_error = (x.trace() - r as f64).abs();
    HAudit {
        max_violation: worst,
        trace_error,
        passed: worst <= tol && trace_error <= tol,
    }
}

/// Method-C: picks `r` representative columns from an LP solution.
///
/// 1. Seeds are the `r` largest diagonal entries of `X` (lowest index on
///    ties).
/// 2. Every column `j` joins the seed `i` with the largest `X(i,j)` (lowest
///    seed on ties). Seeds always join their own cluster. Columns whose
///    largest seed weight is at most `tol` join no cluster.
/// 3. Each cluster contributes the member closest in L2 to the centroid of
///    its columns of `A` (lowest index on ties).
pub fn postprocess_method_c(
    a: &HsiMatrix,
    x: &DMatrix<f64>,
    r: usize,
    tol: f64,
) -> Result<IndexSet> {
    let m = a.ncols();
    if x.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: format!("{m}x{m}"),
            found: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    if r == 0 || r > m {
        return Err(Error::BadRank { r, m });
    }
    let nonzero = (0..m).filter(|&i| x[(i, i)] > tol).count();
    if nonzero < r {
        return Err(Error::DegenerateDiagonal { nonzero, r });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&p, &q| x[(q, q)].partial_cmp(&x[(p, p)]).expect("finite LP solution"));
    let mut seeds = order[..r].to_vec();
    seeds.sort_unstable();

    let mut clusters: Vec<Vec<usize>> = seeds.iter().map(|&s| vec![s]).collect();
    for j in 0..m {
        if seeds.contains(&j) {
            continue;
        }
        let mut best = 0;
        for (c, &s) in seeds.iter().enumerate().skip(1) {
            if x[(s, j)] > x[(seeds[best], j)] {
                best = c;
            }
        }
        if x[(seeds[best], j)] > tol {
            clusters[best].push(j);
        }
    }

    let d = a.nrows();
    let mut chosen = Vec::with_capacity(r);
    for members in &mut clusters {
        members.sort_unstable();
        let mut centroid = vec![0.0; d];
        for &j in members.iter() {
            for (c, v) in centroid.iter_mut().zip(a.column(j)) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= members.len() as f64);
        let mut best = members[0];
        let mut best_d = f64::INFINITY;
        for &j in members.iter() {
            let dist: f64 = a
                .column(j)
                .iter()
                .zip(&centroid)
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            if dist < best_d {
                best_d = dist;
                best = j;
            }
        }
        chosen.push(best);
    }
    Ok(IndexSet::new(chosen))
}
