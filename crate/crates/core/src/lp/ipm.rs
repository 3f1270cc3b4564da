//! Interior-point backend (clarabel).

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{LinearProgram, LpResult, LpStatus, Sense};
use crate::error::{Error, Result};

pub const MAX_IPM_ITERATIONS: u32 = 500;

/// Solves `lp` with a primal-dual interior-point method.
///
/// `tol` is used for the relative and absolute duality gap and for primal
/// and dual feasibility. The returned point is clipped to `x ≥ 0` and the
/// objective is recomputed from it.
pub fn solve_interior_point(lp: &LinearProgram, tol: f64) -> Result<LpResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("LP tolerance must be positive, got {tol}")));
    }
    let n = lp.num_vars();
    let eq: Vec<_> = lp.rows.iter().filter(|r| r.sense == Sense::Eq).collect();
    let le: Vec<_> = lp.rows.iter().filter(|r| r.sense == Sense::Le).collect();

    // Row layout: equalities, then inequalities, then -x ≤ 0.
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = Vec::with_capacity(lp.rows.len() + n);
    for (i, row) in eq.iter().chain(le.iter()).enumerate() {
        for &(j, a) in &row.coeffs {
            triplets.push((i, j, a));
        }
        b.push(row.rhs);
    }
    let offset = b.len();
    for j in 0..n {
        triplets.push((offset + j, j, -1.0));
        b.push(0.0);
    }
    let a = csc_from_triplets(b.len(), n, triplets);
    let p = CscMatrix::<f64>::zeros((n, n));

    let mut cones = Vec::new();
    if !eq.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(eq.len()));
    }
    cones.push(SupportedConeT::NonnegativeConeT(le.len() + n));

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(MAX_IPM_ITERATIONS)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .max_threads(1)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("solver settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &lp.objective, &a, &b, &cones, settings)
        .map_err(|e| Error::NumericalBreakdown(format!("solver setup: {e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => LpStatus::Optimal,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => LpStatus::IterationLimit,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            LpStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => LpStatus::Unbounded,
        other => {
            return Err(Error::NumericalBreakdown(format!(
                "interior-point solver stopped with status {other:?}"
            )))
        }
    };
    let x: Vec<f64> = if status == LpStatus::Optimal {
        sol.x.iter().map(|&v| v.max(0.0)).collect()
    } else {
        vec![0.0; n]
    };
    let objective = match status {
        LpStatus::Optimal => lp.objective_value(&x),
        LpStatus::Unbounded => f64::NEG_INFINITY,
        _ => f64::NAN,
    };
    Ok(LpResult {
        x,
        objective,
        status,
        iterations: sol.iterations as usize,
    })
}

fn csc_from_triplets(
    m: usize,
    n: usize,
    mut triplets: Vec<(usize, usize, f64)>,
) -> CscMatrix<f64> {
    triplets.sort_by_key(|&(i, j, _)| (j, i));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for (i, j, v) in triplets {
        if last == Some((i, j)) {
            *nzval.last_mut().expect("previous entry") += v;
            continue;
        }
        colptr[j + 1] += 1;
        rowval.push(i);
        nzval.push(v);
        last = Some((i, j));
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}
