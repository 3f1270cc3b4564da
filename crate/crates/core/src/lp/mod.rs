//! Linear programs over nonnegative variables, with two independent solvers.
//!
//! * [`solve_interior_point`]: primal-dual interior-point method (clarabel)
//!   on the sparse problem. Used for model H in production.
//! * [`solve_simplex`]: dense two-phase tableau simplex with Bland's rule.
//!   Exact vertex solutions for small problems; used for ρ(W) and as a
//!   cross-check of the interior-point path.

mod ipm;
mod simplex;
mod text;

pub use ipm::solve_interior_point;
pub use simplex::{solve_simplex, SimplexOptions};
pub use text::write_lp_text;

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    /// `aᵀx ≤ b`
    Le,
    /// `aᵀx = b`
    Eq,
}

/// One sparse linear constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize cᵀx subject to the rows, x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    /// Optional variable names, used by the text exporter.
    pub names: Option<Vec<String>>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            names: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars()));
        self.rows.push(Constraint { coeffs, sense, rhs });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or of `x ≥ 0`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.sense {
                Sense::Le => (lhs - row.rhs).max(0.0),
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    IterationLimit,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min -x - y  s.t. x + 2y ≤ 4, 3x + y ≤ 6  → optimum at (1.6, 1.2), value -2.8
    fn small() -> LinearProgram {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.add_row(vec![(0, 1.0), (1, 2.0)], Sense::Le, 4.0);
        lp.add_row(vec![(0, 3.0), (1, 1.0)], Sense::Le, 6.0);
        lp
    }

    #[test]
    fn both_solvers_agree_on_a_textbook_lp() {
        let lp = small();
        let s = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        let i = solve_interior_point(&lp, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(i.status, LpStatus::Optimal);
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!((i.objective + 2.8).abs() < 1e-7);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn equality_rows_and_negative_rhs() {
        // min x + 2y  s.t. x + y = 1, -x ≤ -0.25  → (1, 0), value 1
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        lp.add_row(vec![(0, -1.0)], Sense::Le, -0.25);
        let s = solve_simplex(&lp, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
        let i = solve_interior_point(&lp, 1e-9).unwrap();
        assert!((i.objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded_are_detected() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_row(vec![(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(
            solve_simplex(&lp, &SimplexOptions::default()).unwrap().status,
            LpStatus::Infeasible
        );
        assert_eq!(solve_interior_point(&lp, 1e-9).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add_row(vec![(0, -1.0)], Sense::Le, 1.0);
        assert_eq!(
            solve_simplex(&lp, &SimplexOptions::default()).unwrap().status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn violation_measure() {
        let lp = small();
        assert!(lp.max_violation(&[1.6, 1.2]) < 1e-15);
        assert!((lp.max_violation(&[2.0, 1.2]) - 1.2).abs() < 1e-12);
        assert_eq!(lp.max_violation(&[-0.5, 0.0]), 0.5);
    }
}
