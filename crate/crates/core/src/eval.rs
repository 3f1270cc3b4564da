//! Evaluation metrics and validators for the recovery guarantees.

use nalgebra::DMatrix;

use crate::assignment::{rectangular_assignment, solve_assignment};
use crate::error::{Error, Result};
use crate::lp::{solve_simplex, LinearProgram, LpStatus, Sense, SimplexOptions};
use crate::matrix::{HsiMatrix, IndexSet, ToleranceConfig};
use crate::metric::{l1_distance, mrsa};
use crate::nnls::nnls_solve;
use crate::synth::{assemble, SynthInstance};

/// Column cap for the exact computation of ρ(W) (2^r LPs).
pub const RHO_MAX_COLUMNS: usize = 12;

/// MRSA values are reported on a 0–100 scale.
pub const MRSA_SCALE: f64 = 100.0;

/// `ρ(W) = min_{‖x‖₁ = 1} ‖Wx‖₁`.
///
/// For each sign pattern `s` the LP `min Σt s.t. −t ≤ W diag(s) y ≤ t,
/// Σy = 1, y ≥ 0` is solved exactly with the simplex method; the answer is
/// the smallest optimum.
pub fn rho(w: &HsiMatrix) -> Result<f64> {
    let (d, r) = w.shape();
    if r > RHO_MAX_COLUMNS {
        return Err(Error::TooManyColumns {
            cols: r,
            max: RHO_MAX_COLUMNS,
        });
    }
    let opts = SimplexOptions::default();
    let mut best = f64::INFINITY;
    for pattern in 0u32..(1 << r) {
        let sign = |i: usize| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut lp = LinearProgram::new(r + d);
        for k in 0..d {
            lp.objective[r + k] = 1.0;
            let row: Vec<(usize, f64)> = (0..r)
                .filter(|&i| w.get(k, i) != 0.0)
                .map(|i| (i, sign(i) * w.get(k, i)))
                .collect();
            let mut up = row.clone();
            up.push((r + k, -1.0));
            lp.add_row(up, Sense::Le, 0.0);
            let mut down: Vec<(usize, f64)> = row.into_iter().map(|(i, c)| (i, -c)).collect();
            down.push((r + k, -1.0));
            lp.add_row(down, Sense::Le, 0.0);
        }
        lp.add_row((0..r).map(|i| (i, 1.0)).collect(), Sense::Eq, 1.0);
        let res = solve_simplex(&lp, &opts)?;
        if res.status != LpStatus::Optimal {
            return Err(Error::NumericalBreakdown(format!(
                "conditioning LP for sign pattern {pattern} ended with {:?}",
                res.status
            )));
        }
        // Recompute from y so that the value is a true ‖Wx‖₁.
        let x: Vec<f64> = (0..r).map(|i| sign(i) * res.x[i]).collect();
        let value: f64 = (0..d)
            .map(|k| (0..r).map(|i| w.get(k, i) * x[i]).sum::<f64>().abs())
            .sum::<f64>()
            / x.iter().map(|v| v.abs()).sum::<f64>();
        best = best.min(value);
    }
    Ok(best)
}

/// `√((1/(r·n)) Σᵢ ‖A′(K)xᵢ − a′ᵢ‖₂²)` with `xᵢ` from NNLS, where `A′` is
/// `r x n`.
pub fn reconstruction_error(ap: &HsiMatrix, k: &IndexSet) -> Result<f64> {
    reconstruction_error_with(ap, k, ToleranceConfig::default().tol_nnls)
}

pub fn reconstruction_error_with(ap: &HsiMatrix, k: &IndexSet, tol_nnls: f64) -> Result<f64> {
    let (r, n) = ap.shape();
    if k.is_empty() {
        return Err(Error::InvalidArgument("index set must be nonempty".into()));
    }
    k.validate_for(n)?;
    let sub = ap.select_columns(k.as_slice())?;
    let mut total = 0.0;
    for i in 0..n {
        let res = nnls_solve(&sub, ap.column(i), tol_nnls)?;
        total += res.residual_norm * res.residual_norm;
    }
    Ok((total / (r * n) as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMetric {
    L1,
    /// Reported on the ×100 scale.
    Mrsa,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Self::L1),
            "mrsa" => Ok(Self::Mrsa),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

fn distance(metric: DistanceMetric, a: &[f64], b: &[f64]) -> Result<f64> {
    match metric {
        DistanceMetric::L1 => Ok(l1_distance(a, b)),
        DistanceMetric::Mrsa => Ok(MRSA_SCALE * mrsa(a, b)?),
    }
}

/// `(1/r) Σᵢ min_{k∈S} dist(wᵢ, a_k)`.
pub fn dict_distance(
    a: &HsiMatrix,
    s: &IndexSet,
    w: &HsiMatrix,
    metric: DistanceMetric,
) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("index set must be nonempty".into()));
    }
    s.validate_for(a.ncols())?;
    if a.nrows() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", a.nrows()),
            found: format!("{} rows", w.nrows()),
        });
    }
    let mut total = 0.0;
    for wi in w.columns() {
        let mut best = f64::INFINITY;
        for k in s.iter() {
            best = best.min(distance(metric, wi, a.column(k))?);
        }
        total += best;
    }
    Ok(total / w.ncols() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchScore {
    /// `sigma[j]` is the reference column matched to estimate column `j`.
    pub sigma: Vec<usize>,
    /// Matched distances (MRSA on the ×100 scale).
    pub per_col: Vec<f64>,
    /// Mean of `per_col`.
    pub score: f64,
}

/// Matches estimated to reference signatures by minimum total MRSA.
pub fn mrsa_score(w_ref: &HsiMatrix, w_est: &HsiMatrix) -> Result<MatchScore> {
    match_score(w_ref, w_est, DistanceMetric::Mrsa)
}

/// Matches estimated to reference signatures by minimum total distance.
pub fn match_score(
    w_ref: &HsiMatrix,
    w_est: &HsiMatrix,
    metric: DistanceMetric,
) -> Result<MatchScore> {
    if w_ref.shape() != w_est.shape() {
        let (a, b) = (w_ref.shape(), w_est.shape());
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", a.0, a.1),
            found: format!("{}x{}", b.0, b.1),
        });
    }
    let r = w_ref.ncols();
    let mut cost = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            cost[(i, j)] = distance(metric, w_ref.column(i), w_est.column(j))?;
        }
    }
    let sigma = solve_assignment(&cost)?;
    let per_col: Vec<f64> = sigma.iter().enumerate().map(|(j, &i)| cost[(i, j)]).collect();
    let score = per_col.iter().sum::<f64>() / r as f64;
    Ok(MatchScore {
        sigma,
        per_col,
        score,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub rho: f64,
    /// `‖V‖₁` of the assembled noise.
    pub epsilon: f64,
    /// `ε < ρ/9`.
    pub hypothesis_holds: bool,
    /// `k_j` for each endmember `j`, distinct.
    pub chosen: Vec<usize>,
    pub per_j_l1: Vec<f64>,
    /// `(9/ρ + 1)ε`.
    pub bound: f64,
    pub satisfied: bool,
}

/// Checks the distance guarantee for `K` on the instance assembled at `nu`.
///
/// The indices `k_j` come from a minimum-cost assignment on the L1 distances
/// between `W` and `A(K)`, where any pair at or above the bound carries an
/// extra penalty larger than every feasible total; a matching with all
/// distances under the bound is therefore found whenever one exists. At
/// `ν = 0` the bound is 0 and `satisfied` means every distance is exactly 0.
pub fn theorem1_check(inst: &SynthInstance, nu: f64, k: &IndexSet) -> Result<TheoremReport> {
    let r = inst.r();
    if k.len() < r {
        return Err(Error::KSmallerThanR { k: k.len(), r });
    }
    let a = assemble(inst, nu)?;
    k.validate_for(a.ncols())?;
    let rho = rho(&inst.w)?;
    let epsilon = nu;
    let hypothesis_holds = epsilon < rho / 9.0;
    let bound = if epsilon == 0.0 {
        0.0
    } else if rho > 0.0 {
        (9.0 / rho + 1.0) * epsilon
    } else {
        f64::INFINITY
    };

    let mut dist = DMatrix::zeros(r, k.len());
    for j in 0..r {
        for (c, kk) in k.iter().enumerate() {
            dist[(j, c)] = l1_distance(inst.w.column(j), a.column(kk));
        }
    }
    let penalty = if bound.is_finite() {
        r as f64 * bound + 1.0
    } else {
        0.0
    };
    let cost = dist.map(|v| if v >= bound { v + penalty } else { v });
    let (cols, _) = rectangular_assignment(&cost)?;
    let chosen: Vec<usize> = cols.iter().map(|&c| k.as_slice()[c]).collect();
    let per_j_l1: Vec<f64> = cols.iter().enumerate().map(|(j, &c)| dist[(j, c)]).collect();
    let satisfied = if epsilon == 0.0 {
        per_j_l1.iter().all(|&v| v == 0.0)
    } else {
        per_j_l1.iter().all(|&v| v < bound)
    };
    Ok(TheoremReport {
        rho,
        epsilon,
        hypothesis_holds,
        chosen,
        per_j_l1,
        bound,
        satisfied,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuReport {
    /// `μ(j) = max_{k∈K} H(j,k)`.
    pub mu: Vec<f64>,
    /// `4ε/(ρ(1 − ε))`.
    pub bound: f64,
    /// `max_j 1 − μ(j)`.
    pub worst_gap: f64,
    /// `worst_gap ≤ bound < 1/2`.
    pub holds: bool,
}

/// Evaluates `μ(j)` on a synthetic instance with known `H` and checks
/// `1 − μ(j) ≤ 4ε/(ρ(1 − ε)) < 1/2` for all `j`.
pub fn mu_check(h: &HsiMatrix, k: &IndexSet, epsilon: f64, rho: f64) -> Result<MuReport> {
    k.validate_for(h.ncols())?;
    if k.is_empty() {
        return Err(Error::InvalidArgument("index set must be nonempty".into()));
    }
    let mu: Vec<f64> = (0..h.nrows())
        .map(|j| k.iter().map(|c| h.get(j, c)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let bound = if rho > 0.0 && epsilon < 1.0 {
        4.0 * epsilon / (rho * (1.0 - epsilon))
    } else {
        f64::INFINITY
    };
    let worst_gap = mu.iter().map(|m| 1.0 - m).fold(f64::NEG_INFINITY, f64::max);
    Ok(MuReport {
        holds: worst_gap <= bound && bound < 0.5,
        mu,
        bound,
        worst_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(c: &[&[f64]]) -> HsiMatrix {
        HsiMatrix::from_columns(&c.iter().map(|v| v.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rho_of_identity() {
        assert!((rho(&HsiMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_of_dependent_columns() {
        let w = cols(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(rho(&w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rho_small_example() {
        let w = HsiMatrix::from_rows(&[&[1.0, 0.5], &[0.0, 0.5]]).unwrap();
        assert!((rho(&w).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rho_column_cap() {
        let w = HsiMatrix::identity(13);
        assert!(matches!(rho(&w), Err(Error::TooManyColumns { cols: 13, max: 12 })));
    }

    #[test]
    fn reconstruction_examples() {
        let ap = HsiMatrix::identity(2);
        assert_eq!(reconstruction_error(&ap, &IndexSet::full(2)).unwrap(), 0.0);
        let e = reconstruction_error(&ap, &IndexSet::new(vec![0])).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_index_distance() {
        let a = cols(&[&[0.2, 0.3, 0.5], &[0.5, 0.3, 0.2]]);
        let w = cols(&[&[0.3, 0.3, 0.4]]);
        let s = IndexSet::new(vec![1]);
        let l1 = dict_distance(&a, &s, &w, DistanceMetric::L1).unwrap();
        assert!((l1 - 0.4).abs() < 1e-15);
        let m = dict_distance(&a, &s, &w, DistanceMetric::Mrsa).unwrap();
        assert!((m - 100.0 * mrsa(w.column(0), a.column(1)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn score_of_permuted_copy() {
        let w = cols(&[&[0.1, 0.2, 0.7], &[0.6, 0.3, 0.1], &[0.3, 0.5, 0.2]]);
        let est = w.select_columns(&[2, 0, 1]).unwrap();
        let s = mrsa_score(&w, &est).unwrap();
        assert_eq!(s.sigma, vec![2, 0, 1]);
        assert!(s.score.abs() < 1e-12);
        let same = mrsa_score(&w, &w).unwrap();
        assert_eq!(same.sigma, vec![0, 1, 2]);
        assert_eq!(same.score, 0.0);
    }

    #[test]
    fn mu_bound() {
        let h = HsiMatrix::from_rows(&[&[1.0, 0.0, 0.6], &[0.0, 1.0, 0.4]]).unwrap();
        let rep = mu_check(&h, &IndexSet::new(vec![0, 1]), 0.01, 0.5).unwrap();
        assert_eq!(rep.mu, vec![1.0, 1.0]);
        assert!(rep.holds);
        let rep = mu_check(&h, &IndexSet::new(vec![2]), 0.01, 0.5).unwrap();
        assert!(!rep.holds);
    }
}
