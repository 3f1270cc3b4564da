//! Conical-hull data reduction.
//!
//! [`dr`] scans the columns once in ascending order and drops every column
//! that lies in the cone of the columns still present. [`drs`] first splits
//! the columns with k-means, reduces each group independently, and runs a
//! final [`dr`] pass over the union of the survivors. [`verify_gamma`]
//! checks that an index set generates the whole cone and that none of its
//! members is redundant.

use rayon::prelude::*;

use crate::error::Result;
use crate::kmeans::{kmeans_partition, Partition};
use crate::matrix::{HsiMatrix, IndexSet, ToleranceConfig};
use crate::nnls::cone_membership;

/// Single-pass conical-hull reduction.
///
/// Column `i` is removed when `min_{x ≥ 0} ‖A(K − i)x − a_i‖₂ < eps_feas`,
/// where `K` holds the columns still present. Each original column is tested
/// exactly once, in ascending order; among exact duplicates the last copy
/// survives.
pub fn dr(a: &HsiMatrix, tol: &ToleranceConfig) -> Result<IndexSet> {
    let n = a.ncols();
    let mut alive = vec![true; n];
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i && alive[j]).collect();
        if others.is_empty() {
            continue;
        }
        let sub = a.select_columns(&others)?;
        let (inside, _) = cone_membership(&sub, a.column(i), tol.eps_feas, tol.tol_nnls)?;
        if inside {
            alive[i] = false;
        }
    }
    Ok((0..n).filter(|&i| alive[i]).collect())
}

/// Intermediate results of [`drs`].
#[derive(Clone, Debug, PartialEq)]
pub struct DrsOutcome {
    pub partition: Partition,
    /// `K_u = I_u(J_u)` for every group, in original column indices.
    pub group_survivors: Vec<IndexSet>,
    /// `I = K_1 ∪ … ∪ K_p`.
    pub union: IndexSet,
    /// Final output `I(J)`.
    pub k: IndexSet,
}

/// Reduction via splitting; see [`drs_detailed`].
pub fn drs(a: &HsiMatrix, p: usize, tol: &ToleranceConfig, seed: u64) -> Result<IndexSet> {
    Ok(drs_detailed(a, p, tol, seed)?.k)
}

/// Reduction via splitting, returning every intermediate set.
///
/// The per-group passes are independent and run on the rayon pool; results
/// are collected in group order, so the output does not depend on the
/// schedule.
pub fn drs_detailed(
    a: &HsiMatrix,
    p: usize,
    tol: &ToleranceConfig,
    seed: u64,
) -> Result<DrsOutcome> {
    let partition = kmeans_partition(a, p, seed)?;
    let group_survivors = partition
        .groups
        .par_iter()
        .map(|group| {
            let sub = a.select_columns(group.as_slice())?;
            let local = dr(&sub, tol)?;
            group.compose(&local)
        })
        .collect::<Result<Vec<_>>>()?;
    let union = group_survivors
        .iter()
        .fold(IndexSet::default(), |acc, k| acc.union(k));
    let sub = a.select_columns(union.as_slice())?;
    let local = dr(&sub, tol)?;
    let k = union.compose(&local)?;
    Ok(DrsOutcome {
        partition,
        group_survivors,
        union,
        k,
    })
}

/// Result of [`verify_gamma`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GammaCheck {
    /// Every column of `A` is within `eps_feas` of `cone(A(K))`.
    pub in_gamma: bool,
    /// No `a_k`, `k ∈ K`, is within `eps_feas` of `cone(A(K − k))`.
    pub minimal: bool,
    /// First column violating generation, or failing that, first redundant
    /// member of `K`.
    pub witness: Option<usize>,
}

/// Checks whether `k` generates `cone(A)` and whether it is irredundant.
pub fn verify_gamma(a: &HsiMatrix, k: &IndexSet, tol: &ToleranceConfig) -> Result<GammaCheck> {
    k.validate_for(a.ncols())?;
    if k.is_empty() {
        let witness = (0..a.ncols()).find(|&j| a.column(j).iter().any(|&v| v != 0.0));
        return Ok(GammaCheck {
            in_gamma: witness.is_none(),
            minimal: true,
            witness,
        });
    }
    let sub = a.select_columns(k.as_slice())?;
    let mut gen_witness = None;
    for j in 0..a.ncols() {
        if k.contains(j) {
            continue;
        }
        let (inside, _) = cone_membership(&sub, a.column(j), tol.eps_feas, tol.tol_nnls)?;
        if !inside {
            gen_witness = Some(j);
            break;
        }
    }
    let mut redundant = None;
    for member in k.iter() {
        let rest = k.without(member);
        if rest.is_empty() {
            break;
        }
        let sub = a.select_columns(rest.as_slice())?;
        let (inside, _) = cone_membership(&sub, a.column(member), tol.eps_feas, tol.tol_nnls)?;
        if inside {
            redundant = Some(member);
            break;
        }
    }
    Ok(GammaCheck {
        in_gamma: gen_witness.is_none(),
        minimal: redundant.is_none(),
        witness: gen_witness.or(redundant),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(c: &[&[f64]]) -> HsiMatrix {
        HsiMatrix::from_columns(&c.iter().map(|v| v.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn interior_column_is_removed() {
        let a = cols(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        assert_eq!(dr(&a, &tol()).unwrap().as_slice(), &[0, 1]);
    }

    #[test]
    fn first_duplicate_goes_first() {
        let a = cols(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(dr(&a, &tol()).unwrap().as_slice(), &[1, 2]);
    }

    #[test]
    fn single_column_survives() {
        let a = cols(&[&[0.3, 0.7]]);
        assert_eq!(dr(&a, &tol()).unwrap().as_slice(), &[0]);
    }

    #[test]
    fn drs_with_one_group_equals_dr() {
        let a = cols(&[
            &[1.0, 0.0, 0.0],
            &[0.2, 0.5, 0.3],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[0.4, 0.4, 0.2],
        ]);
        assert_eq!(drs(&a, 1, &tol(), 9).unwrap(), dr(&a, &tol()).unwrap());
    }

    #[test]
    fn full_set_generates() {
        let a = cols(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let check = verify_gamma(&a, &IndexSet::full(3), &tol()).unwrap();
        assert!(check.in_gamma);
        assert!(!check.minimal);
        assert_eq!(check.witness, Some(0));
    }

    #[test]
    fn missing_generator_is_reported() {
        let a = cols(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let check = verify_gamma(&a, &IndexSet::new(vec![0]), &tol()).unwrap();
        assert!(!check.in_gamma);
        assert_eq!(check.witness, Some(1));
    }

    #[test]
    fn dr_output_passes_verification() {
        let a = cols(&[
            &[1.0, 0.0, 0.0],
            &[0.2, 0.5, 0.3],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[0.4, 0.4, 0.2],
        ]);
        let k = dr(&a, &tol()).unwrap();
        let check = verify_gamma(&a, &k, &tol()).unwrap();
        assert!(check.in_gamma && check.minimal, "{check:?}");
        assert_eq!(k.as_slice(), &[0, 2, 3]);
    }
}
