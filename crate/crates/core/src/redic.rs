//! The full extraction pipeline: SVD reduction, reduction via splitting,
//! randomly augmented Hottopixx repetitions, alignment and averaging.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::solve_assignment;
use crate::dimred::reduce_dimension;
use crate::error::{Error, Result};
use crate::hottopixx::{build_model_h, postprocess_method_c, solve_model_h};
use crate::matrix::{HsiMatrix, IndexSet, ToleranceConfig};
use crate::metric::mrsa;
use crate::reduce::drs;

pub const DEFAULT_GROUPS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct RedicConfig {
    pub r: usize,
    pub lambda: usize,
    pub tau: usize,
    pub p: usize,
    pub seed: u64,
    pub tolerances: ToleranceConfig,
}

impl RedicConfig {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            lambda: 0,
            tau: 1,
            p: DEFAULT_GROUPS,
            seed: 0,
            tolerances: ToleranceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndmemberEstimate {
    /// `d x r`, mean of the aligned repetitions.
    pub w_hat: HsiMatrix,
    /// Aligned `W_j`, one per repetition.
    pub per_rep: Vec<HsiMatrix>,
    /// Column indices of `A` behind each aligned `W_j`, in column order.
    pub selected_indices: Vec<Vec<usize>>,
    /// Output of the reduction step on `A′`.
    pub k: IndexSet,
}

/// Draws `lambda` indices uniformly without replacement from `[n] \ K`.
///
/// Repetition `rep` uses its own ChaCha8 stream of `seed`, so its draw does
/// not depend on how many repetitions run.
pub fn sample_augmentation(
    k: &IndexSet,
    n: usize,
    lambda: usize,
    seed: u64,
    rep: u64,
) -> Result<IndexSet> {
    let pool = k.complement(n);
    if lambda > pool.len() {
        return Err(Error::InsufficientColumns {
            requested: lambda,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Stream 0 belongs to the k-means seeding.
    rng.set_stream(rep + 1);
    let picks = rand::seq::index::sample(&mut rng, pool.len(), lambda);
    Ok(picks.into_iter().map(|i| pool.as_slice()[i]).collect())
}

/// Runs the pipeline on `a` (`d x n`).
pub fn redic(a: &HsiMatrix, cfg: &RedicConfig) -> Result<EndmemberEstimate> {
    cfg.tolerances.validate()?;
    if cfg.tau == 0 {
        return Err(Error::InvalidArgument("tau must be at least 1".into()));
    }
    let n = a.ncols();
    let ap = reduce_dimension(a, cfg.r)?;
    let k = drs(&ap, cfg.p.min(n), &cfg.tolerances, cfg.seed)?;
    if cfg.lambda > n - k.len() {
        return Err(Error::InsufficientColumns {
            requested: cfg.lambda,
            available: n - k.len(),
        });
    }

    let reps: Vec<Vec<usize>> = (0..cfg.tau)
        .into_par_iter()
        .map(|j| {
            let add = sample_augmentation(&k, n, cfg.lambda, cfg.seed, j as u64)?;
            let s = k.union(&add);
            let sub = ap.select_columns(s.as_slice())?;
            let model = build_model_h(&sub, cfg.r)?;
            let sol = solve_model_h(&model, cfg.tolerances.tol_lp)?;
            let picked = postprocess_method_c(&sub, &sol.x, cfg.r, cfg.tolerances.tol_lp)?;
            Ok(picked.iter().map(|pos| s.as_slice()[pos]).collect())
        })
        .collect::<Result<_>>()?;

    let mut per_rep: Vec<HsiMatrix> = Vec::with_capacity(cfg.tau);
    let mut selected_indices = Vec::with_capacity(cfg.tau);
    for idx in reps {
        let wj = a.select_columns(&idx)?;
        if per_rep.is_empty() {
            per_rep.push(wj);
            selected_indices.push(idx);
            continue;
        }
        let c = mean_of(&per_rep);
        let (aligned, perm) = align_columns(&c, &wj)?;
        per_rep.push(aligned);
        selected_indices.push(perm.iter().map(|&p| idx[p]).collect());
    }
    Ok(EndmemberEstimate {
        w_hat: mean_of(&per_rep),
        per_rep,
        selected_indices,
        k,
    })
}

fn mean_of(ms: &[HsiMatrix]) -> HsiMatrix {
    let (d, r) = ms[0].shape();
    let mut acc = DMatrix::zeros(d, r);
    for m in ms {
        acc += m.as_dmatrix();
    }
    HsiMatrix::from_dmatrix(acc / ms.len() as f64).expect("finite mean")
}

/// Permutes the columns of `wj` to minimize the total MRSA against the
/// columns of `c`. Returns the permuted matrix and `perm`, where column `i`
/// of the result is column `perm[i]` of `wj`.
pub fn align_columns(c: &HsiMatrix, wj: &HsiMatrix) -> Result<(HsiMatrix, Vec<usize>)> {
    if c.shape() != wj.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", c.nrows(), c.ncols()),
            found: format!("{}x{}", wj.nrows(), wj.ncols()),
        });
    }
    let r = c.ncols();
    let mut cost = DMatrix::zeros(r, r);
    for p in 0..r {
        for i in 0..r {
            cost[(p, i)] = mrsa(wj.column(p), c.column(i))?;
        }
    }
    let perm = solve_assignment(&cost)?;
    Ok((wj.select_columns(&perm)?, perm))
}
