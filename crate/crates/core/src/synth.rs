//! Synthetic nearly separable instances `A = WH + (ν/‖V‖₁)V`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::Sidecar;
use crate::matrix::{l1_normalize_columns, HsiMatrix};
use crate::metric::mrsa;

/// Projected-gradient stopping tolerance for the simplex-constrained least
/// squares step.
pub const SIMPLEX_LS_TOL: f64 = 1e-8;
pub const SIMPLEX_LS_MAX_ITERATIONS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthInstance {
    /// `d x r`, unit L1 columns.
    pub w: HsiMatrix,
    /// `r x n`, nonnegative, unit L1 columns, `H(·, pure[j]) = e_j`.
    pub h: HsiMatrix,
    /// `d x n` noise direction.
    pub v: HsiMatrix,
    pub pure_indices: Vec<usize>,
    /// Noise intensity the instance was built at (`‖V‖₁` for derived
    /// instances, 0 for random ones until assembled).
    pub nu: f64,
}

/// Result of [`SynthInstance::audit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthAudit {
    pub max_w_norm_error: f64,
    pub max_h_norm_error: f64,
    pub min_h: f64,
    pub pure_columns_exact: bool,
}

impl SynthAudit {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_w_norm_error <= tol
            && self.max_h_norm_error <= tol
            && self.min_h >= 0.0
            && self.pure_columns_exact
    }
}

impl SynthInstance {
    pub fn r(&self) -> usize {
        self.w.ncols()
    }

    /// `WH`.
    pub fn clean(&self) -> DMatrix<f64> {
        self.w.as_dmatrix() * self.h.as_dmatrix()
    }

    pub fn audit(&self) -> SynthAudit {
        let norm_err = |m: &HsiMatrix| {
            (0..m.ncols())
                .map(|j| (m.column_l1(j) - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let r = self.r();
        let pure_columns_exact = self.pure_indices.iter().enumerate().all(|(j, &p)| {
            self.h
                .column(p)
                .iter()
                .enumerate()
                .all(|(i, &v)| v == if i == j { 1.0 } else { 0.0 })
        }) && self.pure_indices.len() == r;
        SynthAudit {
            max_w_norm_error: norm_err(&self.w),
            max_h_norm_error: norm_err(&self.h),
            min_h: self.h.as_slice().iter().copied().fold(f64::INFINITY, f64::min),
            pure_columns_exact,
        }
    }

    /// Metadata for the sidecar file: pure indices (1-based), ν, seed.
    pub fn sidecar(&self, nu: f64, seed: Option<u64>) -> Sidecar {
        let mut s = Sidecar::new();
        let pure: Vec<String> = self.pure_indices.iter().map(|i| (i + 1).to_string()).collect();
        s.set("r", self.r())
            .set("d", self.w.nrows())
            .set("n", self.h.ncols())
            .set("pure_indices", pure.join(","))
            .set("nu", format!("{nu:e}"))
            .set("noise_l1", format!("{:e}", self.v.l1_norm()));
        if let Some(seed) = seed {
            s.set("seed", seed);
        }
        s
    }
}

/// Parses the 1-based `pure_indices` entry of a sidecar.
pub fn pure_indices_from_sidecar(s: &Sidecar) -> Result<Vec<usize>> {
    let raw = s.get("pure_indices").ok_or_else(|| Error::Parse {
        location: "sidecar".into(),
        message: "missing key pure_indices".into(),
    })?;
    raw.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Error::Parse {
                location: "sidecar pure_indices".into(),
                message: format!("bad index {t:?}"),
            }),
        })
        .collect()
}

/// `A = WH + (ν/‖V‖₁)V`, or `WH` when `ν = 0`.
pub fn assemble(inst: &SynthInstance, nu: f64) -> Result<HsiMatrix> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise intensity must be >= 0, got {nu}")));
    }
    let clean = inst.clean();
    if nu == 0.0 {
        return HsiMatrix::from_dmatrix(clean);
    }
    let vn = inst.v.l1_norm();
    if vn == 0.0 {
        return Err(Error::ZeroNoise);
    }
    HsiMatrix::from_dmatrix(clean + inst.v.as_dmatrix() * (nu / vn))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        acc += uk;
        let t = (acc - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// `min ‖Wx − y‖₂²` over the probability simplex, by FISTA with exact
/// projection. Stops when the projected-gradient step moves `x` by less
/// than [`SIMPLEX_LS_TOL`].
pub fn simplex_least_squares(w: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let r = w.ncols();
    let gram = w.transpose() * w;
    let wty = w.transpose() * nalgebra::DVector::from_column_slice(y);
    let lip = gram
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(1e-300);
    let grad = |x: &[f64]| -> Vec<f64> {
        let xv = nalgebra::DVector::from_column_slice(x);
        (&gram * xv - &wty).iter().copied().collect()
    };
    let step = |x: &[f64]| -> Vec<f64> {
        let g = grad(x);
        let z: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
        project_simplex(&z)
    };
    let mut x = vec![1.0 / r as f64; r];
    let mut yk = x.clone();
    let mut t = 1.0f64;
    for _ in 0..SIMPLEX_LS_MAX_ITERATIONS {
        let next = step(&yk);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        yk = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = next;
        t = t_next;
        let moved: f64 = step(&x)
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if moved < SIMPLEX_LS_TOL {
            break;
        }
    }
    x
}

/// Derives `(W, H, V)` from a real image and reference signatures.
///
/// 1. L1-normalize the columns of `a_real` and `w_ident`.
/// 2. Match each reference `w_j` to the column minimizing MRSA (lowest index
///    on ties).
/// 3. `W` = the matched columns.
/// 4. Fit every column on the simplex over `W`, then overwrite the matched
///    columns of the fit with unit vectors.
/// 5. `H` = the fit, `V = A − WH`.
pub fn derive_whv(a_real: &HsiMatrix, w_ident: &HsiMatrix) -> Result<SynthInstance> {
    let (d, n) = a_real.shape();
    let r = w_ident.ncols();
    if w_ident.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("{d} rows"),
            found: format!("{} rows", w_ident.nrows()),
        });
    }
    if r > n {
        return Err(Error::InsufficientColumns {
            requested: r,
            available: n,
        });
    }
    let a = l1_normalize_columns(a_real)?;
    let wi = l1_normalize_columns(w_ident)?;

    let mut pure = Vec::with_capacity(r);
    for j in 0..r {
        let mut best = 0;
        let mut best_v = f64::INFINITY;
        for i in 0..n {
            let v = mrsa(wi.column(j), a.column(i))?;
            if v < best_v {
                best_v = v;
                best = i;
            }
        }
        if let Some(first) = pure.iter().position(|&p| p == best) {
            return Err(Error::DuplicateMatch {
                first,
                second: j,
                column: best,
            });
        }
        pure.push(best);
    }
    let w = a.select_columns(&pure)?;
    let wd = w.as_dmatrix().clone();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| simplex_least_squares(&wd, a.column(i)))
        .collect();
    let mut h = DMatrix::zeros(r, n);
    for (i, c) in cols.iter().enumerate() {
        h.set_column(i, &nalgebra::DVector::from_column_slice(c));
    }
    for (j, &p) in pure.iter().enumerate() {
        h.column_mut(p).fill(0.0);
        h[(j, p)] = 1.0;
    }
    let v = a.as_dmatrix() - &wd * &h;
    let v = HsiMatrix::from_dmatrix(v)?;
    let nu = v.l1_norm();
    Ok(SynthInstance {
        w,
        h: HsiMatrix::from_dmatrix(h)?,
        v,
        pure_indices: pure,
        nu,
    })
}

/// A random separable instance: uniform `W` with unit L1 columns,
/// `H = [I, H̄]Π` with Dirichlet(1) columns in `H̄`, Gaussian `V`.
pub fn random_separable(d: usize, n: usize, r: usize, seed: u64) -> Result<SynthInstance> {
    let max = d.min(n);
    if r == 0 || r > max {
        return Err(Error::RankTooLarge { rank: r, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = loop {
        let raw = DMatrix::from_fn(d, r, |_, _| rng.gen::<f64>());
        if let Ok(w) = l1_normalize_columns(&HsiMatrix::from_dmatrix(raw)?) {
            break w;
        }
    };
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let pure = perm[..r].to_vec();
    let mut h = DMatrix::zeros(r, n);
    for (j, &p) in pure.iter().enumerate() {
        h[(j, p)] = 1.0;
    }
    let dirichlet = if r > 1 {
        Some(Dirichlet::new(&vec![1.0; r]).expect("valid concentration"))
    } else {
        None
    };
    for &col in &perm[r..] {
        match &dirichlet {
            Some(dist) => {
                let x: Vec<f64> = dist.sample(&mut rng);
                let s: f64 = x.iter().sum();
                for (i, v) in x.iter().enumerate() {
                    h[(i, col)] = v / s;
                }
            }
            None => h[(0, col)] = 1.0,
        }
    }
    let v = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(SynthInstance {
        w,
        h: HsiMatrix::from_dmatrix(h)?,
        v: HsiMatrix::from_dmatrix(v)?,
        pure_indices: pure,
        nu: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_simplex() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.0, 0.0, 0.0]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn random_instance_is_well_formed() {
        let inst = random_separable(6, 30, 3, 11).unwrap();
        assert!(inst.audit().passed(1e-12), "{:?}", inst.audit());
        assert_eq!(inst.pure_indices.len(), 3);
    }

    #[test]
    fn noise_has_requested_size() {
        let inst = random_separable(5, 20, 2, 4).unwrap();
        let a = assemble(&inst, 0.5).unwrap();
        let noise = HsiMatrix::from_dmatrix(a.as_dmatrix() - inst.clean()).unwrap();
        assert!((noise.l1_norm() - 0.5).abs() < 1e-12);
        assert_eq!(assemble(&inst, 0.0).unwrap().as_dmatrix(), &inst.clean());
        assert!(assemble(&inst, -1.0).is_err());
    }

    #[test]
    fn zero_noise_is_rejected() {
        let mut inst = random_separable(3, 5, 2, 1).unwrap();
        inst.v = HsiMatrix::from_dmatrix(DMatrix::zeros(3, 5)).unwrap();
        assert!(matches!(assemble(&inst, 0.1), Err(Error::ZeroNoise)));
    }

    #[test]
    fn exact_separable_input_derives_zero_noise() {
        let inst = random_separable(4, 12, 3, 8).unwrap();
        let a = assemble(&inst, 0.0).unwrap();
        let derived = derive_whv(&a, &inst.w).unwrap();
        let mut expected = inst.pure_indices.clone();
        let mut got = derived.pure_indices.clone();
        expected.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, expected);
        assert!(derived.v.l1_norm() < 1e-6, "{}", derived.v.l1_norm());
    }

    #[test]
    fn repeated_reference_is_a_duplicate_match() {
        let inst = random_separable(4, 10, 2, 2).unwrap();
        let a = assemble(&inst, 0.0).unwrap();
        let col = inst.w.column(0).to_vec();
        let w = HsiMatrix::from_columns(&[col.clone(), col]).unwrap();
        assert!(matches!(derive_whv(&a, &w), Err(Error::DuplicateMatch { .. })));
    }

    #[test]
    fn sidecar_round_trip_of_pure_indices() {
        let inst = random_separable(4, 10, 3, 5).unwrap();
        let s = inst.sidecar(0.25, Some(5));
        assert_eq!(pure_indices_from_sidecar(&s).unwrap(), inst.pure_indices);
        assert_eq!(s.get("seed"), Some("5"));
    }
}
