//! Truncated SVD and the reduced matrix `A' = Σ_r V_rᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::HsiMatrix;

/// Top-`r` singular triplets of a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSvd {
    /// `d x r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Non-increasing, nonnegative.
    pub sigma: DVector<f64>,
    /// `n x r`, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U_r Σ_r V_rᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Computes the top-`r` SVD of `a`.
///
/// The full thin SVD comes from Golub–Kahan bidiagonalization followed by
/// implicit-shift QR (nalgebra's `SVD`), sorted descending and truncated.
/// Each singular pair is flipped so that the largest-magnitude entry of its
/// left vector is positive (first such entry on ties).
pub fn truncated_svd(a: &HsiMatrix, r: usize) -> Result<TruncatedSvd> {
    let (d, n) = a.shape();
    let max = d.min(n);
    if r == 0 || r > max {
        return Err(Error::RankTooLarge { rank: r, max });
    }
    let svd = a.as_dmatrix().clone().svd(true, true);
    let u_full = svd.u.expect("left vectors requested");
    let vt_full = svd.v_t.expect("right vectors requested");

    // nalgebra already sorts, but ties and platform variations are settled
    // here with a stable sort on the values.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .expect("finite singular values")
    });
    order.truncate(r);

    let mut u = DMatrix::zeros(d, r);
    let mut v = DMatrix::zeros(n, r);
    let mut sigma = DVector::zeros(r);
    for (k, &idx) in order.iter().enumerate() {
        let ucol = u_full.column(idx);
        let mut pivot = 0;
        for i in 1..d {
            if ucol[i].abs() > ucol[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if ucol[pivot] < 0.0 { -1.0 } else { 1.0 };
        u.set_column(k, &(ucol * sign));
        v.set_column(k, &(vt_full.row(idx).transpose() * sign));
        sigma[k] = svd.singular_values[idx];
    }
    Ok(TruncatedSvd { u, sigma, v })
}

/// Returns `A' = Σ_r V_rᵀ`, an `r x n` matrix whose column Gram matrix equals
/// that of the rank-`r` approximation of `a`.
pub fn reduce_dimension(a: &HsiMatrix, r: usize) -> Result<HsiMatrix> {
    let svd = truncated_svd(a, r)?;
    Ok(reduced_from_svd(&svd))
}

pub fn reduced_from_svd(svd: &TruncatedSvd) -> HsiMatrix {
    let mut reduced = svd.v.transpose();
    for (k, s) in svd.sigma.iter().enumerate() {
        reduced.row_mut(k).scale_mut(*s);
    }
    HsiMatrix::from_dmatrix(reduced).expect("finite and non-empty by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let a = HsiMatrix::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 1.0]])
            .unwrap();
        let svd = truncated_svd(&a, 2).unwrap();
        assert!((svd.sigma[0] - 3.0).abs() < 1e-14);
        assert!((svd.sigma[1] - 2.0).abs() < 1e-14);
        let err = (a.as_dmatrix() - svd.reconstruct()).norm();
        assert!((err - 1.0).abs() < 1e-12, "{err}");
    }

    #[test]
    fn rank_bounds() {
        let a = HsiMatrix::identity(3);
        assert!(matches!(truncated_svd(&a, 0), Err(Error::RankTooLarge { .. })));
        assert!(matches!(truncated_svd(&a, 4), Err(Error::RankTooLarge { rank: 4, max: 3 })));
    }

    #[test]
    fn sign_convention_makes_largest_u_entry_positive() {
        let a = HsiMatrix::from_rows(&[&[-1.0, -2.0, 0.5], &[-3.0, 1.0, 0.2]]).unwrap();
        let svd = truncated_svd(&a, 2).unwrap();
        for k in 0..2 {
            let col = svd.u.column(k);
            let big = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn reduced_matrix_shape() {
        let a = HsiMatrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0], &[0.5, 0.1, 0.0, 1.0], &[2.0, 2.0, 1.0, 0.0]])
            .unwrap();
        let ap = reduce_dimension(&a, 2).unwrap();
        assert_eq!(ap.shape(), (2, 4));
    }
}
