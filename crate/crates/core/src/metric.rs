//! Distances between spectra.

use crate::error::{Error, Result};

/// Default floor on the norm of a mean-removed vector.
pub const DEFAULT_NORM_TOL: f64 = 1e-12;

/// Mean-removed spectral angle in `[0, 1]`, using the default norm floor.
pub fn mrsa(a: &[f64], b: &[f64]) -> Result<f64> {
    mrsa_with_tol(a, b, DEFAULT_NORM_TOL)
}

/// Mean-removed spectral angle: the angle between `a - mean(a)·1` and
/// `b - mean(b)·1`, divided by π.
///
/// The angle is evaluated as `2·atan2(‖u − v‖, ‖u + v‖)` on the unit vectors
/// `u`, `v`, which is exact for identical inputs and well conditioned near
/// 0 and π, unlike `acos` of the cosine.
pub fn mrsa_with_tol(a: &[f64], b: &[f64], norm_tol: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", a.len()),
            found: format!("length {}", b.len()),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "MRSA needs vectors of length at least 2".into(),
        ));
    }
    let u = unit_mean_removed(a, norm_tol)?;
    let v = unit_mean_removed(b, norm_tol)?;
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in u.iter().zip(&v) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    let angle = 2.0 * diff.sqrt().atan2(sum.sqrt());
    Ok((angle / std::f64::consts::PI).clamp(0.0, 1.0))
}

fn unit_mean_removed(c: &[f64], norm_tol: f64) -> Result<Vec<f64>> {
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let mut out: Vec<f64> = c.iter().map(|v| v - mean).collect();
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm >= norm_tol) {
        return Err(Error::DegenerateVector { norm });
    }
    out.iter_mut().for_each(|v| *v /= norm);
    Ok(out)
}

/// `‖a − b‖₁`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_have_zero_angle() {
        let a = [0.3, 0.1, 0.9, 0.2];
        assert_eq!(mrsa(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn antipodal_mean_removed_parts() {
        let a = [0.3, 0.1, 0.9, 0.2];
        let mean = a.iter().sum::<f64>() / 4.0;
        let b: Vec<f64> = a.iter().map(|v| -v + 2.0 * mean).collect();
        assert!((mrsa(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_third() {
        // Both vectors already have zero mean; cosine is 1/2, angle π/3.
        let v = mrsa(&[1.0, 0.0, -1.0], &[0.0, 1.0, -1.0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn constant_vector_is_degenerate() {
        let err = mrsa(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateVector { .. }));
    }

    #[test]
    fn length_checks() {
        assert!(mrsa(&[1.0], &[2.0]).is_err());
        assert!(mrsa(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn l1_distance_sums_absolute_differences() {
        assert_eq!(l1_distance(&[1.0, -1.0, 0.5], &[0.0, 1.0, 0.5]), 3.0);
    }
}
