//! Dense least squares by Householder QR with column-norm pivoting.
//!
//! Rank-deficient systems get the minimum-norm solution through a second
//! (unpivoted) QR of the leading rows of `R`, i.e. a complete orthogonal
//! decomposition.

use nalgebra::{DMatrix, DVector};

/// Columns whose pivot falls below `RCOND · |R₀₀|` are treated as dependent.
const RCOND: f64 = 1e-12;

struct Qr {
    /// Upper-trapezoidal factor in the top rows; reflectors are kept apart.
    r: DMatrix<f64>,
    reflectors: Vec<(usize, DVector<f64>, f64)>,
    perm: Vec<usize>,
}

fn factor(mut a: DMatrix<f64>, pivot: bool) -> Qr {
    let (m, n) = a.shape();
    let steps = m.min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::with_capacity(steps);
    for j in 0..steps {
        if pivot {
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..n {
                let s: f64 = (j..m).map(|i| a[(i, c)] * a[(i, c)]).sum();
                if s > best_norm {
                    best_norm = s;
                    best = c;
                }
            }
            if best != j {
                a.swap_columns(j, best);
                perm.swap(j, best);
            }
        }
        let x = a.view((j, j), (m - j, 1)).column(0).into_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vtv = v.norm_squared();
        if vtv == 0.0 {
            continue;
        }
        let tau = 2.0 / vtv;
        for c in j..n {
            let mut col = a.view_mut((j, c), (m - j, 1));
            let dot = v.dot(&col);
            col.column_mut(0).axpy(-tau * dot, &v, 1.0);
        }
        a[(j, j)] = alpha;
        for i in j + 1..m {
            a[(i, j)] = 0.0;
        }
        reflectors.push((j, v, tau));
    }
    Qr {
        r: a,
        reflectors,
        perm,
    }
}

impl Qr {
    fn apply_qt(&self, y: &mut DVector<f64>) {
        for (j, v, tau) in &self.reflectors {
            let n = v.len();
            let mut seg = y.rows_mut(*j, n);
            let dot = v.dot(&seg);
            seg.axpy(-tau * dot, v, 1.0);
        }
    }

    fn apply_q(&self, y: &mut DVector<f64>) {
        for (j, v, tau) in self.reflectors.iter().rev() {
            let n = v.len();
            let mut seg = y.rows_mut(*j, n);
            let dot = v.dot(&seg);
            seg.axpy(-tau * dot, v, 1.0);
        }
    }

    fn rank(&self) -> usize {
        let steps = self.r.nrows().min(self.r.ncols());
        if steps == 0 {
            return 0;
        }
        let lead = self.r[(0, 0)].abs();
        if lead == 0.0 {
            return 0;
        }
        (0..steps)
            .take_while(|&i| self.r[(i, i)].abs() > RCOND * lead)
            .count()
    }
}

/// Minimum-norm least-squares solution of `a x ≈ y`.
pub(crate) fn solve(a: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let (m, n) = a.shape();
    debug_assert_eq!(m, y.len());
    let qr = factor(a.clone(), true);
    let rank = qr.rank();
    let mut z = vec![0.0; n];
    if rank == 0 {
        return z;
    }
    let mut c = DVector::from_column_slice(y);
    qr.apply_qt(&mut c);

    let sol = if rank == n {
        back_substitute(&qr.r, &c, n)
    } else {
        // R₁ = R[..rank, ..] is rank x n with full row rank. Factor R₁ᵀ = Q₂ L
        // so that R₁ = Lᵀ Q₂ᵀ, solve Lᵀ u = c, and take z = Q₂ u.
        let r1t = qr.r.view((0, 0), (rank, n)).transpose();
        let qr2 = factor(r1t, false);
        let mut u = DVector::zeros(n);
        for i in 0..rank {
            let mut s = c[i];
            for k in 0..i {
                s -= qr2.r[(k, i)] * u[k];
            }
            u[i] = s / qr2.r[(i, i)];
        }
        qr2.apply_q(&mut u);
        u.iter().copied().collect()
    };
    for (pos, &col) in qr.perm.iter().enumerate() {
        z[col] = sol[pos];
    }
    z
}

fn back_substitute(r: &DMatrix<f64>, c: &DVector<f64>, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = c[i];
        for k in i + 1..n {
            s -= r[(i, k)] * x[k];
        }
        x[i] = s / r[(i, i)];
    }
    x
}
