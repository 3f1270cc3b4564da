//! Dense column-major matrices of spectral signatures and the index sets
//! that select columns from them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A dense `d x n` real matrix whose columns are spectra (one per pixel).
///
/// The same type carries every matrix the pipeline touches: the image `A`,
/// endmember matrices `W`, abundances `H`, noise `V` and the reduced matrix
/// `A' = Σ_r V_rᵀ`. Values are stored column-major and are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct HsiMatrix {
    inner: DMatrix<f64>,
}

impl HsiMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_column_major(d: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{n} = {} values", d * n),
                found: format!("{} values", data.len()),
            });
        }
        Self::from_dmatrix(DMatrix::from_vec(d, n, data))
    }

    /// Builds a matrix from a list of columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        let d = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(d * n);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: format!("column of length {d}"),
                    found: format!("column {j} of length {}", col.len()),
                });
            }
            data.extend_from_slice(col);
        }
        Self::from_column_major(d, n, data)
    }

    /// Builds a matrix from row slices; handy for literals in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {n}"),
                found: "ragged rows".into(),
            });
        }
        Self::from_dmatrix(DMatrix::from_fn(d, n, |i, j| rows[i][j]))
    }

    pub fn from_dmatrix(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::InvalidMatrix(format!(
                "matrix must be non-empty, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let d = inner.nrows();
            return Err(Error::InvalidMatrix(format!(
                "non-finite value at row {}, column {}",
                pos % d,
                pos / d
            )));
        }
        Ok(Self { inner })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    /// Band count.
    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    /// Pixel count.
    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let d = self.nrows();
        &self.inner.as_slice()[j * d..(j + 1) * d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.inner.as_slice().chunks_exact(self.nrows())
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        self.inner.as_slice()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Copies the listed columns, in the given order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let n = self.ncols();
        if let Some(&bad) = cols.iter().find(|&&c| c >= n) {
            return Err(Error::InvalidArgument(format!(
                "column index {bad} out of range for {n} columns"
            )));
        }
        if cols.is_empty() {
            return Err(Error::InvalidArgument("no columns selected".into()));
        }
        let d = self.nrows();
        let mut data = Vec::with_capacity(d * cols.len());
        for &c in cols {
            data.extend_from_slice(self.column(c));
        }
        Self::from_column_major(d, cols.len(), data)
    }

    /// L1 norm of column `j`.
    pub fn column_l1(&self, j: usize) -> f64 {
        self.column(j).iter().map(|v| v.abs()).sum()
    }

    /// Induced matrix 1-norm: the largest column L1 norm.
    pub fn l1_norm(&self) -> f64 {
        (0..self.ncols())
            .map(|j| self.column_l1(j))
            .fold(0.0, f64::max)
    }

    /// Sum of absolute values of all entries.
    pub fn entrywise_l1(&self) -> f64 {
        self.inner.iter().map(|v| v.abs()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose(),
        }
    }
}

/// Scales every column of `a` to unit L1 norm.
pub fn l1_normalize_columns(a: &HsiMatrix) -> Result<HsiMatrix> {
    let mut out = a.inner.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm: f64 = col.iter().map(|v| v.abs()).sum();
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        col /= norm;
    }
    Ok(HsiMatrix { inner: out })
}

/// A strictly increasing set of zero-based column indices.
///
/// Files written by the CLI use one-based indices; conversion happens at the
/// I/O boundary only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Sorts and deduplicates arbitrary indices.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    /// Accepts indices that are already strictly increasing.
    pub fn from_sorted(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { indices })
    }

    /// `{0, 1, .., n-1}`.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.indices
    }

    /// Maps positions within this set to the elements at those positions,
    /// i.e. `I(J) = { i_j | j ∈ J }` with `I` read in ascending order.
    pub fn compose(&self, positions: &IndexSet) -> Result<IndexSet> {
        let mapped = positions
            .iter()
            .map(|p| {
                self.indices.get(p).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "position {p} out of range for a set of {} elements",
                        self.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // `self` is increasing, so the image of an increasing set is increasing.
        Ok(IndexSet { indices: mapped })
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut all = self.indices.clone();
        all.extend_from_slice(&other.indices);
        IndexSet::new(all)
    }

    /// Elements of `{0..n}` not in this set.
    pub fn complement(&self, n: usize) -> IndexSet {
        IndexSet {
            indices: (0..n).filter(|i| !self.contains(*i)).collect(),
        }
    }

    /// Returns the set without element `i`.
    pub fn without(&self, i: usize) -> IndexSet {
        IndexSet {
            indices: self.indices.iter().copied().filter(|&k| k != i).collect(),
        }
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self.indices.last() {
            Some(&max) if max >= n => Err(Error::InvalidArgument(format!(
                "index {max} out of range for {n} columns"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        IndexSet::new(iter.into_iter().collect())
    }
}

/// Numerical tolerances shared by the pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceConfig {
    /// Residual threshold below which a column counts as inside a cone.
    pub eps_feas: f64,
    /// KKT tolerance of the NNLS solver, relative to `‖B‖_F ‖y‖₂` (floored at 1).
    pub tol_nnls: f64,
    /// LP feasibility and optimality tolerance.
    pub tol_lp: f64,
    /// Smallest norm accepted for mean-removed vectors and normalization checks.
    pub norm_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_feas: 1e-8,
            tol_nnls: 1e-12,
            tol_lp: 1e-7,
            norm_tol: 1e-12,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eps_feas", self.eps_feas),
            ("tol_nnls", self.tol_nnls),
            ("tol_lp", self.tol_lp),
            ("norm_tol", self.norm_tol),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
