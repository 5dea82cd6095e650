use super::DenseVector;
use crate::error::{check_len, Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(nrows * ncols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("dense matrix has a non-finite entry"));
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            check_len(ncols, r.len())?;
            data.extend_from_slice(r);
        }
        DenseMatrix::new(rows.len(), ncols, data)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = super::dot(self.row(i), x);
        }
    }

    fn matvec_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
    }
}

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row and every stored
/// value is finite and nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_starts: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_starts: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len(nrows + 1, row_starts.len())?;
        check_len(col_indices.len(), values.len())?;
        if row_starts[0] != 0 || row_starts[nrows] != values.len() {
            return Err(Error::contract(
                "row_starts must begin at 0 and end at the number of stored entries",
            ));
        }
        for r in 0..nrows {
            let (lo, hi) = (row_starts[r], row_starts[r + 1]);
            if lo > hi {
                return Err(Error::contract(format!("row_starts decreases at row {r}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::contract(format!(
                    "column indices of row {r} are not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::contract(format!(
                    "column index out of range in row {r}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::contract("CSR values must be finite and nonzero"));
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_starts,
            col_indices,
            values,
        })
    }

    /// Builds a CSR matrix from `(row, col, value)` triplets in any order.
    /// Duplicate coordinates are rejected; explicit zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(Error::contract(format!(
                "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
            )));
        }
        triplets.retain(|t| t.2 != 0.0);
        triplets.sort_by_key(|t| (t.0, t.1));
        if let Some(w) = triplets
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::contract(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut row_starts = vec![0usize; nrows + 1];
        for &(r, _, _) in &triplets {
            row_starts[r + 1] += 1;
        }
        for r in 0..nrows {
            row_starts[r + 1] += row_starts[r];
        }
        let (col_indices, values) = triplets.into_iter().map(|(_, c, v)| (c, v)).unzip();
        CsrMatrix::new(nrows, ncols, row_starts, col_indices, values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_starts(&self) -> &[usize] {
        &self.row_starts
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_starts[r]..self.row_starts[r + 1])
                .map(move |k| (r, self.col_indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d.data[r * self.ncols + c] = v;
        }
        d
    }

    fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_starts[r]..self.row_starts[r + 1];
            *o = self.col_indices[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, v)| v * x[c])
                .sum();
        }
    }

    fn matvec_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, &yr) in y.iter().enumerate() {
            let span = self.row_starts[r]..self.row_starts[r + 1];
            for (&c, v) in self.col_indices[span.clone()]
                .iter()
                .zip(&self.values[span])
            {
                out[c] += v * yr;
            }
        }
    }
}

/// A measurement matrix in either storage format.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.nrows(),
            Matrix::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.ncols(),
            Matrix::Sparse(a) => a.ncols(),
        }
    }

    /// Number of stored entries (all entries for a dense matrix).
    pub fn stored_entries(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.nrows() * a.ncols(),
            Matrix::Sparse(a) => a.nnz(),
        }
    }

    /// True when every stored entry is zero.
    pub fn is_zero(&self) -> bool {
        match self {
            Matrix::Dense(a) => a.as_slice().iter().all(|v| *v == 0.0),
            Matrix::Sparse(a) => a.nnz() == 0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Matrix::Dense(a) => a.clone(),
            Matrix::Sparse(a) => a.to_dense(),
        }
    }

    /// `A x`.
    pub fn matvec(&self, x: &DenseVector) -> Result<DenseVector> {
        check_len(self.ncols(), x.len())?;
        let mut out = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut out);
        Ok(DenseVector::from_kernel(out))
    }

    /// `Aᵀ y`.
    pub fn matvec_transpose(&self, y: &DenseVector) -> Result<DenseVector> {
        check_len(self.nrows(), y.len())?;
        let mut out = vec![0.0; self.ncols()];
        self.matvec_transpose_into(y, &mut out);
        Ok(DenseVector::from_kernel(out))
    }

    pub(crate) fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols());
        debug_assert_eq!(out.len(), self.nrows());
        match self {
            Matrix::Dense(a) => a.matvec_into(x, out),
            Matrix::Sparse(a) => a.matvec_into(x, out),
        }
    }

    pub(crate) fn matvec_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows());
        debug_assert_eq!(out.len(), self.ncols());
        match self {
            Matrix::Dense(a) => a.matvec_transpose_into(y, out),
            Matrix::Sparse(a) => a.matvec_transpose_into(y, out),
        }
    }
}

impl From<DenseMatrix> for Matrix {
    fn from(a: DenseMatrix) -> Self {
        Matrix::Dense(a)
    }
}

impl From<CsrMatrix> for Matrix {
    fn from(a: CsrMatrix) -> Self {
        Matrix::Sparse(a)
    }
}
