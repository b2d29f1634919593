use std::cell::Cell;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::{Tensor, TensorError};

const PAR_THRESHOLD: usize = 1 << 15;

thread_local! {
    static SPARSE_PRODUCTS: Cell<u64> = const { Cell::new(0) };
}

/// Number of sparse-dense products executed on this thread, forward and
/// backward, since the last [`reset_sparse_product_count`].
pub fn sparse_product_count() -> u64 {
    SPARSE_PRODUCTS.with(Cell::get)
}

pub fn reset_sparse_product_count() {
    SPARSE_PRODUCTS.with(|c| c.set(0));
}

/// Compressed sparse row matrix with constant structure.
///
/// Column indices inside each row are strictly ascending. The transpose is
/// built on first use and kept for backward passes.
#[derive(Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    transposed: OnceLock<Box<SparseMatrix>>,
}

impl Clone for SparseMatrix {
    fn clone(&self) -> Self {
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.clone(),
            transposed: OnceLock::new(),
        }
    }
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.indptr == other.indptr
            && self.indices == other.indices
            && self.values == other.values
    }
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triples. Duplicates are summed in the
    /// order given; explicit zeros are kept.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, TensorError> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= rows || t.1 >= cols) {
            return Err(TensorError::SparseIndex { row: r, col: c, shape: (rows, cols) });
        }
        // Stable: equal keys keep input order, so summation order is defined.
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty") += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseMatrix { rows, cols, indptr, indices, values, transposed: OnceLock::new() })
    }

    /// Builds directly from CSR arrays whose rows are already sorted.
    pub(crate) fn from_csr_unchecked(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), rows + 1);
        debug_assert_eq!(indices.len(), values.len());
        SparseMatrix { rows, cols, indptr, indices, values, transposed: OnceLock::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_csr_unchecked(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of row `r`, ascending by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            out.set(r, c, v);
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// `self · x` into a fresh buffer. `x` is an `n`-vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn transpose(&self) -> &SparseMatrix {
        self.transposed.get_or_init(|| {
            let mut counts = vec![0usize; self.cols + 1];
            for &c in &self.indices {
                counts[c + 1] += 1;
            }
            for c in 0..self.cols {
                counts[c + 1] += counts[c];
            }
            let mut next = counts.clone();
            let mut indices = vec![0; self.nnz()];
            let mut values = vec![0.0; self.nnz()];
            // Rows visited in ascending order keep each transposed row sorted.
            for r in 0..self.rows {
                for (c, v) in self.row(r) {
                    let slot = next[c];
                    indices[slot] = r;
                    values[slot] = v;
                    next[c] += 1;
                }
            }
            Box::new(SparseMatrix::from_csr_unchecked(self.cols, self.rows, counts, indices, values))
        })
    }

    /// Sparse-dense product `self · dense`.
    pub fn spmm(&self, dense: &Tensor) -> Result<Tensor, TensorError> {
        if self.cols != dense.rows() {
            return Err(TensorError::ShapeMismatch { op: "spmm", left: self.shape(), right: dense.shape() });
        }
        SPARSE_PRODUCTS.with(|c| c.set(c.get() + 1));
        let width = dense.cols();
        let mut out = Tensor::zeros(self.rows, width);
        if width == 0 {
            return Ok(out);
        }
        let src = dense.as_slice();
        let kernel = |(r, out_row): (usize, &mut [f64])| {
            for (c, v) in self.row(r) {
                let d = &src[c * width..(c + 1) * width];
                for (o, &x) in out_row.iter_mut().zip(d) {
                    *o += v * x;
                }
            }
        };
        if self.nnz() * width >= PAR_THRESHOLD {
            out.as_mut_slice().par_chunks_mut(width).enumerate().for_each(kernel);
        } else {
            out.as_mut_slice().chunks_mut(width).enumerate().for_each(kernel);
        }
        Ok(out)
    }
}
