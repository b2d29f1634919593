use std::fmt;

use rayon::prelude::*;

use super::memory::{track_alloc, track_free};
use super::TensorError;

/// Work (multiply-adds) below which kernels stay on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;
/// Output rows per task in [`Tensor::t_matmul`].
const T_BLOCK: usize = 64;

/// Dense row-major matrix of `f64`.
///
/// Vectors are `n × 1`, scalars `1 × 1`. Buffers are registered with the
/// thread-local memory tracker for their whole lifetime.
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::BadLength { shape: (rows, cols), len: data.len() });
        }
        track_alloc(data.len() * std::mem::size_of::<f64>());
        Ok(Tensor { rows, cols, data })
    }

    /// Builds from nested rows. Panics on ragged input; meant for literals.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flatten().copied().collect();
        Self::from_vec(r, c, data).expect("length checked")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self::from_vec(rows, cols, vec![value; rows * cols]).expect("length matches")
    }

    pub fn scalar(value: f64) -> Self {
        Self::filled(1, 1, value)
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn column(values: &[f64]) -> Self {
        Self::from_vec(values.len(), 1, values.to_vec()).expect("length matches")
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(mut self) -> Vec<f64> {
        std::mem::take(&mut self.data)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// The single value of a `1 × 1` tensor.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Tensor::from_vec(self.rows, self.cols, data).expect("same shape")
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn select_rows(&self, index: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(index.len() * self.cols);
        for &i in index {
            data.extend_from_slice(self.row(i));
        }
        Tensor::from_vec(index.len(), self.cols, data).expect("shape")
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the largest entry of each row; ties go to the lower column.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    /// Dense product. Zero entries of `self` are skipped, which pays off on
    /// bag-of-words features. Each output row is produced by one task in a
    /// fixed order, so results do not depend on the thread count.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        if self.cols != rhs.rows {
            return Err(TensorError::ShapeMismatch { op: "matmul", left: self.shape(), right: rhs.shape() });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = Tensor::zeros(n, m);
        if m == 0 {
            return Ok(out);
        }
        let kernel = |(i, out_row): (usize, &mut [f64])| {
            let a_row = &self.data[i * k..(i + 1) * k];
            for (p, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if n * k * m >= PAR_THRESHOLD {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without building the transpose. Zero entries of `self`
    /// are skipped and every output entry sums over rows in ascending order,
    /// so the result equals `self.transpose().matmul(rhs)` bit for bit.
    pub fn t_matmul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        if self.rows != rhs.rows {
            return Err(TensorError::ShapeMismatch {
                op: "t_matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = Tensor::zeros(k, m);
        if m == 0 || k == 0 {
            return Ok(out);
        }
        let kernel = |(block, chunk): (usize, &mut [f64])| {
            let first = block * T_BLOCK;
            let width = chunk.len() / m;
            for i in 0..n {
                let a_part = &self.data[i * k + first..i * k + first + width];
                let b_row = &rhs.data[i * m..(i + 1) * m];
                for (q, &a) in a_part.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (o, &b) in chunk[q * m..(q + 1) * m].iter_mut().zip(b_row) {
                        *o += a * b;
                    }
                }
            }
        };
        if n * k * m >= PAR_THRESHOLD {
            out.data.par_chunks_mut(T_BLOCK * m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(T_BLOCK * m).enumerate().for_each(kernel);
        }
        Ok(out)
    }
}

impl Clone for Tensor {
    fn clone(&self) -> Self {
        Tensor::from_vec(self.rows, self.cols, self.data.clone()).expect("same shape")
    }
}

impl Drop for Tensor {
    fn drop(&mut self) {
        track_free(self.data.len() * std::mem::size_of::<f64>());
    }
}

impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape() && self.data == other.data
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor({}x{})", self.rows, self.cols)?;
        if self.data.len() <= 64 {
            write!(f, " {:?}", self.to_rows())?;
        }
        Ok(())
    }
}
