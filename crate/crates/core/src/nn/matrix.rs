use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Matrix { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |r| self.row(r))
    }

    /// Gathers the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }
}

/// `out = a · b + bias` (bias broadcast over rows).
pub(crate) fn affine(a: &Matrix, b: &Matrix, bias: &[f64]) -> Matrix {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!(bias.len(), b.cols);
    let n = b.cols;
    let mut out = Matrix::zeros(a.rows, n);
    let mut terms: Vec<(usize, f64)> = Vec::with_capacity(a.cols);
    for r in 0..a.rows {
        let out_row = &mut out.values[r * n..(r + 1) * n];
        out_row.copy_from_slice(bias);
        terms.clear();
        terms.extend(a.row(r).iter().copied().enumerate().filter(|&(_, x)| x != 0.0));
        // four inputs per pass over the output row; each element still sums in k order
        let mut chunks = terms.chunks_exact(4);
        for c in &mut chunks {
            let [(k0, x0), (k1, x1), (k2, x2), (k3, x3)] = [c[0], c[1], c[2], c[3]];
            let w0 = &b.values[k0 * n..][..n];
            let w1 = &b.values[k1 * n..][..n];
            let w2 = &b.values[k2 * n..][..n];
            let w3 = &b.values[k3 * n..][..n];
            for ((((o, a0), a1), a2), a3) in out_row.iter_mut().zip(w0).zip(w1).zip(w2).zip(w3) {
                *o = *o + x0 * a0 + x1 * a1 + x2 * a2 + x3 * a3;
            }
        }
        for &(k, x) in chunks.remainder() {
            let w_row = &b.values[k * n..(k + 1) * n];
            for (o, &w) in out_row.iter_mut().zip(w_row) {
                *o += x * w;
            }
        }
    }
    out
}

/// `out += aᵀ · b`.
pub(crate) fn add_at_b(a: &Matrix, b: &Matrix, out: &mut Matrix) {
    debug_assert_eq!(a.rows, b.rows);
    debug_assert_eq!(out.shape(), (a.cols, b.cols));
    let n = b.cols;
    for r in 0..a.rows {
        let b_row = b.row(r);
        for (k, &x) in a.row(r).iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let out_row = &mut out.values[k * n..(k + 1) * n];
            for (o, &g) in out_row.iter_mut().zip(b_row) {
                *o += x * g;
            }
        }
    }
}

/// `a · bᵀ`.
pub(crate) fn a_bt(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols, b.cols);
    let mut out = Matrix::zeros(a.rows, b.rows);
    for r in 0..a.rows {
        let a_row = a.row(r);
        for k in 0..b.rows {
            let dot: f64 = a_row.iter().zip(b.row(k)).map(|(x, y)| x * y).sum();
            out.values[r * b.rows + k] = dot;
        }
    }
    out
}
