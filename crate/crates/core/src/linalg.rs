//! Minimal dense matrix used by the neural models.
//!
//! Row-major `f64` storage with just the operations the LSTM and SNN
//! forward/backward passes need. Heavier linear algebra (the OLS solver)
//! lives in [`crate::stattests`].

use serde::{Deserialize, Serialize};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `out = self * v`, with `v.len() == cols`.
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for c in 0..self.cols {
                acc += row[c] * v[c];
            }
            out[r] = acc;
        }
    }

    /// Rank-one accumulation `self += a * b^T` (outer product).
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for r in 0..self.rows {
            let base = r * self.cols;
            let ar = a[r];
            for c in 0..self.cols {
                self.data[base + c] += ar * b[c];
            }
        }
    }

    /// `out += self^T * v`, with `v.len() == rows`.
    pub fn add_tr_matvec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let base = r * self.cols;
            let vr = v[r];
            for c in 0..self.cols {
                out[c] += self.data[base + c] * vr;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_outer() {
        let m = Matrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let mut out = [0.0; 2];
        m.matvec(&[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, [3.0, 12.0]);

        let mut acc = Matrix::zeros(2, 3);
        acc.add_outer(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(acc.get(1, 2), 10.0);
    }

    #[test]
    fn transpose_matvec_accumulates() {
        let m = Matrix::from_fn(2, 2, |r, c| if r == c { 2.0 } else { 0.0 });
        let mut out = vec![1.0, 1.0];
        m.add_tr_matvec(&[3.0, 4.0], &mut out);
        assert_eq!(out, vec![7.0, 9.0]);
    }
}
