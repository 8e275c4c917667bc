use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix (`rows` = outputs, `cols` = inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("matrix data", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Uniform entries in `[-limit, limit]`.
    pub fn uniform(rows: usize, cols: usize, limit: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.random_range(-limit..=limit)).collect();
        Self { rows, cols, data }
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

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self * x`
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            let mut s = 0.0;
            for (w, v) in row.iter().zip(x) {
                s += w * v;
            }
            *o += s;
        }
    }

    /// `out += self^T * g`
    pub fn matvec_t_add(&self, g: &[f64], out: &mut [f64]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (gi, row) in g.iter().zip(self.data.chunks_exact(self.cols.max(1))) {
            if *gi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += gi * w;
            }
        }
    }
}

/// `grad += g x^T` for a gradient buffer laid out like a `rows x cols` matrix.
pub fn add_outer(grad: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (gi, row) in g.iter().zip(grad.chunks_exact_mut(cols.max(1))) {
        if *gi == 0.0 {
            continue;
        }
        for (r, xv) in row.iter_mut().zip(x) {
            *r += gi * xv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut y = vec![1.0, 1.0];
        m.matvec_add(&[1.0, 0.0, -1.0], &mut y);
        assert_eq!(y, vec![-1.0, -1.0]);
        let mut z = vec![0.0; 3];
        m.matvec_t_add(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![5.0, 7.0, 9.0]);
        let mut g = vec![0.0; 6];
        add_outer(&mut g, &[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(g, vec![1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
        assert!(Matrix::from_vec(2, 2, vec![0.0]).is_err());
    }
}
