use crate::error::{Error, Result};

/// Compressed sparse row matrix with f32 values and u32 indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
    col_idx: Vec<u32>,
    row_ptr: Vec<u32>,
}

impl CsrMatrix {
    /// Stores every entry that is not exactly zero.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f32]) -> Result<Self> {
        if dense.len() != rows * cols {
            return Err(Error::dims("dense matrix", rows * cols, dense.len()));
        }
        let mut values = Vec::new();
        let mut col_idx = Vec::new();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0u32);
        for r in 0..rows {
            for (c, &v) in dense[r * cols..(r + 1) * cols].iter().enumerate() {
                if v != 0.0 {
                    values.push(v);
                    col_idx.push(c as u32);
                }
            }
            row_ptr.push(values.len() as u32);
        }
        Ok(Self { rows, cols, values, col_idx, row_ptr })
    }

    /// Rounds to f32 first; entries that round to zero are dropped.
    pub fn from_dense_f64(rows: usize, cols: usize, dense: &[f64]) -> Result<Self> {
        let v: Vec<f32> = dense.iter().map(|&x| x as f32).collect();
        Self::from_dense(rows, cols, &v)
    }

    /// Builds from raw arrays, checking every invariant.
    pub fn from_parts(rows: usize, cols: usize, values: Vec<f32>, col_idx: Vec<u32>, row_ptr: Vec<u32>) -> Result<Self> {
        let m = Self { rows, cols, values, col_idx, row_ptr };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::CsrInvariant(msg));
        if self.row_ptr.len() != self.rows + 1 {
            return bad(format!("row_ptr has {} entries for {} rows", self.row_ptr.len(), self.rows));
        }
        if self.row_ptr[0] != 0 {
            return bad("row_ptr[0] != 0".into());
        }
        if self.values.len() != self.col_idx.len() || self.row_ptr[self.rows] as usize != self.values.len() {
            return bad(format!(
                "{} values, {} col indices, row_ptr ends at {}",
                self.values.len(),
                self.col_idx.len(),
                self.row_ptr[self.rows]
            ));
        }
        for r in 0..self.rows {
            let (a, b) = (self.row_ptr[r] as usize, self.row_ptr[r + 1] as usize);
            if a > b {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let cols = &self.col_idx[a..b];
            if let Some(&c) = cols.iter().find(|&&c| c as usize >= self.cols) {
                return bad(format!("row {r}: column {c} out of range {}", self.cols));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {r}: column indices not strictly increasing"));
            }
        }
        if let Some(i) = self.values.iter().position(|v| *v == 0.0) {
            return bad(format!("stored value {i} is zero"));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return bad(format!("stored value {i} is not finite"));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn row_ptr(&self) -> &[u32] {
        &self.row_ptr
    }

    /// Bytes of the three arrays: `nnz*8 + (rows+1)*4`.
    pub fn payload_bytes(&self) -> usize {
        payload_bytes(self.rows, self.nnz())
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut out = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            for j in self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize {
                out[r * self.cols + self.col_idx[j] as usize] = self.values[j];
            }
        }
        out
    }

    /// `out += A x` without dimension checks beyond debug assertions.
    #[inline]
    pub fn spmv_add(&self, x: &[f32], out: &mut [f32]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r] as usize, self.row_ptr[r + 1] as usize);
            let mut acc = 0.0f32;
            for (v, c) in self.values[a..b].iter().zip(&self.col_idx[a..b]) {
                acc += v * x[*c as usize];
            }
            *o += acc;
        }
    }

    pub fn spmv(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.cols {
            return Err(Error::dims("spmv input", self.cols, x.len()));
        }
        let mut out = vec![0.0; self.rows];
        self.spmv_add(x, &mut out);
        Ok(out)
    }

    /// Same product as [`spmv`](Self::spmv), also returning the number of
    /// multiply-adds performed.
    pub fn spmv_counted(&self, x: &[f32]) -> Result<(Vec<f32>, usize)> {
        if x.len() != self.cols {
            return Err(Error::dims("spmv input", self.cols, x.len()));
        }
        let mut out = vec![0.0; self.rows];
        let mut ops = 0usize;
        for (r, o) in out.iter_mut().enumerate() {
            for j in self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize {
                *o += self.values[j] * x[self.col_idx[j] as usize];
                ops += 1;
            }
        }
        Ok((out, ops))
    }
}

pub fn payload_bytes(rows: usize, nnz: usize) -> usize {
    nnz * 8 + (rows + 1) * 4
}
