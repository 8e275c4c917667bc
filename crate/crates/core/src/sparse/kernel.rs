use super::csr::CsrMatrix;
use crate::error::Result;

/// Weight storage usable by the f32 inference engines.
pub trait MatVec: Clone + Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out += A x`.
    fn matvec_add(&self, x: &[f32], out: &mut [f32]);
    fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Result<Self>;
    fn to_dense(&self) -> Vec<f32>;
    /// Bytes this storage occupies in a model file.
    fn weight_bytes(&self) -> usize;
}

/// Row-major dense f32 matrix with a plain double loop (no blocking, no
/// SIMD intrinsics), the reference the sparse kernel is timed against.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(crate::Error::dims("dense matrix", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

impl MatVec for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn matvec_add(&self, x: &[f32], out: &mut [f32]) {
        debug_assert_eq!(x.len(), self.cols);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0f32;
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *o += acc;
        }
    }

    fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&v| v as f32).collect())
    }

    fn to_dense(&self) -> Vec<f32> {
        self.data.clone()
    }

    fn weight_bytes(&self) -> usize {
        4 * self.data.len()
    }
}

impl MatVec for CsrMatrix {
    fn rows(&self) -> usize {
        CsrMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        CsrMatrix::cols(self)
    }

    #[inline]
    fn matvec_add(&self, x: &[f32], out: &mut [f32]) {
        self.spmv_add(x, out)
    }

    fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        CsrMatrix::from_dense_f64(rows, cols, data)
    }

    fn to_dense(&self) -> Vec<f32> {
        CsrMatrix::to_dense(self)
    }

    fn weight_bytes(&self) -> usize {
        self.payload_bytes()
    }
}
