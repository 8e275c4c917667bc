//! CSR weight storage, f32 sparse and dense inference engines, and the
//! `SPIF` sparse model container.

mod csr;
mod engine;
mod kernel;
pub mod spif;

pub use csr::{payload_bytes, CsrMatrix};
pub use engine::{Cell, DenseEngine, InferenceModel, Layer, SparseModel, Topology};
pub use kernel::{DenseMatrix, MatVec};
pub use spif::{deserialize_sparse, serialize_sparse, SpifManifest};
