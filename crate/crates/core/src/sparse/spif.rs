//! `SPIF` sparse model container.
//!
//! ```text
//! "SPIF" | version u16 | manifest length u32 | manifest JSON
//! per weight tensor: values f32[nnz] | col_idx u32[nnz] | row_ptr u32[rows+1]
//! per bias vector:   f32[len]
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csr::{payload_bytes, CsrMatrix};
use super::engine::{Cell, InferenceModel, Layer, SparseModel, Topology};
use crate::error::{Error, Result};
use crate::nn::{Activation, ModelKind, ModelMeta};

pub const MAGIC: &[u8; 4] = b"SPIF";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpifManifest {
    pub kind: ModelKind,
    pub window: usize,
    pub activations: Vec<Activation>,
    pub meta: ModelMeta,
    pub tensors: Vec<CsrEntry>,
    pub biases: Vec<BiasEntry>,
}

impl SpifManifest {
    /// Weight payload: `sum(nnz*8 + (rows+1)*4)` over all tensors.
    pub fn payload_bytes(&self) -> usize {
        self.tensors.iter().map(|t| payload_bytes(t.rows, t.nnz)).sum()
    }
}

fn manifest_of(m: &SparseModel) -> SpifManifest {
    let activations = match &m.net {
        Topology::Mlp(layers) => layers.iter().map(|l| l.activation).collect(),
        Topology::Lstm { head, .. } => vec![head.activation],
    };
    SpifManifest {
        kind: m.kind(),
        window: m.window(),
        activations,
        meta: m.meta.clone(),
        tensors: m
            .weights()
            .into_iter()
            .map(|(name, c)| CsrEntry { name, rows: c.rows(), cols: c.cols(), nnz: c.nnz() })
            .collect(),
        biases: m.biases().into_iter().map(|(name, b)| BiasEntry { name, len: b.len() }).collect(),
    }
}

pub fn to_bytes(m: &SparseModel) -> Result<(Vec<u8>, usize)> {
    let manifest = manifest_of(m);
    let json = serde_json::to_vec(&manifest)?;
    let mut out = Vec::with_capacity(10 + json.len() + manifest.payload_bytes());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let start = out.len();
    for (_, c) in m.weights() {
        c.values().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        c.col_idx().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
        c.row_ptr().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    let payload = out.len() - start;
    for (_, b) in m.biases() {
        b.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    Ok((out, payload))
}

/// Writes the container and returns the weight payload byte count.
pub fn serialize_sparse(m: &SparseModel, path: &Path) -> Result<usize> {
    let (bytes, payload) = to_bytes(m)?;
    std::fs::write(path, bytes)?;
    Ok(payload)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!("{what}: need {n} bytes at offset {}, file has {}", self.pos, self.buf.len())));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn words(&mut self, n: usize, what: &str) -> Result<impl Iterator<Item = [u8; 4]> + 'a> {
        Ok(self.take(4 * n, what)?.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]))
    }
}

fn header(bytes: &[u8]) -> Result<(SpifManifest, usize)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| Error::BadMagic)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let v = r.take(2, "version")?;
    let version = u16::from_le_bytes([v[0], v[1]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let l = r.take(4, "manifest length")?;
    let len = u32::from_le_bytes([l[0], l[1], l[2], l[3]]) as usize;
    let manifest: SpifManifest = serde_json::from_slice(r.take(len, "manifest")?)?;
    Ok((manifest, r.pos))
}

/// Reads only the manifest (enough for size accounting).
pub fn read_manifest(path: &Path) -> Result<SpifManifest> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(header(&std::fs::read(path)?)?.0)
}

pub fn from_bytes(bytes: &[u8]) -> Result<SparseModel> {
    let (manifest, pos) = header(bytes)?;
    let mut r = Reader { buf: bytes, pos };
    let mut weights = Vec::with_capacity(manifest.tensors.len());
    for t in &manifest.tensors {
        let values: Vec<f32> = r.words(t.nnz, &t.name)?.map(f32::from_le_bytes).collect();
        let col_idx: Vec<u32> = r.words(t.nnz, &t.name)?.map(u32::from_le_bytes).collect();
        let row_ptr: Vec<u32> = r.words(t.rows + 1, &t.name)?.map(u32::from_le_bytes).collect();
        let m = CsrMatrix::from_parts(t.rows, t.cols, values, col_idx, row_ptr)
            .map_err(|e| Error::CsrInvariant(format!("{}: {e}", t.name)))?;
        weights.push(m);
    }
    let mut biases = Vec::with_capacity(manifest.biases.len());
    for b in &manifest.biases {
        biases.push(r.words(b.len, &b.name)?.map(f32::from_le_bytes).collect::<Vec<f32>>());
    }
    if r.pos != bytes.len() {
        return Err(Error::Parse(format!("{} trailing bytes after bias section", bytes.len() - r.pos)));
    }
    let net = assemble(&manifest, weights, biases)?;
    let model = InferenceModel::new(net, manifest.meta)?;
    model.to_model()?.validate()?;
    Ok(model)
}

fn assemble(m: &SpifManifest, weights: Vec<CsrMatrix>, biases: Vec<Vec<f32>>) -> Result<Topology<CsrMatrix>> {
    let invalid = |msg: String| Error::InvalidModel(msg);
    match m.kind {
        ModelKind::Mlp => {
            if weights.len() != biases.len() || weights.len() != m.activations.len() {
                return Err(invalid(format!(
                    "{} weights, {} biases, {} activations",
                    weights.len(),
                    biases.len(),
                    m.activations.len()
                )));
            }
            Ok(Topology::Mlp(
                weights
                    .into_iter()
                    .zip(biases)
                    .zip(&m.activations)
                    .map(|((weight, bias), &activation)| Layer { weight, bias, activation })
                    .collect(),
            ))
        }
        ModelKind::Lstm => {
            let cells = weights.len().saturating_sub(1) / 8;
            if weights.len() != 8 * cells + 1 || biases.len() != 4 * cells + 1 || m.activations.len() != 1 {
                return Err(invalid(format!("{} weights and {} biases do not form LSTM cells", weights.len(), biases.len())));
            }
            let mut w = weights.into_iter();
            let mut b = biases.into_iter();
            let mut out = Vec::with_capacity(cells);
            for _ in 0..cells {
                let mut next = || w.next().expect("counted");
                let gw = [next(), next(), next(), next()];
                let gu = [next(), next(), next(), next()];
                let mut nb = || b.next().expect("counted");
                let gb = [nb(), nb(), nb(), nb()];
                out.push(Cell { w: gw, u: gu, b: gb });
            }
            let head = Layer { weight: w.next().expect("counted"), bias: b.next().expect("counted"), activation: m.activations[0] };
            Ok(Topology::Lstm { cells: out, head, window: m.window })
        }
    }
}

pub fn deserialize_sparse(path: &Path) -> Result<SparseModel> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, Model};
    use crate::prune::SparsityMask;

    fn model(kind: ModelKind, sparsity: f64) -> SparseModel {
        let arch = match kind {
            ModelKind::Mlp => Architecture { kind, hidden: vec![16, 8], window: 1 },
            ModelKind::Lstm => Architecture { kind, hidden: vec![6, 4], window: 3 },
        };
        let mut m: Model = arch.build(7, 3, 11);
        let mask = SparsityMask::dense(&m).grow(&m, sparsity).unwrap();
        mask.apply(&mut m);
        let meta = ModelMeta { feature_names: (0..7).map(|i| format!("f{i}")).collect(), ..Default::default() };
        SparseModel::from_model(&m, meta).unwrap()
    }

    #[test]
    fn round_trip_and_payload_formula() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Mlp, ModelKind::Lstm] {
            let m = model(kind, 0.65);
            let p = dir.path().join("m.spif");
            let payload = serialize_sparse(&m, &p).unwrap();
            let expected: usize = m.weights().iter().map(|(_, c)| c.nnz() * 8 + (c.rows() + 1) * 4).sum();
            assert_eq!(payload, expected);
            assert_eq!(read_manifest(&p).unwrap().payload_bytes(), expected);
            let back = deserialize_sparse(&p).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn header_errors() {
        let (bytes, _) = to_bytes(&model(ModelKind::Mlp, 0.3)).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(Error::BadMagic)));
        assert!(matches!(from_bytes(b"SP"), Err(Error::BadMagic)));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(from_bytes(&v2), Err(Error::UnsupportedVersion(2))));
        for cut in [8, 20, bytes.len() - 3] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::Truncated(_))), "cut {cut}");
        }
    }

    #[test]
    fn corrupted_csr_rejected() {
        let m = model(ModelKind::Mlp, 0.3);
        let (mut bytes, _) = to_bytes(&m).unwrap();
        let (_, start) = header(&bytes).unwrap();
        let nnz = m.weights()[0].1.nnz();
        // swap the first two column indices of row 0 (both in the first row)
        let row0 = m.weights()[0].1.row_ptr()[1] as usize;
        assert!(row0 >= 2);
        let ci = start + 4 * nnz;
        let (a, b) = (bytes[ci..ci + 4].to_vec(), bytes[ci + 4..ci + 8].to_vec());
        bytes[ci..ci + 4].copy_from_slice(&b);
        bytes[ci + 4..ci + 8].copy_from_slice(&a);
        assert!(matches!(from_bytes(&bytes), Err(Error::CsrInvariant(_))));
    }
}
