use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{DenseManifest, DENSE_FORMAT};
use crate::sparse::spif;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Dense,
    Sparse,
}

/// Format of a model file: `SPIF` magic or a dense JSON manifest.
pub fn detect_format(path: &Path) -> Result<ModelFormat> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut head = [0u8; 4];
    let n = std::fs::File::open(path)?.read(&mut head)?;
    if n == 4 && &head == spif::MAGIC {
        return Ok(ModelFormat::Sparse);
    }
    let text = std::fs::read(path)?;
    match serde_json::from_slice::<DenseManifest>(&text) {
        Ok(m) if m.format == DENSE_FORMAT => Ok(ModelFormat::Dense),
        _ => Err(Error::UnknownFormat(path.to_path_buf())),
    }
}

/// Weight payload bytes of a model file; biases and manifests excluded.
pub fn weight_payload_bytes(path: &Path) -> Result<usize> {
    match detect_format(path)? {
        ModelFormat::Sparse => Ok(spif::read_manifest(path)?.payload_bytes()),
        ModelFormat::Dense => Ok(crate::nn::read_manifest(path)?.weight_bytes()),
    }
}

/// Weight payload in KB (bytes / 1024).
pub fn measure_size(path: &Path) -> Result<f64> {
    Ok(weight_payload_bytes(path)? as f64 / 1024.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer, Matrix, MlpParams, Model, ModelMeta};
    use crate::sparse::{serialize_sparse, SparseModel};

    fn single_layer(sparsity: f64) -> Model {
        let mut w = Matrix::zeros(100, 100);
        let zeros = (sparsity * 10_000.0).round() as usize;
        for i in zeros..10_000 {
            w.set(i / 100, i % 100, 1.0 + i as f64);
        }
        Model::Mlp(MlpParams::new(vec![DenseLayer { weight: w, bias: vec![0.5; 100], activation: Activation::Softmax }]).unwrap())
    }

    fn meta() -> ModelMeta {
        ModelMeta::full((0..100).map(|i| format!("f{i}")).collect(), (0..100).map(|i| format!("c{i}")).collect())
    }

    #[test]
    fn dense_and_sparse_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let dense = dir.path().join("m.json");
        crate::nn::save_dense(&dense, &single_layer(0.0), &meta()).unwrap();
        assert_eq!(detect_format(&dense).unwrap(), ModelFormat::Dense);
        assert_eq!(measure_size(&dense).unwrap(), 39.0625);

        let sparse = dir.path().join("m.spif");
        let s = SparseModel::from_model(&single_layer(0.65), meta()).unwrap();
        serialize_sparse(&s, &sparse).unwrap();
        assert_eq!(detect_format(&sparse).unwrap(), ModelFormat::Sparse);
        assert_eq!(weight_payload_bytes(&sparse).unwrap(), 3500 * 8 + 101 * 4);
        assert!((measure_size(&sparse).unwrap() - 27.7383).abs() < 1e-4);
    }

    #[test]
    fn unknown_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, b"{\"hello\": 1}").unwrap();
        assert!(matches!(measure_size(&p), Err(Error::UnknownFormat(_))));
        assert!(matches!(measure_size(&dir.path().join("nope")), Err(Error::MissingFile(_))));
    }
}
