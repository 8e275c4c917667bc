//! Dense model files: a JSON manifest plus a little-endian f32 blob.
//!
//! The manifest lists every tensor in blob order with its shape and byte
//! offset. The blob lives next to the manifest (`<stem>.bin`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{Architecture, Model, ModelKind};
use super::network::{Activation, Network};
use crate::error::{Error, Result};

pub const DENSE_FORMAT: &str = "sparsebench-dense";
pub const DENSE_VERSION: u32 = 1;

/// Input-side metadata carried by every model file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Retained input columns (indices into the full-width input).
    pub feature_mask: Option<Vec<usize>>,
    /// Width of the full input that `feature_mask` indexes into.
    pub source_features: usize,
}

impl ModelMeta {
    pub fn full(feature_names: Vec<String>, class_names: Vec<String>) -> Self {
        let n = feature_names.len();
        Self { feature_names, class_names, feature_mask: None, source_features: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorRole {
    Weight,
    Bias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub role: TensorRole,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorEntry {
    pub fn elements(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseManifest {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub features: usize,
    pub classes: usize,
    pub hidden: Vec<usize>,
    pub window: usize,
    pub activations: Vec<Activation>,
    pub meta: ModelMeta,
    pub blob: String,
    pub tensors: Vec<TensorEntry>,
}

impl DenseManifest {
    /// Bytes of all weight matrices (biases excluded).
    pub fn weight_bytes(&self) -> usize {
        self.tensors.iter().filter(|t| t.role == TensorRole::Weight).map(|t| 4 * t.elements()).sum()
    }
}

pub fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

fn activations(model: &Model) -> Vec<Activation> {
    match model {
        Model::Mlp(p) => p.layers.iter().map(|l| l.activation).collect(),
        Model::Lstm(p) => vec![p.head.activation],
    }
}

pub fn manifest_for(model: &Model, meta: &ModelMeta, blob: &str) -> DenseManifest {
    let arch = model.architecture();
    let mut offset = 0;
    let tensors = model
        .tensors()
        .iter()
        .map(|t| {
            let e = TensorEntry {
                name: t.name.clone(),
                role: if t.shape.len() == 2 { TensorRole::Weight } else { TensorRole::Bias },
                shape: t.shape.clone(),
                offset,
            };
            offset += 4 * t.data.len();
            e
        })
        .collect();
    DenseManifest {
        format: DENSE_FORMAT.into(),
        version: DENSE_VERSION,
        kind: model.kind(),
        features: model.features(),
        classes: model.n_classes(),
        hidden: arch.hidden,
        window: arch.window,
        activations: activations(model),
        meta: meta.clone(),
        blob: blob.into(),
        tensors,
    }
}

/// Writes `<path>` (manifest) and its sibling `.bin` blob.
pub fn save_dense(path: &Path, model: &Model, meta: &ModelMeta) -> Result<()> {
    let blob = blob_path(path);
    let blob_name = blob.file_name().and_then(|s| s.to_str()).unwrap_or("model.bin").to_string();
    let manifest = manifest_for(model, meta, &blob_name);
    let mut bytes = Vec::with_capacity(4 * model.parameter_count());
    for t in model.tensors() {
        for v in t.data {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    std::fs::write(&blob, bytes)?;
    std::fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DenseManifest> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let manifest: DenseManifest = serde_json::from_slice(&std::fs::read(path)?)?;
    if manifest.format != DENSE_FORMAT {
        return Err(Error::UnknownFormat(path.to_path_buf()));
    }
    if manifest.version != DENSE_VERSION {
        return Err(Error::UnsupportedVersion(manifest.version as u16));
    }
    Ok(manifest)
}

pub fn load_dense(path: &Path) -> Result<(Model, ModelMeta)> {
    let manifest = read_manifest(path)?;
    let blob_file = path.parent().unwrap_or(Path::new(".")).join(&manifest.blob);
    if !blob_file.exists() {
        return Err(Error::MissingFile(blob_file));
    }
    let blob = std::fs::read(&blob_file)?;
    let arch = Architecture { kind: manifest.kind, hidden: manifest.hidden.clone(), window: manifest.window };
    let mut model = arch.build(manifest.features, manifest.classes, 0);
    let expected: Vec<(String, Vec<usize>)> = model.tensors().iter().map(|t| (t.name.clone(), t.shape.clone())).collect();
    if expected.len() != manifest.tensors.len() {
        return Err(Error::InvalidModel(format!("manifest lists {} tensors, topology needs {}", manifest.tensors.len(), expected.len())));
    }
    for (k, (entry, (name, shape))) in manifest.tensors.iter().zip(&expected).enumerate() {
        if &entry.name != name || &entry.shape != shape {
            return Err(Error::InvalidModel(format!("tensor {k}: manifest has {} {:?}, topology needs {name} {shape:?}", entry.name, entry.shape)));
        }
        let end = entry.offset + 4 * entry.elements();
        if end > blob.len() {
            return Err(Error::Truncated(format!("{} ends at byte {end}, blob has {}", entry.name, blob.len())));
        }
        let dst = &mut model.tensors_mut()[k];
        for (j, chunk) in blob[entry.offset..end].chunks_exact(4).enumerate() {
            dst[j] = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        }
    }
    Ok((model, manifest.meta))
}
