//! JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataflow::{LabelMapping, PreprocessConfig, SynthSpec};
use crate::error::{Error, Result};
use crate::explain::ShapConfig;
use crate::nn::{Architecture, ModelKind, TrainConfig};
use crate::prune::PruneSchedule;
use crate::tuner::SearchSpace;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw training CSVs, merged chronologically when more than one.
    pub train_csvs: Vec<PathBuf>,
    pub test_csvs: Vec<PathBuf>,
    /// Column used to order rows when merging several CSVs.
    pub time_column: Option<String>,
    pub preprocess: PreprocessConfig,
    /// Detailed-to-coarse label mapping for CSV input.
    pub mapping: Option<LabelMapping>,
    /// Used when no CSVs are given.
    pub synth: Option<SynthSpec>,
    /// Rows of the synthetic test table; defaults to a quarter of the
    /// training rows.
    pub synth_test_rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub mlp: Architecture,
    pub lstm: Architecture,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self { mlp: Architecture::mlp_default(), lstm: Architecture::lstm_default() }
    }
}

impl ArchConfig {
    pub fn for_kind(&self, kind: ModelKind) -> &Architecture {
        match kind {
            ModelKind::Mlp => &self.mlp,
            ModelKind::Lstm => &self.lstm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub k: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self { k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerConfig {
    pub budget: usize,
    pub workers: usize,
    /// Replaces the built-in space for the matching model kind.
    pub spaces: Vec<SearchSpace>,
    /// Epoch cap per trial under `fast`.
    pub fast_max_epochs: usize,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self { budget: 10, workers: 0, spaces: Vec::new(), fast_max_epochs: 5 }
    }
}

impl TunerConfig {
    pub fn space_for(&self, kind: ModelKind) -> SearchSpace {
        self.spaces.iter().find(|s| s.model == kind).cloned().unwrap_or_else(|| SearchSpace::default_for(kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub latency_fraction: f64,
    pub repeats: usize,
    /// Also write per-repeat timings to `latency_raw.csv`.
    pub dump_raw: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { latency_fraction: 0.10, repeats: 3, dump_raw: false }
    }
}

/// Everything a run needs. `seed` has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run_name: String,
    pub seed: Option<u64>,
    /// Shorter training and attribution for quick runs.
    pub fast: bool,
    pub models: Vec<ModelKind>,
    pub data: DataConfig,
    pub arch: ArchConfig,
    pub train: TrainConfig,
    pub prune: PruneSchedule,
    pub shap: ShapConfig,
    pub select: SelectConfig,
    pub tuner: TunerConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run_name: "default".into(),
            seed: None,
            fast: false,
            models: vec![ModelKind::Mlp, ModelKind::Lstm],
            data: DataConfig::default(),
            arch: ArchConfig::default(),
            train: TrainConfig::default(),
            prune: PruneSchedule::default(),
            shap: ShapConfig::default(),
            select: SelectConfig::default(),
            tuner: TunerConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

/// Epoch cap applied to training and fine-tuning under `fast`.
pub const FAST_MAX_EPOCHS: usize = 10;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Every violated field, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.seed.is_none() {
            v.push("seed: required".into());
        }
        if self.run_name.is_empty() || self.run_name.contains(['/', '\\']) || self.run_name.starts_with('.') {
            v.push(format!("run_name: {:?} is not a plain directory name", self.run_name));
        }
        if self.models.is_empty() {
            v.push("models: at least one model kind is required".into());
        }
        let d = &self.data;
        if d.train_csvs.is_empty() && d.synth.is_none() {
            v.push("data: give train_csvs or a synth spec".into());
        }
        if !d.train_csvs.is_empty() && d.mapping.is_none() {
            v.push("data.mapping: required for CSV input".into());
        }
        if d.train_csvs.len() > 1 && d.time_column.is_none() {
            v.push("data.time_column: required to merge several CSVs".into());
        }
        for p in d.train_csvs.iter().chain(&d.test_csvs) {
            if !p.exists() {
                v.push(format!("data: file {} does not exist", p.display()));
            }
        }
        if let Some(s) = &d.synth {
            if let Err(e) = s.validate() {
                v.push(format!("data.synth: {e}"));
            }
        }
        let pp = &d.preprocess;
        if !(pp.validation_fraction > 0.0 && pp.validation_fraction < 1.0) {
            v.push("data.preprocess.validation_fraction: must be in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&pp.missing_threshold) {
            v.push("data.preprocess.missing_threshold: must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&pp.correlation_threshold) {
            v.push("data.preprocess.correlation_threshold: must be in [0, 1]".into());
        }
        for kind in [ModelKind::Mlp, ModelKind::Lstm] {
            let a = self.arch.for_kind(kind);
            if a.kind != kind {
                v.push(format!("arch.{}: kind must be {}", kind_key(kind), kind_key(kind)));
            }
            if a.hidden.contains(&0) {
                v.push(format!("arch.{}.hidden: widths must be >= 1", kind_key(kind)));
            }
            if kind == ModelKind::Lstm && (a.hidden.is_empty() || a.window == 0) {
                v.push("arch.lstm: needs at least one cell and window >= 1".into());
            }
        }
        v.extend(self.train.violations());
        v.extend(self.prune.violations());
        v.extend(self.shap.violations(0));
        if self.select.k == 0 {
            v.push("select.k: must be >= 1".into());
        }
        if self.tuner.budget == 0 {
            v.push("tuner.budget: must be >= 1".into());
        }
        for s in &self.tuner.spaces {
            v.extend(s.violations().into_iter().map(|e| format!("tuner.spaces.{}: {e}", kind_key(s.model))));
        }
        if !(self.bench.latency_fraction > 0.0 && self.bench.latency_fraction <= 1.0) {
            v.push("bench.latency_fraction: must be in (0, 1]".into());
        }
        if self.bench.repeats == 0 {
            v.push("bench.repeats: must be >= 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }

    /// Training settings with the run seed and the `fast` epoch cap applied.
    pub fn effective_train(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.seed = self.seed();
        if self.fast {
            t.max_epochs = t.max_epochs.min(FAST_MAX_EPOCHS);
            t.patience = t.patience.min(t.max_epochs.saturating_sub(1));
        }
        t
    }

    pub fn effective_schedule(&self) -> PruneSchedule {
        let mut s = self.prune.clone();
        if self.fast {
            s.recovery_epochs = s.recovery_epochs.min(2);
        }
        s
    }

    pub fn effective_shap(&self) -> ShapConfig {
        let mut s = self.shap.clone();
        s.seed = self.seed();
        if self.fast {
            s = s.fast();
        }
        s
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&text))
    }
}

pub fn kind_key(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Mlp => "mlp",
        ModelKind::Lstm => "lstm",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_synthetic_config() {
        let c = RunConfig::from_json(r#"{"seed": 7, "data": {"synth": {"rows": 500}}}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.seed(), 7);
        assert_eq!(c.select.k, 10);
        assert_eq!(c.data.synth.as_ref().unwrap().feature_count, 49);
        assert_eq!(c.hash(), RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap().hash());
    }

    #[test]
    fn every_violation_is_listed() {
        let c = RunConfig::from_json(
            r#"{"run_name": "a/b", "models": [], "train": {"batch_size": 0},
                "select": {"k": 0}, "data": {"train_csvs": ["/nonexistent.csv"]}}"#,
        )
        .unwrap();
        let v = c.violations();
        for needle in ["seed", "run_name", "models", "data.mapping", "/nonexistent.csv", "train.batch_size", "select.k"] {
            assert!(v.iter().any(|e| e.contains(needle)), "{needle} missing from {v:?}");
        }
        assert!(matches!(c.validate(), Err(Error::Config(list)) if list.len() == v.len()));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"seed": 1, "sed": 2}"#), Err(Error::Config(_))));
    }

    #[test]
    fn fast_caps_epochs() {
        let mut c = RunConfig { seed: Some(3), fast: true, ..Default::default() };
        assert_eq!(c.effective_train().max_epochs, FAST_MAX_EPOCHS);
        assert_eq!(c.effective_train().seed, 3);
        c.fast = false;
        assert_eq!(c.effective_train().max_epochs, 50);
    }
}
