use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::LstmParams;
use super::mlp::MlpParams;
use super::network::{Network, SampleSet, TensorRef};
use crate::dataflow::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Lstm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Mlp => "MLP",
            ModelKind::Lstm => "LSTM",
        })
    }
}

/// Topology needed to build a fresh model for a given input width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ModelKind,
    /// Hidden widths (MLP) or LSTM units per cell.
    pub hidden: Vec<usize>,
    /// Timesteps per LSTM input window; ignored for MLPs.
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_window() -> usize {
    5
}

impl Architecture {
    /// Best MLP reported for the network-flow data: hidden [16, 128, 64].
    pub fn mlp_default() -> Self {
        Self { kind: ModelKind::Mlp, hidden: vec![16, 128, 64], window: 1 }
    }

    /// Best LSTM: cells of 100 and 50 units, window 5.
    pub fn lstm_default() -> Self {
        Self { kind: ModelKind::Lstm, hidden: vec![100, 50], window: 5 }
    }

    pub fn build(&self, features: usize, classes: usize, seed: u64) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.kind {
            ModelKind::Mlp => Model::Mlp(MlpParams::init(features, &self.hidden, classes, &mut rng)),
            ModelKind::Lstm => Model::Lstm(LstmParams::init(features, &self.hidden, classes, self.window, &mut rng)),
        }
    }

    pub fn samples(&self, data: &Dataset) -> SampleSet {
        match self.kind {
            ModelKind::Mlp => SampleSet::rows(data),
            ModelKind::Lstm => SampleSet::windows(data, self.window),
        }
    }
}

/// Either supported dense network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Mlp(MlpParams),
    Lstm(LstmParams),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Lstm(_) => ModelKind::Lstm,
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            Model::Mlp(p) => {
                let w = p.widths();
                Architecture { kind: ModelKind::Mlp, hidden: w[..w.len() - 1].to_vec(), window: 1 }
            }
            Model::Lstm(p) => Architecture { kind: ModelKind::Lstm, hidden: p.units(), window: p.window },
        }
    }

    /// Raw feature count per timestep.
    pub fn features(&self) -> usize {
        match self {
            Model::Mlp(p) => p.input_len(),
            Model::Lstm(p) => p.features(),
        }
    }

    pub fn window(&self) -> usize {
        match self {
            Model::Mlp(_) => 1,
            Model::Lstm(p) => p.window,
        }
    }

    pub fn samples(&self, data: &Dataset) -> SampleSet {
        self.architecture().samples(data)
    }

    /// Rounds every parameter to the nearest f32 (what model files store).
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        match self {
            Model::Mlp(p) => p.validate(),
            Model::Lstm(p) => p.validate(),
        }
    }
}

impl Network for Model {
    fn input_len(&self) -> usize {
        match self {
            Model::Mlp(p) => p.input_len(),
            Model::Lstm(p) => p.input_len(),
        }
    }

    fn n_classes(&self) -> usize {
        match self {
            Model::Mlp(p) => p.n_classes(),
            Model::Lstm(p) => p.n_classes(),
        }
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Model::Mlp(p) => p.logits(x),
            Model::Lstm(p) => p.logits(x),
        }
    }

    fn tensors(&self) -> Vec<TensorRef<'_>> {
        match self {
            Model::Mlp(p) => p.tensors(),
            Model::Lstm(p) => p.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Model::Mlp(p) => p.tensors_mut(),
            Model::Lstm(p) => p.tensors_mut(),
        }
    }

    fn accumulate_gradient(&self, x: &[f64], label: usize, grads: &mut [Vec<f64>]) -> f64 {
        match self {
            Model::Mlp(p) => p.accumulate_gradient(x, label, grads),
            Model::Lstm(p) => p.accumulate_gradient(x, label, grads),
        }
    }
}
