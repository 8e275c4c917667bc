use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::nn::{Architecture, ModelKind, TrainConfig};

/// One sampled configuration, keyed by hyperparameter name.
pub type TrialConfig = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ParamKind {
    IntRange { lo: i64, hi: i64, step: i64 },
    Categorical { choices: Vec<Value> },
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64, step: Option<f64> },
}

impl ParamKind {
    fn violations(&self, name: &str) -> Vec<String> {
        let mut v = Vec::new();
        match self {
            ParamKind::IntRange { lo, hi, step } => {
                if lo > hi {
                    v.push(format!("{name}: lo {lo} > hi {hi}"));
                }
                if *step < 1 {
                    v.push(format!("{name}: step must be >= 1"));
                } else if (hi - lo) % step != 0 {
                    v.push(format!("{name}: step {step} does not divide [{lo}, {hi}]"));
                }
            }
            ParamKind::Categorical { choices } => {
                if choices.is_empty() {
                    v.push(format!("{name}: no choices"));
                }
            }
            ParamKind::LogUniform { lo, hi } => {
                if !(*lo > 0.0 && lo <= hi && hi.is_finite()) {
                    v.push(format!("{name}: need 0 < lo <= hi"));
                }
            }
            ParamKind::Uniform { lo, hi, step } => {
                if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                    v.push(format!("{name}: need lo <= hi"));
                }
                if let Some(s) = step {
                    let n = (hi - lo) / s;
                    if *s <= 0.0 || (n - n.round()).abs() > 1e-9 {
                        v.push(format!("{name}: step {s} does not divide [{lo}, {hi}]"));
                    }
                }
            }
        }
        v
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Value {
        match self {
            ParamKind::IntRange { lo, hi, step } => {
                let k = rng.random_range(0..=(hi - lo) / step);
                Value::from(lo + k * step)
            }
            ParamKind::Categorical { choices } => choices[rng.random_range(0..choices.len())].clone(),
            ParamKind::LogUniform { lo, hi } => {
                if lo == hi {
                    return Value::from(*lo);
                }
                Value::from((lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp().clamp(*lo, *hi))
            }
            ParamKind::Uniform { lo, hi, step } => match step {
                Some(s) => {
                    let n = ((hi - lo) / s).round() as i64;
                    let k = rng.random_range(0..=n);
                    Value::from((lo + k as f64 * s).min(*hi))
                }
                None => Value::from(lo + rng.random::<f64>() * (hi - lo)),
            },
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self {
            ParamKind::IntRange { lo, hi, step } => v.as_i64().is_some_and(|x| x >= *lo && x <= *hi && (x - lo) % step == 0),
            ParamKind::Categorical { choices } => choices.contains(v),
            ParamKind::LogUniform { lo, hi } => v.as_f64().is_some_and(|x| x >= *lo && x <= *hi),
            ParamKind::Uniform { lo, hi, step } => v.as_f64().is_some_and(|x| {
                x >= *lo && x <= *hi && step.is_none_or(|s| ((x - lo) / s - ((x - lo) / s).round()).abs() < 1e-6)
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
    /// Drawn once per hidden layer (after the layer count) into an array.
    #[serde(default)]
    pub per_layer: bool,
}

/// Search space: the layer count is drawn first, then every parameter, with
/// per-layer parameters drawn once for each hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub model: ModelKind,
    /// Layer count including the output layer.
    pub layers: ParamKind,
    pub params: Vec<ParamSpec>,
}

/// Hidden layers (MLP) or LSTM cells for a drawn layer count.
pub fn hidden_count(model: ModelKind, layers: i64) -> usize {
    match model {
        ModelKind::Mlp => (layers - 1).max(0) as usize,
        ModelKind::Lstm => (layers - 1).max(1) as usize,
    }
}

impl SearchSpace {
    /// Layers in [1, 8], widths from {16, 32, 64, 128}.
    pub fn mlp_default() -> Self {
        Self {
            model: ModelKind::Mlp,
            layers: ParamKind::IntRange { lo: 1, hi: 8, step: 1 },
            params: vec![ParamSpec {
                name: "units".into(),
                kind: ParamKind::Categorical { choices: [16, 32, 64, 128].map(Value::from).to_vec() },
                per_layer: true,
            }],
        }
    }

    /// Layers in [1, 3], units from {50, 75, 100}.
    pub fn lstm_default() -> Self {
        Self {
            model: ModelKind::Lstm,
            layers: ParamKind::IntRange { lo: 1, hi: 3, step: 1 },
            params: vec![ParamSpec {
                name: "units".into(),
                kind: ParamKind::Categorical { choices: [50, 75, 100].map(Value::from).to_vec() },
                per_layer: true,
            }],
        }
    }

    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Mlp => Self::mlp_default(),
            ModelKind::Lstm => Self::lstm_default(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.layers.violations("layers");
        if let ParamKind::IntRange { lo, .. } = self.layers {
            if lo < 1 {
                v.push("layers: lo must be >= 1".into());
            }
        } else {
            v.push("layers must be an int-range".into());
        }
        for p in &self.params {
            v.extend(p.kind.violations(&p.name));
            if p.name == "layers" {
                v.push("parameter name `layers` is reserved".into());
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpace(v.join("; ")))
        }
    }

    pub fn sample(&self, seed: u64) -> TrialConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = TrialConfig::new();
        let layers = self.layers.sample(&mut rng);
        let hidden = hidden_count(self.model, layers.as_i64().unwrap_or(1));
        cfg.insert("layers".into(), layers);
        for p in &self.params {
            let v = if p.per_layer {
                Value::Array((0..hidden).map(|_| p.kind.sample(&mut rng)).collect())
            } else {
                p.kind.sample(&mut rng)
            };
            cfg.insert(p.name.clone(), v);
        }
        cfg
    }

    /// True when every value lies in its parameter's domain.
    pub fn contains(&self, cfg: &TrialConfig) -> bool {
        let Some(layers) = cfg.get("layers").filter(|v| self.layers.contains(v)) else {
            return false;
        };
        let hidden = hidden_count(self.model, layers.as_i64().unwrap_or(1));
        self.params.iter().all(|p| match cfg.get(&p.name) {
            Some(Value::Array(items)) if p.per_layer => items.len() == hidden && items.iter().all(|v| p.kind.contains(v)),
            Some(v) if !p.per_layer => p.kind.contains(v),
            _ => false,
        })
    }
}

/// Builds the architecture and training settings a trial describes.
/// Recognised keys: `layers`, `units`, `learning_rate`, `batch_size`.
pub fn apply_config(model: ModelKind, cfg: &TrialConfig, base_arch: &Architecture, base_train: &TrainConfig) -> Result<(Architecture, TrainConfig)> {
    let bad = |k: &str| Error::InvalidSpace(format!("trial value `{k}` has the wrong type"));
    let mut arch = base_arch.clone();
    arch.kind = model;
    if let Some(units) = cfg.get("units") {
        let units = units.as_array().ok_or_else(|| bad("units"))?;
        arch.hidden = units.iter().map(|u| u.as_u64().map(|x| x as usize).ok_or_else(|| bad("units"))).collect::<Result<_>>()?;
    }
    let mut train = base_train.clone();
    if let Some(lr) = cfg.get("learning_rate") {
        train.learning_rate = lr.as_f64().ok_or_else(|| bad("learning_rate"))?;
    }
    if let Some(b) = cfg.get("batch_size") {
        train.batch_size = b.as_u64().ok_or_else(|| bad("batch_size"))? as usize;
    }
    Ok((arch, train))
}
