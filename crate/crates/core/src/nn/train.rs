use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{evaluate, Network, SampleSet};
use crate::error::{Error, Result};
use crate::prune::SparsityMask;

/// Mini-batch Adam on categorical cross-entropy with early stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 50,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.batch_size == 0 {
            v.push("train.batch_size must be >= 1".to_string());
        }
        if self.max_epochs == 0 {
            v.push("train.max_epochs must be >= 1".to_string());
        }
        if self.patience >= self.max_epochs {
            v.push(format!("train.patience ({}) must be < max_epochs ({})", self.patience, self.max_epochs));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            v.push("train.learning_rate must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            v.push("train.beta1/beta2 must lie in [0, 1)".to_string());
        }
        if self.epsilon <= 0.0 {
            v.push("train.epsilon must be positive".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidTrainConfig(v.join("; ")))
        }
    }

    /// Same optimizer settings for a short run of `epochs` epochs.
    pub fn segment(&self, epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig { max_epochs: epochs, patience: self.patience.min(epochs.saturating_sub(1)), seed, ..self.clone() }
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: &TrainConfig, shapes: &[usize]) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[Vec<f64>]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (k, p) in params.into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were returned.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl History {
    pub fn best(&self) -> Option<&EpochStats> {
        self.best_epoch.and_then(|e| self.epochs.iter().find(|s| s.epoch == e))
    }

    pub fn extend(&mut self, other: History) {
        let offset = self.epochs.len();
        self.epochs.extend(other.epochs.into_iter().map(|mut s| {
            s.epoch += offset;
            s
        }));
        self.best_epoch = other.best_epoch.map(|e| e + offset);
        self.stopped_early = other.stopped_early;
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "train_loss", "val_loss", "val_accuracy"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                format!("{:.8}", e.train_loss),
                format!("{:.8}", e.val_loss),
                format!("{:.6}", e.val_accuracy),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_data<N: Network>(net: &N, set: &SampleSet, what: &str) -> Result<()> {
    if set.input_len() != net.input_len() {
        return Err(Error::dims(format!("{what} sample width"), net.input_len(), set.input_len()));
    }
    if let Some(&bad) = set.labels().iter().find(|&&l| l >= net.n_classes()) {
        return Err(Error::dims(format!("{what} label"), net.n_classes(), bad));
    }
    Ok(())
}

/// Trains `net` on `train`, monitoring `val` (or the training loss when no
/// validation set is given) for early stopping, and returns the
/// best-epoch parameters. With a mask, masked weights have their gradients
/// zeroed and are forced back to zero after every optimizer step.
pub fn train<N: Network>(
    mut net: N,
    train: &SampleSet,
    val: Option<&SampleSet>,
    cfg: &TrainConfig,
    mask: Option<&SparsityMask>,
) -> Result<(N, History)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    check_data(&net, train, "training")?;
    if let Some(v) = val {
        check_data(&net, v, "validation")?;
    }
    let mut counts = vec![0usize; net.n_classes()];
    for &l in train.labels() {
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(c));
    }
    if let Some(m) = mask {
        m.check(&net)?;
        m.apply(&mut net);
    }

    let shapes: Vec<usize> = net.tensors().iter().map(|t| t.data.len()).collect();
    let mut adam = Adam::new(cfg, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, N)> = None;
    let mut since_best = 0usize;
    let val = val.filter(|v| !v.is_empty());

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = net.zero_gradients();
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += net.accumulate_gradient(train.input(i), train.label(i), &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NanLoss { epoch, batch });
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / chunk.len() as f64;
            for g in grads.iter_mut() {
                g.iter_mut().for_each(|v| *v *= scale);
            }
            if let Some(m) = mask {
                m.zero_gradients(&mut grads);
            }
            adam.step(net.tensors_mut(), &grads);
            if let Some(m) = mask {
                m.apply(&mut net);
            }
        }
        let train_loss = epoch_loss / train.len() as f64;
        let (val_loss, val_accuracy) = match val {
            Some(v) => evaluate(&net, v),
            None => evaluate(&net, train),
        };
        if !val_loss.is_finite() {
            return Err(Error::NanLoss { epoch, batch: usize::MAX });
        }
        history.epochs.push(EpochStats { epoch, train_loss, val_loss, val_accuracy });
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} acc {val_accuracy:.4}");

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, net.clone()));
            history.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience.max(1) && epoch + 1 < cfg.max_epochs {
                history.stopped_early = true;
                break;
            }
        }
    }
    let (_, best_net) = best.expect("max_epochs >= 1");
    Ok((best_net, history))
}
