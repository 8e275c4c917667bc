use serde::{Deserialize, Serialize};

use crate::dataflow::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
}

/// Borrowed view of one parameter tensor.
#[derive(Debug)]
pub struct TensorRef<'a> {
    pub name: String,
    /// `[rows, cols]` for weight matrices, `[len]` for bias vectors.
    pub shape: Vec<usize>,
    pub prunable: bool,
    pub data: &'a [f64],
}

/// A trainable classifier over flattened inputs.
///
/// Tensor order is fixed per architecture and shared by gradients,
/// optimizer state and sparsity masks.
pub trait Network: Clone + Send + Sync {
    fn input_len(&self) -> usize;
    fn n_classes(&self) -> usize;

    /// Pre-softmax scores; inputs are assumed valid.
    fn logits(&self, x: &[f64]) -> Vec<f64>;

    fn tensors(&self) -> Vec<TensorRef<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Adds d(loss)/d(theta) of one sample's cross-entropy into `grads` and
    /// returns that sample's loss.
    fn accumulate_gradient(&self, x: &[f64], label: usize, grads: &mut [Vec<f64>]) -> f64;

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x, self.input_len())?;
        Ok(softmax(&self.logits(x)))
    }

    fn loss(&self, x: &[f64], label: usize) -> f64 {
        cross_entropy(&self.logits(x), label)
    }

    fn zero_gradients(&self) -> Vec<Vec<f64>> {
        self.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect()
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    fn predict_class(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }
}

pub(crate) fn check_input(x: &[f64], expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::dims("network input", expected, x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network input".into()));
    }
    Ok(())
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Model inputs paired with labels: single rows for MLPs, flattened
/// sliding windows (timestep-major) for LSTMs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    input_len: usize,
    n_classes: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
}

impl SampleSet {
    pub fn new(input_len: usize, n_classes: usize, inputs: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != input_len * labels.len() {
            return Err(Error::dims("sample inputs", input_len * labels.len(), inputs.len()));
        }
        Ok(Self { input_len, n_classes, inputs, labels })
    }

    pub fn rows(data: &Dataset) -> Self {
        Self {
            input_len: data.n_features(),
            n_classes: data.n_classes(),
            inputs: data.features().to_vec(),
            labels: data.labels().to_vec(),
        }
    }

    /// One sample per row `t >= window - 1`: rows `t-window+1 ..= t`, labelled
    /// with row `t`'s class.
    pub fn windows(data: &Dataset, window: usize) -> Self {
        let d = data.n_features();
        let n = data.len();
        let count = (n + 1).saturating_sub(window.max(1));
        let mut inputs = Vec::with_capacity(count * window * d);
        let mut labels = Vec::with_capacity(count);
        for t in (window.max(1) - 1)..n {
            inputs.extend_from_slice(&data.features()[(t + 1 - window) * d..(t + 1) * d]);
            labels.push(data.labels()[t]);
        }
        Self { input_len: window * d, n_classes: data.n_classes(), inputs, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_len..(i + 1) * self.input_len]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_len);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
        }
        SampleSet {
            input_len: self.input_len,
            n_classes: self.n_classes,
            inputs,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Mean cross-entropy and accuracy of `net` over `set`.
pub fn evaluate<N: Network>(net: &N, set: &SampleSet) -> (f64, f64) {
    if set.is_empty() {
        return (0.0, 0.0);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for i in 0..set.len() {
        let z = net.logits(set.input(i));
        loss += cross_entropy(&z, set.label(i));
        if argmax(&z) == set.label(i) {
            correct += 1;
        }
    }
    (loss / set.len() as f64, correct as f64 / set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_handles_huge_logits() {
        let p = softmax(&[1e4, -1e4, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((cross_entropy(&[1e4, -1e4, 0.0], 0)).abs() < 1e-9);
    }

    #[test]
    fn hand_softmax() {
        let p = softmax(&[0.0, 2f64.ln(), 0.0]);
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn windows_are_timestep_major() {
        let ds = Dataset::new(
            (0..10).map(|v| v as f64).collect(),
            vec![0, 1, 2, 0, 1],
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        let s = SampleSet::windows(&ds, 3);
        assert_eq!(s.len(), 3);
        assert_eq!(s.input(0), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.labels(), &[2, 0, 1]);
    }
}
