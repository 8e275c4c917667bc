use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{add_outer, Matrix};
use super::network::{softmax, Activation, Network, TensorRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self { weight: Matrix::uniform(outputs, inputs, limit, rng), bias: vec![0.0; outputs], activation }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { weight: Matrix::zeros(outputs, inputs), bias: vec![0.0; outputs], activation }
    }

    /// `W x + b` before the activation.
    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        self.weight.matvec_add(x, &mut z);
        z
    }
}

/// Multi-layer perceptron: ReLU hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

impl MlpParams {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let p = Self { layers };
        p.validate()?;
        Ok(p)
    }

    /// Randomly initialised network `inputs -> hidden... -> classes`.
    pub fn init(inputs: usize, hidden: &[usize], classes: usize, rng: &mut impl Rng) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = inputs;
        for &h in hidden {
            layers.push(DenseLayer::init(prev, h, Activation::Relu, rng));
            prev = h;
        }
        layers.push(DenseLayer::init(prev, classes, Activation::Softmax, rng));
        Self { layers }
    }

    pub fn validate(&self) -> Result<()> {
        let last = self.layers.len().checked_sub(1).ok_or_else(|| Error::InvalidModel("MLP has no layers".into()))?;
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.weight.rows() {
                return Err(Error::InvalidModel(format!("layer {i}: bias length {} vs {} outputs", l.bias.len(), l.weight.rows())));
            }
            if i > 0 && self.layers[i - 1].weight.rows() != l.weight.cols() {
                return Err(Error::InvalidModel(format!("layer {i}: input dim {} does not chain", l.weight.cols())));
            }
            let want = if i == last { Activation::Softmax } else { Activation::Relu };
            if l.activation != want {
                return Err(Error::InvalidModel(format!("layer {i}: expected {want:?} activation")));
            }
        }
        Ok(())
    }

    /// Widths of every layer's output.
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.weight.rows()).collect()
    }
}

impl Network for MlpParams {
    fn input_len(&self) -> usize {
        self.layers[0].weight.cols()
    }

    fn n_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.rows())
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in &self.layers {
            let mut z = l.pre_activation(&a);
            if l.activation == Activation::Relu {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for (i, l) in self.layers.iter().enumerate() {
            out.push(TensorRef {
                name: format!("layer{i}.weight"),
                shape: vec![l.weight.rows(), l.weight.cols()],
                prunable: true,
                data: l.weight.as_slice(),
            });
            out.push(TensorRef { name: format!("layer{i}.bias"), shape: vec![l.bias.len()], prunable: false, data: &l.bias });
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    fn accumulate_gradient(&self, x: &[f64], label: usize, grads: &mut [Vec<f64>]) -> f64 {
        // activations[i] is the input of layer i
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let mut logits = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = l.pre_activation(&activations[i]);
            if l.activation == Activation::Relu {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
                activations.push(z);
            } else {
                logits = z;
            }
        }
        let p = softmax(&logits);
        let loss = super::network::cross_entropy(&logits, label);
        let mut delta = p;
        delta[label] -= 1.0;
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            add_outer(&mut grads[2 * i], &delta, &activations[i]);
            for (g, d) in grads[2 * i + 1].iter_mut().zip(&delta) {
                *g += d;
            }
            if i > 0 {
                let mut prev = vec![0.0; l.weight.cols()];
                l.weight.matvec_t_add(&delta, &mut prev);
                // ReLU derivative: activation of layer i-1 is its output
                for (d, a) in prev.iter_mut().zip(&activations[i]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = prev;
            }
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_uniform() {
        let p = MlpParams::new(vec![DenseLayer::zeros(4, 8, Activation::Relu), DenseLayer::zeros(8, 3, Activation::Softmax)])
            .unwrap();
        let out = p.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        for v in out {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_layer_hand_softmax() {
        let layer = DenseLayer { weight: Matrix::identity(3), bias: vec![0.0; 3], activation: Activation::Softmax };
        let p = MlpParams::new(vec![layer]).unwrap();
        let out = p.forward(&[0.0, 2f64.ln(), 0.0]).unwrap();
        assert!((out[0] - 0.25).abs() < 1e-12);
        assert!((out[1] - 0.5).abs() < 1e-12);
        assert!((out[2] - 0.25).abs() < 1e-12);
    }

    /// Independent layer-by-layer reference using explicit index loops.
    fn reference_forward(p: &MlpParams, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in &p.layers {
            let (rows, cols) = l.weight.shape();
            let mut z = vec![0.0; rows];
            for r in 0..rows {
                let mut s = l.bias[r];
                for c in 0..cols {
                    s += l.weight.get(r, c) * a[c];
                }
                z[r] = s;
            }
            a = match l.activation {
                Activation::Relu => z.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect(),
                Activation::Softmax => {
                    let m = z.iter().cloned().fold(f64::MIN, f64::max);
                    let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
                    z.iter().map(|v| (v - m).exp() / s).collect()
                }
            };
        }
        a
    }

    #[test]
    fn matches_layer_by_layer_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = MlpParams::init(7, &[16, 9], 3, &mut rng);
        for _ in 0..20 {
            let x: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = p.forward(&x).unwrap();
            let b = reference_forward(&p, &x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn input_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = MlpParams::init(3, &[4], 3, &mut rng);
        assert!(matches!(p.forward(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(p.forward(&[1.0, f64::NAN, 2.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn validation_catches_bad_topology() {
        let bad = MlpParams::new(vec![DenseLayer::zeros(3, 4, Activation::Relu), DenseLayer::zeros(5, 3, Activation::Softmax)]);
        assert!(bad.is_err());
        let no_softmax = MlpParams::new(vec![DenseLayer::zeros(3, 3, Activation::Relu)]);
        assert!(no_softmax.is_err());
    }
}
