use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{add_outer, Matrix};
use super::mlp::DenseLayer;
use super::network::{cross_entropy, sigmoid, softmax, Activation, Network, TensorRef};
use crate::error::{Error, Result};

/// Gate order used by every per-gate array: input, forget, cell, output.
pub const GATES: [&str; 4] = ["i", "f", "g", "o"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    /// Input weights per gate, `units x inputs`.
    pub w: [Matrix; 4],
    /// Recurrent weights per gate, `units x units`.
    pub u: [Matrix; 4],
    pub b: [Vec<f64>; 4],
}

impl LstmCell {
    pub fn units(&self) -> usize {
        self.w[0].rows()
    }

    pub fn inputs(&self) -> usize {
        self.w[0].cols()
    }

    pub fn zeros(inputs: usize, units: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Matrix::zeros(units, inputs)),
            u: std::array::from_fn(|_| Matrix::zeros(units, units)),
            b: std::array::from_fn(|_| vec![0.0; units]),
        }
    }

    /// Glorot-uniform input weights, uniform +-1/sqrt(units) recurrent
    /// weights, zero biases except the forget gate (1.0).
    pub fn init(inputs: usize, units: usize, rng: &mut impl Rng) -> Self {
        let wl = (6.0 / (inputs + units) as f64).sqrt();
        let ul = 1.0 / (units as f64).sqrt();
        let w = std::array::from_fn(|_| Matrix::uniform(units, inputs, wl, rng));
        let u = std::array::from_fn(|_| Matrix::uniform(units, units, ul, rng));
        let mut b: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; units]);
        b[1] = vec![1.0; units];
        Self { w, u, b }
    }

    /// One timestep; returns the new `(h, c)` and the gate activations.
    pub fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> StepCache {
        let n = self.units();
        let mut act: [Vec<f64>; 4] = std::array::from_fn(|k| self.b[k].clone());
        for k in 0..4 {
            self.w[k].matvec_add(x, &mut act[k]);
            self.u[k].matvec_add(h, &mut act[k]);
        }
        let i: Vec<f64> = act[0].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = act[1].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = act[2].iter().map(|v| v.tanh()).collect();
        let o: Vec<f64> = act[3].iter().map(|&v| sigmoid(v)).collect();
        let mut c_new = vec![0.0; n];
        let mut tanh_c = vec![0.0; n];
        let mut h_new = vec![0.0; n];
        for j in 0..n {
            c_new[j] = f[j] * c[j] + i[j] * g[j];
            tanh_c[j] = c_new[j].tanh();
            h_new[j] = o[j] * tanh_c[j];
        }
        StepCache { x: x.to_vec(), h_prev: h.to_vec(), c_prev: c.to_vec(), i, f, g, o, c: c_new, tanh_c, h: h_new }
    }
}

/// Everything one timestep needs for backpropagation.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Stacked LSTM cells over a fixed window followed by a softmax head on the
/// last hidden state of the top cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub cells: Vec<LstmCell>,
    pub head: DenseLayer,
    pub window: usize,
}

impl LstmParams {
    pub fn new(cells: Vec<LstmCell>, head: DenseLayer, window: usize) -> Result<Self> {
        let p = Self { cells, head, window };
        p.validate()?;
        Ok(p)
    }

    pub fn init(features: usize, units: &[usize], classes: usize, window: usize, rng: &mut impl Rng) -> Self {
        let mut cells = Vec::with_capacity(units.len());
        let mut prev = features;
        for &u in units {
            cells.push(LstmCell::init(prev, u, rng));
            prev = u;
        }
        let head = DenseLayer::init(prev, classes, Activation::Softmax, rng);
        Self { cells, head, window }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidModel("window must be >= 1".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::InvalidModel("LSTM needs at least one cell".into()));
        }
        for (ci, c) in self.cells.iter().enumerate() {
            let (n, m) = (c.units(), c.inputs());
            for k in 0..4 {
                if c.w[k].shape() != (n, m) || c.u[k].shape() != (n, n) || c.b[k].len() != n {
                    return Err(Error::InvalidModel(format!("cell {ci} gate {} has inconsistent shapes", GATES[k])));
                }
            }
            if ci > 0 && self.cells[ci - 1].units() != m {
                return Err(Error::InvalidModel(format!("cell {ci} input {m} does not chain")));
            }
        }
        let top = self.cells.last().map_or(0, LstmCell::units);
        if self.head.weight.cols() != top || self.head.bias.len() != self.head.weight.rows() {
            return Err(Error::InvalidModel("head does not match top cell".into()));
        }
        if self.head.activation != Activation::Softmax {
            return Err(Error::InvalidModel("head must use softmax".into()));
        }
        Ok(())
    }

    pub fn features(&self) -> usize {
        self.cells[0].inputs()
    }

    pub fn units(&self) -> Vec<usize> {
        self.cells.iter().map(LstmCell::units).collect()
    }

    /// Runs every cell over the window; `caches[cell][t]`.
    fn run(&self, x: &[f64]) -> Vec<Vec<StepCache>> {
        let d = self.features();
        let mut inputs: Vec<Vec<f64>> = x.chunks_exact(d).map(<[f64]>::to_vec).collect();
        let mut caches = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            let n = cell.units();
            let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
            let mut steps = Vec::with_capacity(self.window);
            for xt in &inputs {
                let s = cell.step(xt, &h, &c);
                h.clone_from(&s.h);
                c.clone_from(&s.c);
                steps.push(s);
            }
            inputs = steps.iter().map(|s| s.h.clone()).collect();
            caches.push(steps);
        }
        caches
    }

    /// Cell state of every cell after each timestep (for inspection/tests).
    pub fn trace_cell_states(&self, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        self.run(x).into_iter().map(|steps| steps.into_iter().map(|s| s.c).collect()).collect()
    }
}

impl Network for LstmParams {
    fn input_len(&self) -> usize {
        self.window * self.features()
    }

    fn n_classes(&self) -> usize {
        self.head.weight.rows()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let d = self.features();
        let mut seq: Vec<Vec<f64>> = x.chunks_exact(d).map(<[f64]>::to_vec).collect();
        for cell in &self.cells {
            let n = cell.units();
            let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
            let mut out = Vec::with_capacity(seq.len());
            for xt in &seq {
                let s = cell.step(xt, &h, &c);
                h = s.h;
                c = s.c;
                out.push(h.clone());
            }
            seq = out;
        }
        let last = seq.last().cloned().unwrap_or_default();
        self.head.pre_activation(&last)
    }

    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        for (ci, c) in self.cells.iter().enumerate() {
            for k in 0..4 {
                out.push(TensorRef {
                    name: format!("cell{ci}.W_{}", GATES[k]),
                    shape: vec![c.w[k].rows(), c.w[k].cols()],
                    prunable: true,
                    data: c.w[k].as_slice(),
                });
            }
            for k in 0..4 {
                out.push(TensorRef {
                    name: format!("cell{ci}.U_{}", GATES[k]),
                    shape: vec![c.u[k].rows(), c.u[k].cols()],
                    prunable: true,
                    data: c.u[k].as_slice(),
                });
            }
            for k in 0..4 {
                out.push(TensorRef {
                    name: format!("cell{ci}.b_{}", GATES[k]),
                    shape: vec![c.b[k].len()],
                    prunable: false,
                    data: &c.b[k],
                });
            }
        }
        out.push(TensorRef {
            name: "head.weight".into(),
            shape: vec![self.head.weight.rows(), self.head.weight.cols()],
            prunable: true,
            data: self.head.weight.as_slice(),
        });
        out.push(TensorRef { name: "head.bias".into(), shape: vec![self.head.bias.len()], prunable: false, data: &self.head.bias });
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for c in &mut self.cells {
            for w in &mut c.w {
                out.push(w.as_mut_slice());
            }
            for u in &mut c.u {
                out.push(u.as_mut_slice());
            }
            for b in &mut c.b {
                out.push(b.as_mut_slice());
            }
        }
        out.push(self.head.weight.as_mut_slice());
        out.push(self.head.bias.as_mut_slice());
        out
    }

    /// Truncated backpropagation through the window.
    fn accumulate_gradient(&self, x: &[f64], label: usize, grads: &mut [Vec<f64>]) -> f64 {
        let caches = self.run(x);
        let top = caches.last().expect("validated: at least one cell");
        let h_last = &top[top.len() - 1].h;
        let logits = self.head.pre_activation(h_last);
        let loss = cross_entropy(&logits, label);
        let mut delta = softmax(&logits);
        delta[label] -= 1.0;

        let head_w = 12 * self.cells.len();
        add_outer(&mut grads[head_w], &delta, h_last);
        for (g, d) in grads[head_w + 1].iter_mut().zip(&delta) {
            *g += d;
        }

        let steps = self.window;
        // dh[t] flowing into the current cell from the layer above
        let mut dh_above: Vec<Vec<f64>> = vec![vec![0.0; self.cells.last().unwrap().units()]; steps];
        self.head.weight.matvec_t_add(&delta, &mut dh_above[steps - 1]);

        for ci in (0..self.cells.len()).rev() {
            let cell = &self.cells[ci];
            let n = cell.units();
            let base = 12 * ci;
            let mut dx_all: Vec<Vec<f64>> = vec![vec![0.0; cell.inputs()]; steps];
            let mut dh_next = vec![0.0; n];
            let mut dc_next = vec![0.0; n];
            for t in (0..steps).rev() {
                let s = &caches[ci][t];
                let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
                for j in 0..n {
                    let dh = dh_above[t][j] + dh_next[j];
                    let d_o = dh * s.tanh_c[j];
                    let dc = dc_next[j] + dh * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
                    let di = dc * s.g[j];
                    let dg = dc * s.i[j];
                    let df = dc * s.c_prev[j];
                    dc_next[j] = dc * s.f[j];
                    da[0][j] = di * s.i[j] * (1.0 - s.i[j]);
                    da[1][j] = df * s.f[j] * (1.0 - s.f[j]);
                    da[2][j] = dg * (1.0 - s.g[j] * s.g[j]);
                    da[3][j] = d_o * s.o[j] * (1.0 - s.o[j]);
                }
                let mut dh_prev = vec![0.0; n];
                for k in 0..4 {
                    add_outer(&mut grads[base + k], &da[k], &s.x);
                    add_outer(&mut grads[base + 4 + k], &da[k], &s.h_prev);
                    for (g, d) in grads[base + 8 + k].iter_mut().zip(&da[k]) {
                        *g += d;
                    }
                    cell.w[k].matvec_t_add(&da[k], &mut dx_all[t]);
                    cell.u[k].matvec_t_add(&da[k], &mut dh_prev);
                }
                dh_next = dh_prev;
            }
            dh_above = dx_all;
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_model(features: usize, units: usize, window: usize) -> LstmParams {
        LstmParams::new(vec![LstmCell::zeros(features, units)], DenseLayer::zeros(units, 3, Activation::Softmax), window)
            .unwrap()
    }

    #[test]
    fn all_zero_parameters_give_uniform_output() {
        let p = zero_model(4, 5, 3);
        let x: Vec<f64> = (0..12).map(|v| v as f64 * 0.3 - 1.0).collect();
        for v in p.forward(&x).unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        for c in &p.trace_cell_states(&x)[0] {
            assert!(c.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn hand_recurrence_saturated_gates() {
        let mut p = zero_model(1, 1, 2);
        p.cells[0].b[0] = vec![50.0];
        p.cells[0].b[1] = vec![50.0];
        p.cells[0].b[3] = vec![50.0];
        p.cells[0].b[2] = vec![0.5f64.atanh()];
        let states = p.trace_cell_states(&[0.0, 0.0]);
        assert!((states[0][0][0] - 0.5).abs() < 1e-12);
        assert!((states[0][1][0] - 1.0).abs() < 1e-12);
    }

    /// Scalar reference: explicit per-unit loops, no shared helpers.
    fn scalar_reference(p: &LstmParams, x: &[f64]) -> Vec<f64> {
        let cell = &p.cells[0];
        let (n, d) = (cell.units(), cell.inputs());
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for t in 0..p.window {
            let xt = &x[t * d..(t + 1) * d];
            let mut gate = [[0.0; 8]; 4];
            for k in 0..4 {
                for j in 0..n {
                    let mut s = cell.b[k][j];
                    for m in 0..d {
                        s += cell.w[k].get(j, m) * xt[m];
                    }
                    for m in 0..n {
                        s += cell.u[k].get(j, m) * h[m];
                    }
                    gate[k][j] = s;
                }
            }
            let mut nh = vec![0.0; n];
            for j in 0..n {
                let (i, f, g, o) = (sig(gate[0][j]), sig(gate[1][j]), gate[2][j].tanh(), sig(gate[3][j]));
                c[j] = f * c[j] + i * g;
                nh[j] = o * c[j].tanh();
            }
            h = nh;
        }
        let mut z = [0.0; 3];
        for r in 0..3 {
            z[r] = p.head.bias[r];
            for j in 0..n {
                z[r] += p.head.weight.get(r, j) * h[j];
            }
        }
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        let s: f64 = z.iter().map(|v| (v - m).exp()).sum();
        z.iter().map(|v| (v - m).exp() / s).collect()
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let p = LstmParams::init(3, &[2], 3, 4, &mut rng);
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.5..1.5)).collect();
            let a = p.forward(&x).unwrap();
            let b = scalar_reference(&p, &x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let p = zero_model(2, 2, 3);
        assert!(p.forward(&[0.0; 5]).is_err());
        assert!(p.forward(&[f64::INFINITY, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(LstmParams::new(vec![LstmCell::zeros(2, 3)], DenseLayer::zeros(2, 3, Activation::Softmax), 1).is_err());
        assert!(LstmParams::new(vec![LstmCell::zeros(2, 2)], DenseLayer::zeros(2, 3, Activation::Softmax), 0).is_err());
    }
}
