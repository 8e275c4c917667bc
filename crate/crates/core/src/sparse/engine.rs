use std::borrow::Cow;

use super::csr::CsrMatrix;
use super::kernel::{DenseMatrix, MatVec};
use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, LstmCell, LstmParams, Matrix, MlpParams, Model, ModelKind, ModelMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<M> {
    pub weight: M,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

/// One LSTM cell with a separate matrix per gate (order i, f, g, o).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell<M> {
    pub w: [M; 4],
    pub u: [M; 4],
    pub b: [Vec<f32>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology<M> {
    Mlp(Vec<Layer<M>>),
    Lstm { cells: Vec<Cell<M>>, head: Layer<M>, window: usize },
}

/// f32 inference model. With `CsrMatrix` weights this is the sparse engine;
/// with `DenseMatrix` it is the naive dense reference.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceModel<M> {
    pub net: Topology<M>,
    pub meta: ModelMeta,
}

pub type SparseModel = InferenceModel<CsrMatrix>;
pub type DenseEngine = InferenceModel<DenseMatrix>;

fn f32s(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn f64s(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn convert_layer<M: MatVec>(l: &DenseLayer) -> Result<Layer<M>> {
    Ok(Layer {
        weight: M::from_f64(l.weight.rows(), l.weight.cols(), l.weight.as_slice())?,
        bias: f32s(&l.bias),
        activation: l.activation,
    })
}

fn restore_layer<M: MatVec>(l: &Layer<M>) -> Result<DenseLayer> {
    Ok(DenseLayer {
        weight: Matrix::from_vec(l.weight.rows(), l.weight.cols(), f64s(&l.weight.to_dense()))?,
        bias: f64s(&l.bias),
        activation: l.activation,
    })
}

pub(crate) fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax over the whole logits vector.
pub(crate) fn softmax_in_place(z: &mut [f32]) {
    let m = z.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

fn relu_in_place(z: &mut [f32]) {
    for v in z.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

impl<M: MatVec> Layer<M> {
    fn apply(&self, x: &[f32]) -> Vec<f32> {
        let mut out = self.bias.clone();
        self.weight.matvec_add(x, &mut out);
        match self.activation {
            Activation::Relu => relu_in_place(&mut out),
            Activation::Softmax => softmax_in_place(&mut out),
        }
        out
    }
}

impl<M: MatVec> Cell<M> {
    fn units(&self) -> usize {
        self.w[0].rows()
    }

    /// Eight matrix-vector products: W and U for each gate.
    fn step(&self, x: &[f32], h: &mut [f32], c: &mut [f32]) {
        let mut pre: [Vec<f32>; 4] = std::array::from_fn(|k| self.b[k].clone());
        for (k, p) in pre.iter_mut().enumerate() {
            self.w[k].matvec_add(x, p);
            self.u[k].matvec_add(h, p);
        }
        for j in 0..h.len() {
            let i = sigmoid(pre[0][j]);
            let f = sigmoid(pre[1][j]);
            let g = pre[2][j].tanh();
            let o = sigmoid(pre[3][j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }
}

impl<M: MatVec> InferenceModel<M> {
    pub fn from_model(model: &Model, meta: ModelMeta) -> Result<Self> {
        let net = match model {
            Model::Mlp(p) => Topology::Mlp(p.layers.iter().map(convert_layer).collect::<Result<_>>()?),
            Model::Lstm(p) => {
                let mut cells = Vec::with_capacity(p.cells.len());
                for c in &p.cells {
                    let conv = |m: &Matrix| M::from_f64(m.rows(), m.cols(), m.as_slice());
                    cells.push(Cell {
                        w: [conv(&c.w[0])?, conv(&c.w[1])?, conv(&c.w[2])?, conv(&c.w[3])?],
                        u: [conv(&c.u[0])?, conv(&c.u[1])?, conv(&c.u[2])?, conv(&c.u[3])?],
                        b: std::array::from_fn(|k| f32s(&c.b[k])),
                    });
                }
                Topology::Lstm { cells, head: convert_layer(&p.head)?, window: p.window }
            }
        };
        Self::new(net, meta)
    }

    pub fn new(net: Topology<M>, mut meta: ModelMeta) -> Result<Self> {
        let m = Self { net, meta: ModelMeta::default() };
        let features = m.features();
        if meta.source_features == 0 {
            meta.source_features = features;
        }
        match &meta.feature_mask {
            Some(mask) => {
                if mask.len() != features {
                    return Err(Error::dims("feature_mask length", features, mask.len()));
                }
                if let Some(&bad) = mask.iter().find(|&&i| i >= meta.source_features) {
                    return Err(Error::dims("feature_mask index", meta.source_features, bad));
                }
            }
            None => {
                if meta.source_features != features {
                    return Err(Error::dims("source feature count", features, meta.source_features));
                }
            }
        }
        Ok(Self { net: m.net, meta })
    }

    /// Dense f64 model holding the same (f32) weights.
    pub fn to_model(&self) -> Result<Model> {
        Ok(match &self.net {
            Topology::Mlp(layers) => Model::Mlp(MlpParams::new(layers.iter().map(restore_layer).collect::<Result<_>>()?)?),
            Topology::Lstm { cells, head, window } => {
                let mut out = Vec::with_capacity(cells.len());
                for c in cells {
                    let conv = |m: &M| Matrix::from_vec(m.rows(), m.cols(), f64s(&m.to_dense()));
                    out.push(LstmCell {
                        w: [conv(&c.w[0])?, conv(&c.w[1])?, conv(&c.w[2])?, conv(&c.w[3])?],
                        u: [conv(&c.u[0])?, conv(&c.u[1])?, conv(&c.u[2])?, conv(&c.u[3])?],
                        b: std::array::from_fn(|k| f64s(&c.b[k])),
                    });
                }
                Model::Lstm(LstmParams::new(out, restore_layer(head)?, *window)?)
            }
        })
    }

    /// Re-stores the same weights in another matrix format.
    pub fn convert<T: MatVec>(&self) -> Result<InferenceModel<T>> {
        InferenceModel::from_model(&self.to_model()?, self.meta.clone())
    }

    pub fn kind(&self) -> ModelKind {
        match self.net {
            Topology::Mlp(_) => ModelKind::Mlp,
            Topology::Lstm { .. } => ModelKind::Lstm,
        }
    }

    /// Per-timestep input width the network itself consumes.
    pub fn features(&self) -> usize {
        match &self.net {
            Topology::Mlp(layers) => layers.first().map_or(0, |l| l.weight.cols()),
            Topology::Lstm { cells, .. } => cells.first().map_or(0, |c| c.w[0].cols()),
        }
    }

    pub fn window(&self) -> usize {
        match &self.net {
            Topology::Mlp(_) => 1,
            Topology::Lstm { window, .. } => *window,
        }
    }

    pub fn n_classes(&self) -> usize {
        match &self.net {
            Topology::Mlp(layers) => layers.last().map_or(0, |l| l.weight.rows()),
            Topology::Lstm { head, .. } => head.weight.rows(),
        }
    }

    pub fn input_len(&self) -> usize {
        self.window() * self.features()
    }

    /// Width of a full (unprojected) input.
    pub fn source_len(&self) -> usize {
        self.window() * self.meta.source_features
    }

    /// Every weight matrix in file order.
    pub fn weights(&self) -> Vec<(String, &M)> {
        let mut out = Vec::new();
        match &self.net {
            Topology::Mlp(layers) => {
                for (i, l) in layers.iter().enumerate() {
                    out.push((format!("layer{i}.weight"), &l.weight));
                }
            }
            Topology::Lstm { cells, head, .. } => {
                for (ci, c) in cells.iter().enumerate() {
                    for (k, g) in crate::nn::GATES.iter().enumerate() {
                        out.push((format!("cell{ci}.W_{g}"), &c.w[k]));
                    }
                    for (k, g) in crate::nn::GATES.iter().enumerate() {
                        out.push((format!("cell{ci}.U_{g}"), &c.u[k]));
                    }
                }
                out.push(("head.weight".into(), &head.weight));
            }
        }
        out
    }

    /// Every bias vector in file order.
    pub fn biases(&self) -> Vec<(String, &[f32])> {
        let mut out: Vec<(String, &[f32])> = Vec::new();
        match &self.net {
            Topology::Mlp(layers) => {
                for (i, l) in layers.iter().enumerate() {
                    out.push((format!("layer{i}.bias"), &l.bias));
                }
            }
            Topology::Lstm { cells, head, .. } => {
                for (ci, c) in cells.iter().enumerate() {
                    for (k, g) in crate::nn::GATES.iter().enumerate() {
                        out.push((format!("cell{ci}.b_{g}"), &c.b[k]));
                    }
                }
                out.push(("head.bias".into(), &head.bias));
            }
        }
        out
    }

    /// Weights-only size in bytes (biases excluded).
    pub fn weight_bytes(&self) -> usize {
        self.weights().iter().map(|(_, m)| m.weight_bytes()).sum()
    }

    /// Class probabilities for an input of exactly `input_len()` values.
    pub fn infer_unchecked(&self, x: &[f32]) -> Vec<f32> {
        match &self.net {
            Topology::Mlp(layers) => {
                let mut a = Cow::Borrowed(x);
                for l in layers {
                    a = Cow::Owned(l.apply(&a));
                }
                a.into_owned()
            }
            Topology::Lstm { cells, head, .. } => {
                let d = self.features();
                let mut seq: Vec<Vec<f32>> = x.chunks_exact(d).map(<[f32]>::to_vec).collect();
                for cell in cells {
                    let n = cell.units();
                    let (mut h, mut c) = (vec![0.0f32; n], vec![0.0f32; n]);
                    for xt in seq.iter_mut() {
                        cell.step(xt, &mut h, &mut c);
                        xt.clone_from(&h);
                    }
                }
                head.apply(seq.last().map_or(&[][..], |v| v.as_slice()))
            }
        }
    }

    pub fn infer(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.input_len() {
            return Err(Error::dims("model input", self.input_len(), x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input".into()));
        }
        Ok(self.infer_unchecked(x))
    }

    /// Selects the retained columns of a full-width input. Inputs already of
    /// model width pass through.
    pub fn project<'a>(&self, x: &'a [f32]) -> Result<Cow<'a, [f32]>> {
        match &self.meta.feature_mask {
            Some(mask) if x.len() == self.source_len() => {
                let d = self.meta.source_features;
                Ok(Cow::Owned(x.chunks_exact(d).flat_map(|row| mask.iter().map(move |&i| row[i])).collect()))
            }
            _ if x.len() == self.input_len() => Ok(Cow::Borrowed(x)),
            _ => Err(Error::dims("model input", self.source_len(), x.len())),
        }
    }

    /// Probabilities for a full-width or model-width input.
    pub fn predict(&self, x: &[f32]) -> Result<Vec<f32>> {
        let p = self.project(x)?;
        self.infer(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, Network};
    use crate::prune::SparsityMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pruned(arch: &Architecture, features: usize, sparsity: f64, seed: u64) -> Model {
        let mut m = arch.build(features, 3, seed);
        if sparsity > 0.0 {
            let mask = SparsityMask::dense(&m).grow(&m, sparsity).unwrap();
            mask.apply(&mut m);
        }
        m.round_to_f32();
        m
    }

    fn max_dev(model: &Model, inputs: usize, seed: u64) -> f64 {
        let sparse = SparseModel::from_model(model, ModelMeta::default()).unwrap();
        let dense = DenseEngine::from_model(model, ModelMeta::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..inputs {
            let x: Vec<f64> = (0..model.input_len()).map(|_| rng.random_range(-2.0..2.0f32) as f64).collect();
            let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
            let reference = model.forward(&x).unwrap();
            for (engine_out, r) in [sparse.infer(&xf).unwrap(), dense.infer(&xf).unwrap()].iter().flat_map(|o| o.iter().zip(&reference)) {
                worst = worst.max((*engine_out as f64 - r).abs());
            }
        }
        worst
    }

    #[test]
    fn matches_dense_forward() {
        let mlp = Architecture { kind: ModelKind::Mlp, hidden: vec![24, 12], window: 1 };
        let lstm = Architecture { kind: ModelKind::Lstm, hidden: vec![8, 6], window: 4 };
        for (i, s) in [0.0, 0.3, 0.65, 0.9].into_iter().enumerate() {
            assert!(max_dev(&pruned(&mlp, 10, s, i as u64), 30, 1) < 1e-5);
            assert!(max_dev(&pruned(&lstm, 5, s, i as u64), 20, 2) < 1e-5);
        }
    }

    #[test]
    fn zero_models_are_uniform() {
        let mlp = Model::Mlp(MlpParams::new(vec![DenseLayer::zeros(4, 5, Activation::Relu), DenseLayer::zeros(5, 3, Activation::Softmax)]).unwrap());
        let lstm = Model::Lstm(LstmParams::new(vec![LstmCell::zeros(2, 3)], DenseLayer::zeros(3, 3, Activation::Softmax), 3).unwrap());
        for m in [mlp, lstm] {
            let s = SparseModel::from_model(&m, ModelMeta::default()).unwrap();
            assert!(s.weights().iter().all(|(_, w)| w.nnz() == 0));
            let out = s.infer(&vec![0.7; m.input_len()]).unwrap();
            assert!(out.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-7));
        }
    }

    #[test]
    fn round_trips_to_dense_model() {
        let m = pruned(&Architecture { kind: ModelKind::Lstm, hidden: vec![5], window: 2 }, 3, 0.65, 4);
        let s = SparseModel::from_model(&m, ModelMeta::default()).unwrap();
        assert_eq!(s.to_model().unwrap(), m);
        let d: DenseEngine = s.convert().unwrap();
        assert_eq!(d.to_model().unwrap(), m);
    }

    #[test]
    fn feature_mask_projects_full_inputs() {
        let m = pruned(&Architecture { kind: ModelKind::Lstm, hidden: vec![4], window: 2 }, 2, 0.3, 5);
        let meta = ModelMeta { feature_mask: Some(vec![3, 1]), source_features: 5, ..Default::default() };
        let s = SparseModel::from_model(&m, meta).unwrap();
        let full = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert_eq!(s.project(&full).unwrap().as_ref(), &[3.0, 1.0, 8.0, 6.0]);
        assert_eq!(s.predict(&full).unwrap(), s.infer(&[3.0, 1.0, 8.0, 6.0]).unwrap());
        assert!(s.predict(&[0.0; 7]).is_err());
        let bad = ModelMeta { feature_mask: Some(vec![0, 9]), source_features: 5, ..Default::default() };
        assert!(SparseModel::from_model(&m, bad).is_err());
    }

    #[test]
    fn input_errors() {
        let m = pruned(&Architecture { kind: ModelKind::Mlp, hidden: vec![4], window: 1 }, 3, 0.0, 6);
        let s = SparseModel::from_model(&m, ModelMeta::default()).unwrap();
        assert!(matches!(s.infer(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(s.infer(&[1.0, f32::NAN, 0.0]), Err(Error::NonFinite(_))));
    }
}
