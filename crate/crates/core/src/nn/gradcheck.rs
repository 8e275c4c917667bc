use super::network::{Network, SampleSet};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Below this combined magnitude a gradient entry is compared on an
/// absolute scale instead of a relative one.
pub const GRAD_FLOOR: f64 = 1e-5;

fn mean_loss<N: Network>(net: &N, batch: &SampleSet) -> f64 {
    (0..batch.len()).map(|i| net.loss(batch.input(i), batch.label(i))).sum::<f64>() / batch.len() as f64
}

/// Analytic gradient of the mean batch loss.
pub fn analytic_gradient<N: Network>(net: &N, batch: &SampleSet) -> Vec<Vec<f64>> {
    let mut grads = net.zero_gradients();
    for i in 0..batch.len() {
        net.accumulate_gradient(batch.input(i), batch.label(i), &mut grads);
    }
    let scale = 1.0 / batch.len() as f64;
    for g in &mut grads {
        g.iter_mut().for_each(|v| *v *= scale);
    }
    grads
}

/// Central-difference gradient of the mean batch loss.
pub fn numeric_gradient<N: Network>(net: &N, batch: &SampleSet, h: f64) -> Vec<Vec<f64>> {
    let mut probe = net.clone();
    let sizes: Vec<usize> = net.tensors().iter().map(|t| t.data.len()).collect();
    let mut out: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    for (k, &n) in sizes.iter().enumerate() {
        for j in 0..n {
            let orig = probe.tensors_mut()[k][j];
            probe.tensors_mut()[k][j] = orig + h;
            let plus = mean_loss(&probe, batch);
            probe.tensors_mut()[k][j] = orig - h;
            let minus = mean_loss(&probe, batch);
            probe.tensors_mut()[k][j] = orig;
            out[k][j] = (plus - minus) / (2.0 * h);
        }
    }
    out
}

/// `|a - n| / max(|a| + |n|, GRAD_FLOOR)` maximised over every parameter.
pub fn grad_check<N: Network>(net: &N, batch: &SampleSet) -> f64 {
    let a = analytic_gradient(net, batch);
    let n = numeric_gradient(net, batch, FD_STEP);
    a.iter()
        .flatten()
        .zip(n.iter().flatten())
        .map(|(x, y)| (x - y).abs() / (x.abs() + y.abs()).max(GRAD_FLOOR))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::lstm::{LstmCell, LstmParams};
    use crate::nn::mlp::{DenseLayer, MlpParams};
    use crate::nn::network::Activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, width: usize, n: usize) -> SampleSet {
        let inputs = (0..width * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..n).map(|i| i % 3).collect();
        SampleSet::new(width, 3, inputs, labels).unwrap()
    }

    #[test]
    fn tiny_mlp() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..5 {
            let mut net = MlpParams::init(5, &[8, 6], 3, &mut rng);
            for l in &mut net.layers {
                l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
            }
            assert!(net.parameter_count() <= 500);
            let batch = random_batch(&mut rng, 5, 6);
            let err = grad_check(&net, &batch);
            assert!(err < 1e-4, "mlp rel err {err}");
        }
    }

    #[test]
    fn single_cell_lstm_window_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mut net = LstmParams::init(3, &[4], 3, 3, &mut rng);
            for b in net.cells[0].b.iter_mut() {
                b.iter_mut().for_each(|v| *v += rng.random_range(-0.5..0.5));
            }
            assert!(net.parameter_count() <= 500);
            let batch = random_batch(&mut rng, 9, 4);
            let err = grad_check(&net, &batch);
            assert!(err < 1e-3, "lstm rel err {err}");
        }
    }

    #[test]
    fn stacked_lstm_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let net = LstmParams::init(2, &[3, 2], 3, 3, &mut rng);
        let batch = random_batch(&mut rng, 6, 3);
        assert!(grad_check(&net, &batch) < 1e-3);
    }

    #[test]
    fn symmetric_zero_gradient_point() {
        let net = MlpParams::new(vec![DenseLayer::zeros(2, 3, Activation::Relu), DenseLayer::zeros(3, 3, Activation::Softmax)]).unwrap();
        // identical inputs, one per class: every gradient cancels
        let batch = SampleSet::new(2, 3, vec![0.4, -0.7, 0.4, -0.7, 0.4, -0.7], vec![0, 1, 2]).unwrap();
        let a = analytic_gradient(&net, &batch);
        assert!(a.iter().flatten().all(|v| v.abs() < 1e-15));
        assert!(grad_check(&net, &batch) < 1e-4);

        let lstm = LstmParams::new(vec![LstmCell::zeros(1, 2)], DenseLayer::zeros(2, 3, Activation::Softmax), 2).unwrap();
        let lb = SampleSet::new(2, 3, vec![0.1, 0.2, 0.1, 0.2, 0.1, 0.2], vec![0, 1, 2]).unwrap();
        assert!(grad_check(&lstm, &lb) < 1e-4);
    }
}
