use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::kernel::{kernel_shap, lstm_window_shap, Explanation, SamplingMode, ShapConfig};
use super::report::{select_topk, AttributionReport};
use crate::dataflow::Dataset;
use crate::error::{Error, Result};
use crate::nn::{softmax, train, Architecture, Model, ModelKind, ModelMeta, Network, TrainConfig};
use crate::prune::{prune_and_finetune, PruneOutcome, PruneSchedule};
use crate::sparse::SparseModel;

/// `count` sample indices out of `n`: a sorted random subset, or a random
/// contiguous block.
pub fn pick_rows(n: usize, count: usize, mode: SamplingMode, rng: &mut impl Rng) -> Vec<usize> {
    let count = count.min(n);
    match mode {
        SamplingMode::Random => {
            let mut idx = sample(rng, n, count).into_vec();
            idx.sort_unstable();
            idx
        }
        SamplingMode::Consecutive => {
            let start = rng.random_range(0..=n - count);
            (start..start + count).collect()
        }
    }
}

fn instance_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// KernelSHAP attributions of `model` with background samples drawn from
/// `background` and explained samples drawn from `eval`. LSTM attributions
/// are averaged over the window's timesteps.
pub fn explain_model(model: &Model, background: &Dataset, eval: &Dataset, cfg: &ShapConfig) -> Result<(AttributionReport, Vec<Explanation>)> {
    let v = cfg.violations(model.input_len());
    if !v.is_empty() {
        return Err(Error::InvalidShapConfig(v.join("; ")));
    }
    let bg = model.samples(background);
    let ev = model.samples(eval);
    if bg.is_empty() || ev.is_empty() {
        return Err(Error::Empty("attribution samples".into()));
    }
    if bg.input_len() != model.input_len() || ev.input_len() != model.input_len() {
        return Err(Error::dims("attribution sample width", model.input_len(), ev.input_len()));
    }
    let mode = cfg.sampling_mode.unwrap_or(match model.kind() {
        ModelKind::Mlp => SamplingMode::Random,
        ModelKind::Lstm => SamplingMode::Consecutive,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bg_rows: Vec<Vec<f64>> =
        pick_rows(bg.len(), cfg.background_count, mode, &mut rng).into_iter().map(|i| bg.input(i).to_vec()).collect();
    let ev_idx = pick_rows(ev.len(), cfg.eval_count, mode, &mut rng);
    let predict = |x: &[f64]| softmax(&model.logits(x));
    let window = model.window();
    let explanations = ev_idx
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, i));
            match model.kind() {
                ModelKind::Mlp => kernel_shap(predict, ev.input(r), &bg_rows, cfg, &mut rng),
                ModelKind::Lstm => lstm_window_shap(predict, ev.input(r), &bg_rows, window, cfg, &mut rng),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let report = AttributionReport::from_explanations(eval.feature_names().to_vec(), &explanations)?;
    Ok((report, explanations))
}

#[derive(Debug, Clone)]
pub struct FsPruneConfig {
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub schedule: PruneSchedule,
    pub shap: ShapConfig,
    pub k: usize,
    /// Initialisation seed of the retrained model.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct FsOutcome {
    pub report: AttributionReport,
    pub selected: Vec<usize>,
    pub share: f64,
    /// Dense model retrained on the selected columns.
    pub retrained: Model,
    pub pruned: PruneOutcome<Model>,
    pub sparse: SparseModel,
    pub train: Dataset,
    pub val: Dataset,
}

/// Attribution on `baseline`, top-k selection, retraining from scratch on
/// the selected columns, then gradual pruning. The resulting sparse model
/// carries the selected columns as its feature mask.
pub fn fs_prune_pipeline(baseline: &Model, train_data: &Dataset, val: &Dataset, eval: &Dataset, cfg: &FsPruneConfig) -> Result<FsOutcome> {
    let (report, _) = explain_model(baseline, train_data, eval, &cfg.shap)?;
    fs_prune_from_report(report, train_data, val, cfg)
}

/// The pipeline after attribution, for a report computed elsewhere.
pub fn fs_prune_from_report(report: AttributionReport, train_data: &Dataset, val: &Dataset, cfg: &FsPruneConfig) -> Result<FsOutcome> {
    let (selected, share) = select_topk(&report, cfg.k)?;
    log::info!("selected {} features holding {:.1}% of attribution", selected.len(), 100.0 * share);
    let train_p = train_data.project(&selected)?;
    let val_p = val.project(&selected)?;
    let arch = &cfg.architecture;
    let fresh = arch.build(cfg.k, train_p.n_classes(), cfg.seed);
    let (tr, va) = (arch.samples(&train_p), arch.samples(&val_p));
    let (retrained, _) = train(fresh, &tr, Some(&va), &cfg.train, None)?;
    let pruned = prune_and_finetune(retrained.clone(), &tr, Some(&va), &cfg.train, &cfg.schedule)?;
    let meta = ModelMeta {
        feature_names: train_p.feature_names().to_vec(),
        class_names: train_p.class_names().to_vec(),
        feature_mask: Some(selected.clone()),
        source_features: train_data.n_features(),
    };
    let sparse = SparseModel::from_model(&pruned.net, meta)?;
    Ok(FsOutcome { report, selected, share, retrained, pruned, sparse, train: train_p, val: val_p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer, Matrix, MlpParams};

    #[test]
    fn row_picking() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = pick_rows(50, 10, SamplingMode::Random, &mut rng);
        assert_eq!(r.len(), 10);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        let c = pick_rows(50, 10, SamplingMode::Consecutive, &mut rng);
        assert!(c.windows(2).all(|w| w[1] == w[0] + 1));
        assert_eq!(pick_rows(5, 10, SamplingMode::Consecutive, &mut rng), vec![0, 1, 2, 3, 4]);
    }

    fn dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..n).map(|i| i % 3).collect();
        Dataset::new(features, labels, (0..d).map(|i| format!("c{i}")).collect(), vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn informative_inputs_rank_first_and_deterministic() {
        // logits depend on inputs 1 and 3 only
        let mut w = Matrix::zeros(3, 6);
        w.set(0, 1, 3.0);
        w.set(1, 3, -2.0);
        w.set(2, 1, -1.0);
        let model = Model::Mlp(MlpParams::new(vec![DenseLayer { weight: w, bias: vec![0.0; 3], activation: Activation::Softmax }]).unwrap());
        let data = dataset(80, 6, 2);
        let cfg = ShapConfig { background_count: 20, eval_count: 10, seed: 9, ..Default::default() };
        let (report, ex) = explain_model(&model, &data, &data, &cfg).unwrap();
        assert_eq!(&report.ranking[..2], &[1, 3]);
        assert!(report.mean_abs[0] < 1e-9);
        assert!(ex.iter().all(|e| e.additivity_gap().iter().all(|g| g.abs() < 1e-10)));
        let (again, _) = explain_model(&model, &data, &data, &cfg).unwrap();
        assert_eq!(again, report);
    }
}
