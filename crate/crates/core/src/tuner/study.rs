use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::{apply_config, SearchSpace, TrialConfig};
use crate::bench::{compute_metrics, Metrics};
use crate::dataflow::Dataset;
use crate::error::{Error, Result};
use crate::nn::{train, Architecture, Network, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: TrialConfig,
    pub seed: u64,
    /// Validation metrics; `None` when the trial failed.
    pub metrics: Option<Metrics>,
    pub status: TrialStatus,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub budget: usize,
    /// Trials run concurrently; 0 uses rayon's default.
    pub workers: usize,
    pub seed: u64,
    /// Settings every trial starts from (window, optimizer, epochs).
    pub base_arch: Architecture,
    pub base_train: TrainConfig,
}

impl StudyConfig {
    pub fn new(space: &SearchSpace, seed: u64) -> Self {
        let base_arch = match space.model {
            crate::nn::ModelKind::Mlp => Architecture::mlp_default(),
            crate::nn::ModelKind::Lstm => Architecture::lstm_default(),
        };
        Self { budget: 10, workers: 0, seed, base_arch, base_train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Study {
    pub records: Vec<TrialRecord>,
    /// Index into `records` of the best complete trial.
    pub best: usize,
}

impl Study {
    pub fn best(&self) -> &TrialRecord {
        &self.records[self.best]
    }

    /// `trial,params_json,accuracy,precision,recall,f1,status`
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["trial", "params_json", "accuracy", "precision", "recall", "f1", "status"])?;
        for r in &self.records {
            let m = r.metrics.map(|m| [m.accuracy, m.precision, m.recall, m.f1].map(|v| format!("{v:.6}")));
            let m = m.unwrap_or_else(|| [(); 4].map(|_| String::new()));
            let status = match r.status {
                TrialStatus::Complete => "complete",
                TrialStatus::Failed => "failed",
            };
            w.write_record([r.trial.to_string(), serde_json::to_string(&r.config)?, m[0].clone(), m[1].clone(), m[2].clone(), m[3].clone(), status.into()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// The best trial as a config fragment: `{"arch": .., "train": ..}`.
    pub fn best_fragment(&self, cfg: &StudyConfig, space: &SearchSpace) -> Result<serde_json::Value> {
        let (arch, train) = apply_config(space.model, &self.best().config, &cfg.base_arch, &cfg.base_train)?;
        Ok(serde_json::json!({ "arch": arch, "train": train, "trial": self.best().trial, "params": self.best().config }))
    }
}

fn run_trial(trial: usize, space: &SearchSpace, train_data: &Dataset, val: &Dataset, cfg: &StudyConfig) -> TrialRecord {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let config = space.sample(seed);
    let outcome = (|| -> Result<Metrics> {
        let (arch, mut tc) = apply_config(space.model, &config, &cfg.base_arch, &cfg.base_train)?;
        tc.seed = seed;
        let (tr, va) = (arch.samples(train_data), arch.samples(val));
        let net = arch.build(train_data.n_features(), train_data.n_classes(), seed);
        let (net, _) = train(net, &tr, Some(&va), &tc, None)?;
        let pred: Vec<usize> = (0..va.len()).map(|i| net.predict_class(va.input(i))).collect();
        compute_metrics(&pred, va.labels())
    })();
    match outcome {
        Ok(m) => {
            log::info!("trial {trial}: accuracy {:.4} {}", m.accuracy, serde_json::to_string(&config).unwrap_or_default());
            TrialRecord { trial, config, seed, metrics: Some(m), status: TrialStatus::Complete, error: None }
        }
        Err(e) => {
            log::warn!("trial {trial} failed: {e}");
            TrialRecord { trial, config, seed, metrics: None, status: TrialStatus::Failed, error: Some(e.to_string()) }
        }
    }
}

/// Random search: `budget` independently seeded trials, each trained from
/// scratch and scored by validation accuracy. Failed trials are recorded
/// and skipped; ties go to the earlier trial.
pub fn run_study(space: &SearchSpace, train_data: &Dataset, val: &Dataset, cfg: &StudyConfig) -> Result<Study> {
    space.validate()?;
    if cfg.budget == 0 {
        return Err(Error::InvalidSpace("budget must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidSpace(format!("worker pool: {e}")))?;
    let records: Vec<TrialRecord> =
        pool.install(|| (0..cfg.budget).into_par_iter().map(|t| run_trial(t, space, train_data, val, cfg)).collect());
    let best = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.metrics.map(|m| (i, m.accuracy)))
        .fold(None, |acc: Option<(usize, f64)>, (i, a)| match acc {
            Some((_, b)) if b >= a => acc,
            _ => Some((i, a)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Empty("completed trials".into()))?;
    Ok(Study { records, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuner::ParamKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Three well separated Gaussian blobs in 4 dimensions.
    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 3;
            for j in 0..4 {
                let centre = if j == c { 3.0 } else { 0.0 };
                features.push(centre + rng.random_range(-0.5..0.5));
            }
            labels.push(c);
        }
        Dataset::new(features, labels, (0..4).map(|j| format!("x{j}")).collect(), ["a", "b", "c"].map(String::from).to_vec()).unwrap()
    }

    fn quick(space: &SearchSpace, budget: usize) -> StudyConfig {
        let mut cfg = StudyConfig::new(space, 3);
        cfg.budget = budget;
        cfg.base_train.max_epochs = 15;
        cfg
    }

    #[test]
    fn budget_one_is_best() {
        let space = SearchSpace::mlp_default();
        let (tr, va) = (blobs(150, 1), blobs(60, 2));
        let s = run_study(&space, &tr, &va, &quick(&space, 1)).unwrap();
        assert_eq!(s.records.len(), 1);
        assert_eq!(s.best, 0);
    }

    #[test]
    fn separable_data_reaches_high_accuracy() {
        let (tr, va) = (blobs(300, 1), blobs(90, 2));
        for space in [SearchSpace::mlp_default(), SearchSpace::lstm_default()] {
            let mut cfg = quick(&space, 10);
            cfg.base_arch.window = 2;
            let s = run_study(&space, &tr, &va, &cfg).unwrap();
            let best = s.best().metrics.unwrap().accuracy;
            assert!(best >= 0.95, "{:?} best {best}", space.model);
            assert!(s.records.iter().all(|r| r.metrics.is_none_or(|m| m.accuracy <= best && m.in_unit_range())));
            let again = run_study(&space, &tr, &va, &cfg).unwrap();
            assert_eq!(again.records, s.records);
        }
    }

    #[test]
    fn failing_trials_are_recorded() {
        // batch size 0 fails validation in some trials
        let mut space = SearchSpace::mlp_default();
        space.layers = ParamKind::IntRange { lo: 2, hi: 2, step: 1 };
        space.params.push(crate::tuner::ParamSpec {
            name: "batch_size".into(),
            kind: ParamKind::Categorical { choices: vec![0.into(), 16.into()] },
            per_layer: false,
        });
        let (tr, va) = (blobs(90, 1), blobs(30, 2));
        let s = run_study(&space, &tr, &va, &quick(&space, 6)).unwrap();
        assert!(s.records.iter().any(|r| r.status == TrialStatus::Failed));
        assert_eq!(s.best().status, TrialStatus::Complete);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("study.csv");
        s.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("trial,params_json,accuracy,precision,recall,f1,status\n"));
        assert_eq!(text.lines().count(), 7);
        assert!(text.contains(",failed"));
        let frag = s.best_fragment(&quick(&space, 6), &space).unwrap();
        assert_eq!(frag["arch"]["kind"], "mlp");
    }
}
