//! Random search over the MLP space on a small synthetic fixture.
//!
//! cargo run --release --example random_search

use sparsebench::dataflow::{preprocess, synth_generate, PreprocessConfig, SynthSpec};
use sparsebench::nn::{ModelKind, TrainConfig};
use sparsebench::tuner::{run_study, SearchSpace, StudyConfig, TrialStatus};

fn main() -> sparsebench::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let spec = SynthSpec { rows: 3000, ..SynthSpec::default() };
    let p = preprocess(&synth_generate(&spec, 9)?, None, &spec.label_mapping(), &PreprocessConfig::default())?;
    let space = SearchSpace::default_for(ModelKind::Mlp);
    let mut cfg = StudyConfig::new(&space, 9);
    cfg.budget = 6;
    cfg.base_train = TrainConfig { max_epochs: 4, patience: 2, ..TrainConfig::default() };

    let study = run_study(&space, &p.train, &p.val, &cfg)?;
    for r in &study.records {
        let acc = r.metrics.as_ref().map_or(f64::NAN, |m| m.accuracy);
        let status = if r.status == TrialStatus::Complete { "ok" } else { "failed" };
        println!("trial {}  {:<6} acc {acc:.4}  {}  {}", r.trial, status, serde_json::to_string(&r.config)?, r.error.as_deref().unwrap_or(""));
    }
    println!("best: trial {}", study.best().trial);
    Ok(())
}
