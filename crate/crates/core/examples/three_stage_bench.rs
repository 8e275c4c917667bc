//! Runs the whole pipeline on a small synthetic fixture and prints the
//! original / pruned / feature-selected comparison.
//!
//! cargo run --release --example three_stage_bench [run-dir]
//!
//! Existing artifacts in an explicit run-dir are reused.

use sparsebench::config::RunConfig;
use sparsebench::dataflow::SynthSpec;
use sparsebench::explain::ShapConfig;
use sparsebench::nn::{Architecture, ModelKind, TrainConfig};
use sparsebench::pipeline::{stage_bench, RunDir};

fn main() -> sparsebench::Result<()> {
    let root = match std::env::args().nth(1) {
        Some(dir) => dir.into(),
        None => {
            let dir = std::env::temp_dir().join("three_stage_bench");
            // start fresh: stage_bench reuses whatever artifacts it finds
            let _ = std::fs::remove_dir_all(&dir);
            dir
        }
    };
    let mut cfg = RunConfig { run_name: "three-stage".into(), seed: Some(21), fast: true, ..Default::default() };
    cfg.data.synth = Some(SynthSpec { rows: 3000, separation: 1.0, stickiness: 0.9, ..SynthSpec::default() });
    cfg.arch.lstm = Architecture { kind: ModelKind::Lstm, hidden: vec![16], window: 3 };
    cfg.train = TrainConfig { max_epochs: 6, patience: 2, ..TrainConfig::default() };
    cfg.shap = ShapConfig { background_count: 10, eval_count: 20, ..ShapConfig::default() };
    cfg.validate()?;

    let report = stage_bench(&cfg, &RunDir::new(&root))?;
    println!("{}", report.to_markdown()?);
    println!("artifacts under {}", root.display());
    Ok(())
}
