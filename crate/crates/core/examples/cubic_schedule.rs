//! Prints the cubic sparsity ramp and prunes a trained MLP along it.
//!
//! cargo run --release --example cubic_schedule

use sparsebench::dataflow::{preprocess, synth_generate, PreprocessConfig, SynthSpec};
use sparsebench::nn::{train, Architecture, TrainConfig};
use sparsebench::prune::{prune_and_finetune, PruneSchedule};

fn main() -> sparsebench::Result<()> {
    let sched = PruneSchedule::default();
    for t in 0..=sched.end_step() {
        let s = sched.sparsity_at(t as f64);
        println!("step {t:2}  {s:.4}  {}", "#".repeat((s * 60.0).round() as usize));
    }

    let spec = SynthSpec { rows: 3000, ..SynthSpec::default() };
    let p = preprocess(&synth_generate(&spec, 3)?, None, &spec.label_mapping(), &PreprocessConfig::default())?;
    let arch = Architecture::mlp_default();
    let (tr, va) = (arch.samples(&p.train), arch.samples(&p.val));
    let cfg = TrainConfig { max_epochs: 6, seed: 3, ..TrainConfig::default() };
    let (net, _) = train(arch.build(p.train.n_features(), p.train.n_classes(), 3), &tr, Some(&va), &cfg, None)?;

    let out = prune_and_finetune(net, &tr, Some(&va), &cfg, &PruneSchedule { recovery_epochs: 2, ..sched })?;
    for e in &out.events {
        println!("event at step {:2}: target {:.4}, reached {:.4}", e.step, e.target, e.mask.sparsity());
    }
    let last = out.history.epochs.last().expect("fine-tuning ran");
    println!("final sparsity {:.4}, val acc {:.4}", out.mask.sparsity(), last.val_accuracy);
    Ok(())
}
