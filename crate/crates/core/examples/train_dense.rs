//! Trains the default MLP and a small LSTM on a synthetic fixture and prints
//! the validation curve.
//!
//! cargo run --release --example train_dense

use sparsebench::dataflow::{preprocess, synth_generate, PreprocessConfig, SynthSpec};
use sparsebench::nn::{train, Architecture, ModelKind, TrainConfig};

fn main() -> sparsebench::Result<()> {
    let spec = SynthSpec { rows: 4000, separation: 1.0, ..SynthSpec::default() };
    let p = preprocess(&synth_generate(&spec, 1)?, None, &spec.label_mapping(), &PreprocessConfig::default())?;
    let cfg = TrainConfig { max_epochs: 8, patience: 3, seed: 1, ..TrainConfig::default() };

    let lstm = Architecture { kind: ModelKind::Lstm, hidden: vec![16], window: 3 };
    for arch in [Architecture::mlp_default(), lstm] {
        let net = arch.build(p.train.n_features(), p.train.n_classes(), 1);
        let (_, history) = train(net, &arch.samples(&p.train), Some(&arch.samples(&p.val)), &cfg, None)?;
        println!("{:?} {:?}", arch.kind, arch.hidden);
        for e in &history.epochs {
            println!("  epoch {:2}  train loss {:.4}  val loss {:.4}  val acc {:.4}", e.epoch, e.train_loss, e.val_loss, e.val_accuracy);
        }
        println!("  kept epoch {:?}", history.best_epoch);
    }
    Ok(())
}
