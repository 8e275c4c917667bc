//! Generates a synthetic flow table, prints its class balance and runs the
//! preprocessing chain on it.
//!
//! cargo run --example synthetic_flows

use sparsebench::dataflow::{class_shares, preprocess, synth_generate_stream, PreprocessConfig, SynthSpec};

fn main() -> sparsebench::Result<()> {
    let spec = SynthSpec { rows: 5000, stickiness: 0.9, ..SynthSpec::default() };
    let train = synth_generate_stream(&spec, 42, 0)?;
    let test = synth_generate_stream(&SynthSpec { rows: 1250, ..spec.clone() }, 42, 1)?;
    let mapping = spec.label_mapping();

    for (name, share) in mapping.classes.iter().zip(class_shares(&train, &mapping)?) {
        println!("{name:>7}: {:5.2}%", 100.0 * share);
    }
    println!("informative columns: {:?}", spec.signal_columns(42));

    let p = preprocess(&train, Some(&test), &mapping, &PreprocessConfig::default())?;
    println!(
        "{} features kept ({} degenerate, {} correlated removed)",
        p.features.len(),
        p.removed_degenerate.len(),
        p.removed_correlated.len()
    );
    println!("train {} / val {} / test {} rows", p.train.len(), p.val.len(), p.test.map_or(0, |t| t.len()));
    Ok(())
}
