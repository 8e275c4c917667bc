//! Flow-record ingestion and preprocessing.
//!
//! CSV flow features are loaded into a [`FlowTable`], labelled with coarse
//! classes, cleaned (degenerate columns, nominal encoding, correlated
//! features) and split chronologically into [`Dataset`]s.

mod dataset;
mod preprocess;
mod split;
mod synth;
mod table;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use dataset::Dataset;
pub use preprocess::{
    correlated_columns, degenerate_columns, drop_degenerate, encode_nominal, impute_median, map_labels,
    pearson, prune_correlated, LabelMapping, DEFAULT_CLASSES,
};
pub use split::{split_validation, to_dataset, validation_rows};
pub use synth::{synth_generate, synth_generate_stream, SynthSpec};
pub use table::{load_csv, merge_chronological, Column, FlowTable};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub label_column: String,
    /// Columns removed up front (timestamps, addresses, identifiers).
    pub drop_columns: Vec<String>,
    pub nominal_columns: Vec<String>,
    pub missing_threshold: f64,
    pub correlation_threshold: f64,
    pub validation_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            drop_columns: Vec::new(),
            nominal_columns: Vec::new(),
            missing_threshold: 0.99,
            correlation_threshold: 0.95,
            validation_fraction: 0.2,
        }
    }
}

/// Output of [`preprocess`].
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Option<Dataset>,
    pub features: Vec<String>,
    pub removed_degenerate: Vec<String>,
    pub removed_correlated: Vec<String>,
}

fn removals(t: &FlowTable, cfg: &PreprocessConfig) -> Result<(Vec<String>, Vec<String>)> {
    let degenerate = degenerate_columns(t, cfg.missing_threshold);
    let cleaned = drop_degenerate(t, cfg.missing_threshold)?;
    let (_, correlated) = prune_correlated(&cleaned, cfg.correlation_threshold)?;
    Ok((degenerate, correlated))
}

/// Full preprocessing of a training table and optional test table.
///
/// Column removals are decided on each table separately and their union is
/// removed from both so the two end with identical feature columns.
pub fn preprocess(
    train: &FlowTable,
    test: Option<&FlowTable>,
    mapping: &LabelMapping,
    cfg: &PreprocessConfig,
) -> Result<Prepared> {
    let stage = |t: &FlowTable| -> Result<FlowTable> {
        let t = t.drop_columns(&cfg.drop_columns);
        let t = map_labels(&t, mapping)?;
        encode_nominal(&t, &cfg.nominal_columns)
    };
    let train_t = stage(train)?;
    let test_t = test.map(stage).transpose()?;

    let (mut degenerate, mut correlated) = removals(&train_t, cfg)?;
    if let Some(tt) = &test_t {
        let (d, c) = removals(tt, cfg)?;
        degenerate.extend(d);
        correlated.extend(c);
    }
    let dedup = |v: Vec<String>| -> Vec<String> {
        let mut seen = BTreeSet::new();
        v.into_iter().filter(|s| seen.insert(s.clone())).collect()
    };
    let degenerate = dedup(degenerate);
    let correlated: Vec<String> = dedup(correlated).into_iter().filter(|c| !degenerate.contains(c)).collect();

    let features: Vec<String> = train_t
        .column_names()
        .into_iter()
        .filter(|n| !degenerate.contains(n) && !correlated.contains(n))
        .collect();
    if features.is_empty() {
        return Err(crate::Error::AllColumnsRemoved);
    }
    let train_t = impute_median(&train_t.select_columns(&features)?);
    let (train_ds, val_ds) = split_validation(&train_t, cfg.validation_fraction)?;
    let test_ds = match test_t {
        Some(tt) => Some(to_dataset(&impute_median(&tt.select_columns(&features)?))?),
        None => None,
    };
    Ok(Prepared {
        train: train_ds,
        val: val_ds,
        test: test_ds,
        features,
        removed_degenerate: degenerate,
        removed_correlated: correlated,
    })
}

/// Per-class share of rows after label mapping, in class-index order.
pub fn class_shares(t: &FlowTable, mapping: &LabelMapping) -> Result<Vec<f64>> {
    let mapped = map_labels(t, mapping)?;
    let mut counts = vec![0usize; mapping.classes.len()];
    for &c in mapped.classes().unwrap_or(&[]) {
        counts[c] += 1;
    }
    let n = t.len().max(1) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_pipeline_keeps_all_generated_features() {
        let spec = SynthSpec { rows: 3000, ..Default::default() };
        let train = synth_generate(&spec, 5).unwrap();
        let test = synth_generate(&spec, 6).unwrap();
        let p = preprocess(&train, Some(&test), &spec.label_mapping(), &PreprocessConfig::default()).unwrap();
        assert_eq!(p.features.len(), 49);
        assert!(p.train.invariant_violations(0.95).is_empty());
        assert_eq!(p.train.len() + p.val.len(), 3000);
        assert_eq!(p.test.as_ref().unwrap().n_features(), 49);
    }

    #[test]
    fn removals_are_applied_to_both_tables() {
        let spec = SynthSpec { rows: 400, feature_count: 5, signal_count: 2, ..Default::default() };
        let mut train = synth_generate(&spec, 1).unwrap();
        let test = synth_generate(&spec, 2).unwrap();
        // make f00 constant only in the training table
        for v in train.columns[0].values.iter_mut() {
            *v = 1.0;
        }
        let p = preprocess(&train, Some(&test), &spec.label_mapping(), &PreprocessConfig::default()).unwrap();
        assert_eq!(p.removed_degenerate, vec!["f00"]);
        assert_eq!(p.test.unwrap().feature_names(), p.train.feature_names());
    }
}
