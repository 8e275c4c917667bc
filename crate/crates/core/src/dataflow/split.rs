use std::collections::BTreeMap;

use super::dataset::Dataset;
use super::table::FlowTable;
use crate::error::{Error, Result};

/// Converts a labelled, fully numeric table into a dataset.
pub fn to_dataset(t: &FlowTable) -> Result<Dataset> {
    let classes = t.classes().ok_or_else(|| Error::Empty("coarse labels (run map_labels first)".into()))?;
    select_rows(t, classes, &(0..t.len()).collect::<Vec<_>>())
}

fn select_rows(t: &FlowTable, classes: &[usize], rows: &[usize]) -> Result<Dataset> {
    for c in t.columns() {
        if rows.iter().any(|&i| !c.values[i].is_finite()) {
            return Err(Error::NonFinite(format!("column `{}`", c.name)));
        }
    }
    let mut features = Vec::with_capacity(rows.len() * t.n_columns());
    for &i in rows {
        features.extend(t.columns().iter().map(|c| c.values[i]));
    }
    Dataset::new(
        features,
        rows.iter().map(|&i| classes[i]).collect(),
        t.column_names(),
        t.class_names().to_vec(),
    )
}

/// Row indices of the chronological validation split: within every
/// detailed-label group the last `ceil(frac * size)` rows (by `order_key`)
/// are validation. Groups with fewer than two rows stay in training.
pub fn validation_rows(t: &FlowTable, frac: f64) -> (Vec<usize>, Vec<usize>) {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in t.raw_labels().iter().enumerate() {
        groups.entry(l.as_str()).or_default().push(i);
    }
    let keys = t.order_key();
    let mut is_val = vec![false; t.len()];
    for (label, mut rows) in groups {
        if rows.len() < 2 {
            log::warn!("label group `{label}` has {} row(s); kept entirely in training", rows.len());
            continue;
        }
        rows.sort_by_key(|&i| keys[i]);
        // guard against 0.2 * 10 = 2.0000000000000004
        let n_val = ((frac * rows.len() as f64) - 1e-9).ceil().max(0.0) as usize;
        for &i in &rows[rows.len() - n_val.min(rows.len())..] {
            is_val[i] = true;
        }
    }
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    let (val, train): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| is_val[i]);
    (train, val)
}

/// Splits a labelled table into chronological train / validation datasets.
pub fn split_validation(t: &FlowTable, frac: f64) -> Result<(Dataset, Dataset)> {
    let classes = t.classes().ok_or_else(|| Error::Empty("coarse labels (run map_labels first)".into()))?;
    let (train, val) = validation_rows(t, frac);
    Ok((select_rows(t, classes, &train)?, select_rows(t, classes, &val)?))
}
