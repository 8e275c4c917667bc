use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::table::{Column, FlowTable};
use crate::error::{Error, Result};

pub const DEFAULT_CLASSES: [&str; 3] = ["Benign", "Recon", "DoS"];

/// Detailed attack label -> coarse class name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMapping {
    /// Coarse class names; position is the class index.
    #[serde(default = "default_classes")]
    pub classes: Vec<String>,
    pub labels: BTreeMap<String, String>,
}

fn default_classes() -> Vec<String> {
    DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect()
}

impl LabelMapping {
    pub fn new(pairs: &[(&str, &str)]) -> Self {
        Self {
            classes: default_classes(),
            labels: pairs.iter().map(|(d, c)| (d.to_string(), c.to_string())).collect(),
        }
    }

    pub fn class_of(&self, detailed: &str) -> Result<usize> {
        let coarse = self.labels.get(detailed).ok_or_else(|| Error::UnmappedLabel(detailed.to_string()))?;
        self.classes
            .iter()
            .position(|c| c == coarse)
            .ok_or_else(|| Error::UnmappedLabel(format!("{detailed} -> {coarse}")))
    }
}

/// Attaches the coarse class of every row. Detailed labels are kept since
/// the validation split groups by them.
pub fn map_labels(t: &FlowTable, m: &LabelMapping) -> Result<FlowTable> {
    let classes = t.raw_labels.iter().map(|l| m.class_of(l)).collect::<Result<Vec<_>>>()?;
    let mut out = t.clone();
    out.classes = Some(classes);
    out.class_names = m.classes.clone();
    Ok(out)
}

fn median_of(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn is_constant(values: &[f64]) -> bool {
    let mut it = values.iter().filter(|x| !x.is_nan());
    match it.next() {
        None => true,
        Some(first) => it.all(|x| x == first),
    }
}

/// Replaces remaining missing cells with the column median.
pub fn impute_median(t: &FlowTable) -> FlowTable {
    let mut out = t.clone();
    for c in &mut out.columns {
        if let Some(m) = median_of(&c.values) {
            for v in c.values.iter_mut().filter(|v| v.is_nan()) {
                *v = m;
            }
        }
    }
    out
}

/// Names of columns that are mostly missing (> `missing_threshold`) or hold
/// a single distinct value.
pub fn degenerate_columns(t: &FlowTable, missing_threshold: f64) -> Vec<String> {
    t.columns
        .iter()
        .filter(|c| c.missing_fraction() > missing_threshold || is_constant(&c.values))
        .map(|c| c.name.clone())
        .collect()
}

/// Drops mostly-missing and constant columns, then median-imputes the rest.
pub fn drop_degenerate(t: &FlowTable, missing_threshold: f64) -> Result<FlowTable> {
    if t.is_empty() {
        return Err(Error::Empty("flow table".into()));
    }
    let out = t.drop_columns(&degenerate_columns(t, missing_threshold));
    if out.n_columns() == 0 {
        return Err(Error::AllColumnsRemoved);
    }
    Ok(impute_median(&out))
}

/// Label-encodes the listed columns: codes follow lexicographic order of the
/// distinct non-empty strings. Missing cells stay missing.
pub fn encode_nominal(t: &FlowTable, nominal_columns: &[String]) -> Result<FlowTable> {
    let mut out = t.clone();
    for name in nominal_columns {
        let col = out
            .columns
            .iter_mut()
            .find(|c| &c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        let text: Vec<String> = match col.text.take() {
            Some(t) => t,
            None => col.values.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v}") }).collect(),
        };
        let vocab: BTreeSet<&str> = text.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
        let codes: BTreeMap<&str, usize> = vocab.into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        col.values = text
            .iter()
            .map(|s| codes.get(s.as_str()).map_or(f64::NAN, |&c| c as f64))
            .collect();
    }
    Ok(out)
}

/// Pearson correlation over rows where both values are present.
/// Returns 0 when fewer than two complete pairs exist or either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (mut n, mut sa, mut sb) = (0usize, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            n += 1;
            sa += x;
            sb += y;
        }
    }
    if n < 2 {
        return 0.0;
    }
    let (ma, mb) = (sa / n as f64, sb / n as f64);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            let (dx, dy) = (x - ma, y - mb);
            cov += dx * dy;
            va += dx * dx;
            vb += dy * dy;
        }
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

/// Columns to remove so that no remaining pair has |rho| > `threshold`.
///
/// Each feature is scored by how many over-threshold pairs it appears in.
/// Pairs are visited by descending max score of their two members; the
/// member with the higher score survives (ties keep the earlier column).
pub fn correlated_columns(columns: &[Column], threshold: f64) -> Vec<usize> {
    let d = columns.len();
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let r = pearson(&columns[i].values, &columns[j].values);
            if r.abs() > threshold {
                pairs.push((i, j));
            }
        }
    }
    let mut count = vec![0usize; d];
    for &(i, j) in &pairs {
        count[i] += 1;
        count[j] += 1;
    }
    // stable: ties keep (i, j) lexicographic order
    pairs.sort_by_key(|&(i, j)| std::cmp::Reverse(count[i].max(count[j])));
    let mut removed = vec![false; d];
    for (i, j) in pairs {
        if removed[i] || removed[j] {
            continue;
        }
        if count[j] > count[i] {
            removed[i] = true;
        } else {
            removed[j] = true;
        }
    }
    (0..d).filter(|&i| removed[i]).collect()
}

/// Removes one member of every highly correlated feature pair.
pub fn prune_correlated(t: &FlowTable, threshold: f64) -> Result<(FlowTable, Vec<String>)> {
    if t.len() < 2 {
        return Err(Error::TooFewRows { needed: 2, found: t.len() });
    }
    let removed: Vec<String> =
        correlated_columns(&t.columns, threshold).into_iter().map(|i| t.columns[i].name.clone()).collect();
    Ok((t.drop_columns(&removed), removed))
}
