use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy plus support-weighted precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn in_unit_range(&self) -> bool {
        [self.accuracy, self.precision, self.recall, self.f1].iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// `counts[truth][pred]` over `n_classes` classes.
pub fn confusion(pred: &[usize], truth: &[usize], n_classes: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        c[t][p] += 1;
    }
    c
}

/// Classes with zero predictions or zero support contribute 0 to the
/// corresponding per-class score.
pub fn compute_metrics(pred: &[usize], truth: &[usize]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(Error::Empty("prediction set".into()));
    }
    let k = pred.iter().chain(truth).max().map_or(0, |m| m + 1);
    let c = confusion(pred, truth, k);
    let n = truth.len() as f64;
    let (mut precision, mut recall, mut f1, mut correct) = (0.0, 0.0, 0.0, 0u64);
    for j in 0..k {
        let tp = c[j][j];
        correct += tp;
        let support: u64 = c[j].iter().sum();
        let predicted: u64 = c.iter().map(|row| row[j]).sum();
        if support == 0 {
            continue;
        }
        let p = if predicted == 0 {
            log::warn!("class {j} was never predicted; precision taken as 0");
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let r = tp as f64 / support as f64;
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let w = support as f64 / n;
        precision += w * p;
        recall += w * r;
        f1 += w * f;
    }
    Ok(Metrics { accuracy: correct as f64 / n, precision, recall, f1 })
}
