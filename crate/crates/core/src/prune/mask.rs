use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Network;

/// Keep-flags for one prunable tensor, row-major like the tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorMask {
    pub shape: Vec<usize>,
    pub keep: Vec<bool>,
}

impl TensorMask {
    pub fn dense(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, keep: vec![true; n] }
    }

    pub fn pruned(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }

    pub fn sparsity(&self) -> f64 {
        if self.keep.is_empty() {
            0.0
        } else {
            self.pruned() as f64 / self.keep.len() as f64
        }
    }

    /// True when every weight pruned by `other` is also pruned here.
    pub fn contains(&self, other: &TensorMask) -> bool {
        self.shape == other.shape && self.keep.iter().zip(&other.keep).all(|(a, b)| *b || !*a)
    }
}

/// Masks aligned with a network's `tensors()` order; `None` for tensors
/// that are never pruned (biases).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityMask {
    pub masks: Vec<Option<TensorMask>>,
}

impl SparsityMask {
    /// Nothing pruned yet.
    pub fn dense<N: Network>(net: &N) -> Self {
        Self { masks: net.tensors().iter().map(|t| t.prunable.then(|| TensorMask::dense(t.shape.clone()))).collect() }
    }

    pub fn check<N: Network>(&self, net: &N) -> Result<()> {
        let tensors = net.tensors();
        if tensors.len() != self.masks.len() {
            return Err(Error::dims("mask tensor count", tensors.len(), self.masks.len()));
        }
        for (t, m) in tensors.iter().zip(&self.masks) {
            if let Some(m) = m {
                if m.shape != t.shape || m.keep.len() != t.data.len() {
                    return Err(Error::InvalidModel(format!("mask shape {:?} does not match {} {:?}", m.shape, t.name, t.shape)));
                }
            }
        }
        Ok(())
    }

    /// Zeroes every masked weight.
    pub fn apply<N: Network>(&self, net: &mut N) {
        for (t, m) in net.tensors_mut().into_iter().zip(&self.masks) {
            if let Some(m) = m {
                for (v, k) in t.iter_mut().zip(&m.keep) {
                    if !k {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    pub fn zero_gradients(&self, grads: &mut [Vec<f64>]) {
        for (g, m) in grads.iter_mut().zip(&self.masks) {
            if let Some(m) = m {
                for (v, k) in g.iter_mut().zip(&m.keep) {
                    if !k {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// Pruned fraction over all prunable weights.
    pub fn sparsity(&self) -> f64 {
        let (mut pruned, mut total) = (0usize, 0usize);
        for m in self.masks.iter().flatten() {
            pruned += m.pruned();
            total += m.keep.len();
        }
        if total == 0 {
            0.0
        } else {
            pruned as f64 / total as f64
        }
    }

    pub fn contains(&self, other: &SparsityMask) -> bool {
        self.masks.len() == other.masks.len()
            && self.masks.iter().zip(&other.masks).all(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => a.contains(b),
                (None, None) => true,
                _ => false,
            })
    }

    /// Grows every prunable tensor's mask to `target` sparsity by magnitude.
    pub fn grow<N: Network>(&self, net: &N, target: f64) -> Result<SparsityMask> {
        self.check(net)?;
        let mut masks = Vec::with_capacity(self.masks.len());
        for (t, prior) in net.tensors().iter().zip(&self.masks) {
            masks.push(match prior {
                Some(p) => Some(TensorMask { shape: p.shape.clone(), keep: compute_mask(t.data, target, Some(&p.keep))? }),
                None => None,
            });
        }
        Ok(SparsityMask { masks })
    }
}

/// Keep-flags pruning the `round(target * len)` smallest-magnitude weights.
///
/// Weights already pruned by `prior` are taken first, so the result is a
/// superset of the prior; remaining ties go to the lower flat index.
pub fn compute_mask(weights: &[f64], target: f64, prior: Option<&[bool]>) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::InvalidSparsity(target));
    }
    let n = weights.len();
    let k = (target * n as f64).round() as usize;
    let was_pruned = |i: usize| prior.is_some_and(|p| !p[i]);
    if let Some(p) = prior {
        if p.len() != n {
            return Err(Error::dims("prior mask", n, p.len()));
        }
        let already = p.iter().filter(|k| !**k).count();
        if already > k {
            return Err(Error::InvalidSparsity(target));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        was_pruned(b)
            .cmp(&was_pruned(a))
            .then(weights[a].abs().total_cmp(&weights[b].abs()))
            .then(a.cmp(&b))
    });
    let mut keep = vec![true; n];
    for &i in &order[..k] {
        keep[i] = false;
    }
    Ok(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_magnitudes_pruned() {
        let keep = compute_mask(&[1.0, -5.0, 0.1, 3.0], 0.5, None).unwrap();
        assert_eq!(keep, vec![false, true, false, true]);
    }

    #[test]
    fn zero_target_is_identity() {
        assert!(compute_mask(&[0.0, 1.0, -2.0], 0.0, None).unwrap().iter().all(|k| *k));
    }

    #[test]
    fn same_target_keeps_prior() {
        let w = [0.3, -0.1, 0.9, 0.05, 2.0];
        // prior prunes two large weights; re-requesting 40% must not move them
        let prior = [true, true, false, true, false];
        assert_eq!(compute_mask(&w, 0.4, Some(&prior)).unwrap(), prior.to_vec());
    }

    #[test]
    fn ties_break_by_index() {
        assert_eq!(compute_mask(&[1.0, -1.0, 1.0, 1.0], 0.5, None).unwrap(), vec![false, false, true, true]);
    }

    #[test]
    fn bad_targets() {
        assert!(matches!(compute_mask(&[1.0], 1.0, None), Err(Error::InvalidSparsity(_))));
        assert!(compute_mask(&[1.0], -0.1, None).is_err());
        assert!(compute_mask(&[1.0, 2.0], 0.0, Some(&[false, true])).is_err());
    }

    proptest! {
        #[test]
        fn superset_count_and_scale_invariance(w in prop::collection::vec(-10.0f64..10.0, 1..80), a in 0.0f64..0.99, b in 0.0f64..0.99, c in 0.01f64..100.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let first = compute_mask(&w, lo, None).unwrap();
            let second = compute_mask(&w, hi, Some(&first)).unwrap();
            prop_assert_eq!(second.iter().filter(|k| !**k).count(), (hi * w.len() as f64).round() as usize);
            for (s, f) in second.iter().zip(&first) {
                prop_assert!(*f || !*s);
            }
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            prop_assert_eq!(compute_mask(&scaled, hi, Some(&first)).unwrap(), second);
        }
    }
}
