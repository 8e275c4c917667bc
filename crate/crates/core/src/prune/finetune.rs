use super::mask::SparsityMask;
use super::schedule::PruneSchedule;
use crate::error::Result;
use crate::nn::{train, History, Network, SampleSet, TrainConfig};

/// Mask state recorded at one pruning event.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneEvent {
    pub step: u64,
    pub target: f64,
    pub mask: SparsityMask,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome<N> {
    pub net: N,
    pub mask: SparsityMask,
    pub history: History,
    pub events: Vec<PruneEvent>,
}

/// Gradual magnitude pruning of a trained network.
///
/// Epochs before `start_step` train unmasked. At each event the masks grow to
/// the scheduled sparsity and the network fine-tunes for `frequency` epochs
/// (the last event is followed by `recovery_epochs` with early stopping
/// instead).
pub fn prune_and_finetune<N: Network>(
    net: N,
    train_set: &SampleSet,
    val: Option<&SampleSet>,
    cfg: &TrainConfig,
    sched: &PruneSchedule,
) -> Result<PruneOutcome<N>> {
    sched.validate()?;
    cfg.validate()?;
    let mut net = net;
    let mut history = History::default();
    let mut mask = SparsityMask::dense(&net);
    let mut events = Vec::new();
    let mut segment = 0u64;
    let mut fit = |net: N, epochs: usize, mask: &SparsityMask, history: &mut History| -> Result<N> {
        if epochs == 0 {
            return Ok(net);
        }
        segment += 1;
        let seg_cfg = cfg.segment(epochs, cfg.seed.wrapping_add(segment));
        let (net, h) = train(net, train_set, val, &seg_cfg, Some(mask))?;
        history.extend(h);
        Ok(net)
    };

    if sched.start_step > 0 {
        net = fit(net, sched.start_step as usize, &mask, &mut history)?;
    }
    let steps = sched.event_steps();
    for (k, &step) in steps.iter().enumerate() {
        let target = sched.sparsity_at(step as f64);
        mask = mask.grow(&net, target)?;
        mask.apply(&mut net);
        log::info!("prune event {k} at step {step}: sparsity {target:.4}");
        events.push(PruneEvent { step, target, mask: mask.clone() });
        let epochs = if k + 1 < steps.len() { sched.frequency as usize } else { sched.recovery_epochs };
        net = fit(net, epochs, &mask, &mut history)?;
    }
    Ok(PruneOutcome { net, mask, history, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{evaluate, MlpParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable(n: usize, seed: u64) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 3;
            let centre = [(-3.0, 0.0), (3.0, 0.0), (0.0, 4.0)][c];
            inputs.push(centre.0 + rng.random_range(-1.0..1.0));
            inputs.push(centre.1 + rng.random_range(-1.0..1.0));
            for _ in 0..4 {
                inputs.push(rng.random_range(-1.0..1.0));
            }
            labels.push(c);
        }
        SampleSet::new(6, 3, inputs, labels).unwrap()
    }

    #[test]
    fn reaches_target_monotonically_and_keeps_accuracy() {
        let (tr, va) = (separable(600, 1), separable(150, 2));
        let cfg = TrainConfig { max_epochs: 20, patience: 5, seed: 3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (dense, _) = train(MlpParams::init(6, &[32, 16], 3, &mut rng), &tr, Some(&va), &cfg, None).unwrap();
        let dense_acc = evaluate(&dense, &va).1;
        let out = prune_and_finetune(dense, &tr, Some(&va), &cfg, &PruneSchedule::default()).unwrap();

        for (t, m) in out.net.tensors().iter().zip(&out.mask.masks) {
            if let Some(m) = m {
                let zeros = t.data.iter().filter(|v| **v == 0.0).count();
                let expected = (0.65 * t.data.len() as f64).round() as usize;
                assert_eq!(m.pruned(), expected, "{}", t.name);
                assert!(zeros >= expected && zeros <= expected + 1, "{}: {zeros} zeros", t.name);
                for (v, k) in t.data.iter().zip(&m.keep) {
                    assert!(*k || *v == 0.0);
                }
            }
        }
        for pair in out.events.windows(2) {
            assert!(pair[1].mask.contains(&pair[0].mask));
        }
        let acc = evaluate(&out.net, &va).1;
        assert!(acc >= dense_acc - 0.01, "pruned {acc} vs dense {dense_acc}");
    }
}
