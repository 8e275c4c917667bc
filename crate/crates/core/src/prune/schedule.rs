use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic sparsity ramp from `initial_sparsity` to `final_sparsity` over
/// `events` pruning events spaced `frequency` epochs apart, starting at
/// epoch `start_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneSchedule {
    pub initial_sparsity: f64,
    pub final_sparsity: f64,
    pub start_step: u64,
    pub frequency: u64,
    pub events: u64,
    /// Fine-tuning epochs after the last event (early stopping applies).
    pub recovery_epochs: usize,
}

impl Default for PruneSchedule {
    fn default() -> Self {
        Self { initial_sparsity: 0.0, final_sparsity: 0.65, start_step: 0, frequency: 1, events: 10, recovery_epochs: 5 }
    }
}

impl PruneSchedule {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let (si, sf) = (self.initial_sparsity, self.final_sparsity);
        if !(si >= 0.0 && si <= sf && sf < 1.0) {
            v.push(format!("prune: need 0 <= initial_sparsity ({si}) <= final_sparsity ({sf}) < 1"));
        }
        if self.events == 0 {
            v.push("prune.events must be >= 1".into());
        }
        if self.frequency == 0 {
            v.push("prune.frequency must be >= 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(v.join("; ")))
        }
    }

    /// Last step of the ramp.
    pub fn end_step(&self) -> u64 {
        self.start_step + self.events * self.frequency
    }

    /// Steps at which masks are recomputed: `start + k*frequency`, k = 0..=events.
    pub fn event_steps(&self) -> Vec<u64> {
        (0..=self.events).map(|k| self.start_step + k * self.frequency).collect()
    }

    /// `s_f + (s_i - s_f) * (1 - (t - t0) / (n*dt))^3`, clamped to the ramp.
    pub fn sparsity_at(&self, t: f64) -> f64 {
        let t0 = self.start_step as f64;
        let span = (self.events * self.frequency) as f64;
        if t <= t0 {
            return self.initial_sparsity;
        }
        if t >= t0 + span {
            return self.final_sparsity;
        }
        let r = 1.0 - (t - t0) / span;
        self.final_sparsity + (self.initial_sparsity - self.final_sparsity) * r * r * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = PruneSchedule::default();
        assert_eq!(s.sparsity_at(0.0), 0.0);
        assert_eq!(s.sparsity_at(10.0), 0.65);
        assert!((s.sparsity_at(5.0) - 0.56875).abs() < 1e-12);
        assert_eq!(s.sparsity_at(-3.0), 0.0);
        assert_eq!(s.sparsity_at(99.0), 0.65);
        assert_eq!(s.event_steps().len(), 11);
    }

    #[test]
    fn invalid_schedules() {
        assert!(PruneSchedule { final_sparsity: 1.0, ..Default::default() }.validate().is_err());
        assert!(PruneSchedule { initial_sparsity: 0.7, ..Default::default() }.validate().is_err());
        let bad = PruneSchedule { events: 0, frequency: 0, ..Default::default() };
        assert_eq!(bad.violations().len(), 2);
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(si in 0.0f64..0.5, extra in 0.0f64..0.49, t0 in 0u64..20, dt in 1u64..5, n in 1u64..20, a in -5.0f64..150.0, b in -5.0f64..150.0) {
            let s = PruneSchedule { initial_sparsity: si, final_sparsity: si + extra, start_step: t0, frequency: dt, events: n, recovery_epochs: 0 };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (x, y) = (s.sparsity_at(lo), s.sparsity_at(hi));
            prop_assert!(x <= y + 1e-15);
            prop_assert!(x >= si - 1e-15 && y <= si + extra + 1e-15);
        }
    }
}
