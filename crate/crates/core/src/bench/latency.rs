use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Latency {
    /// Median over repeats of the mean per-sample time.
    pub ms_per_sample: f64,
    pub repeats_ms: Vec<f64>,
    /// Timed calls per repeat.
    pub count: usize,
}

impl Latency {
    /// Population standard deviation across repeats.
    pub fn spread(&self) -> f64 {
        let n = self.repeats_ms.len() as f64;
        let mean = self.repeats_ms.iter().sum::<f64>() / n;
        (self.repeats_ms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }

    pub fn write_raw_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["repeat", "samples", "ms_per_sample"])?;
        for (i, v) in self.repeats_ms.iter().enumerate() {
            w.write_record([i.to_string(), self.count.to_string(), format!("{v:.9}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyConfig {
    pub fraction: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self { fraction: 0.10, repeats: 3, seed: 0 }
    }
}

/// Row indices timed for `n` inputs: a seeded uniform sample of
/// `ceil(fraction * n)` rows.
pub fn latency_rows(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let count = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, count).into_vec();
    idx.sort_unstable();
    idx
}

/// Times single-sample calls of `infer` on the selected rows. One untimed
/// warm-up pass precedes `repeats` timed passes; the median is reported.
pub fn measure_latency<T>(inputs: &[Vec<f32>], cfg: &LatencyConfig, mut infer: impl FnMut(&[f32]) -> T) -> Result<Latency> {
    if inputs.is_empty() {
        return Err(Error::Empty("latency inputs".into()));
    }
    if !(cfg.fraction > 0.0 && cfg.fraction <= 1.0) || cfg.repeats == 0 {
        return Err(Error::Config(vec![format!("latency fraction {} / repeats {}", cfg.fraction, cfg.repeats)]));
    }
    let rows = latency_rows(inputs.len(), cfg.fraction, cfg.seed);
    for &r in &rows {
        black_box(infer(black_box(&inputs[r])));
    }
    let mut repeats_ms = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        for &r in &rows {
            black_box(infer(black_box(&inputs[r])));
        }
        repeats_ms.push(start.elapsed().as_secs_f64() * 1e3 / rows.len() as f64);
    }
    let mut sorted = repeats_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 };
    Ok(Latency { ms_per_sample: median, repeats_ms, count: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fraction_times_every_row() {
        let inputs: Vec<Vec<f32>> = (0..10).map(|i| vec![i as f32]).collect();
        let mut calls = 0;
        let cfg = LatencyConfig { fraction: 1.0, repeats: 3, seed: 1 };
        let l = measure_latency(&inputs, &cfg, |x| {
            calls += 1;
            x[0]
        })
        .unwrap();
        assert_eq!(l.count, 10);
        // warm-up plus three timed passes
        assert_eq!(calls, 40);
        assert_eq!(l.repeats_ms.len(), 3);
    }

    #[test]
    fn reports_the_median_repeat() {
        let inputs = vec![vec![0.0f32]; 20];
        let l = measure_latency(&inputs, &LatencyConfig { fraction: 0.5, repeats: 5, seed: 2 }, |x| x.len()).unwrap();
        let mut s = l.repeats_ms.clone();
        s.sort_by(f64::total_cmp);
        assert_eq!(l.ms_per_sample, s[2]);
        assert!(l.spread() >= 0.0);
    }

    #[test]
    fn sample_size_and_determinism() {
        assert_eq!(latency_rows(1000, 0.1, 4).len(), 100);
        assert_eq!(latency_rows(95, 0.1, 4).len(), 10);
        assert_eq!(latency_rows(3, 0.1, 4).len(), 1);
        assert_eq!(latency_rows(500, 0.1, 7), latency_rows(500, 0.1, 7));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(measure_latency(&[], &LatencyConfig::default(), |x: &[f32]| x.len()).is_err());
        let inputs = vec![vec![0.0f32]];
        assert!(measure_latency(&inputs, &LatencyConfig { fraction: 0.0, ..Default::default() }, |x| x.len()).is_err());
    }
}
