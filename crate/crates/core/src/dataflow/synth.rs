use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::preprocess::{LabelMapping, DEFAULT_CLASSES};
use super::table::{Column, FlowTable};
use crate::error::{Error, Result};

/// Synthetic flow-table generator settings.
///
/// `signal_count` features have class-dependent means; the others are
/// class-independent noise with per-column scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub rows: usize,
    pub feature_count: usize,
    pub signal_count: usize,
    pub priors: Vec<f64>,
    pub class_names: Vec<String>,
    /// Detailed labels per class; each row picks one uniformly.
    pub detailed_labels: Vec<Vec<String>>,
    /// Distance (in noise standard deviations) between adjacent class means.
    pub separation: f64,
    /// Probability that a row repeats the previous row's class.
    pub stickiness: f64,
    /// Range of the standard deviation of each noise column.
    pub noise_scale: [f64; 2],
}

impl Default for SynthSpec {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            rows: 20_000,
            feature_count: 49,
            signal_count: 10,
            priors: vec![0.25, 0.25, 0.5],
            class_names: s(&DEFAULT_CLASSES),
            detailed_labels: vec![
                s(&["benign"]),
                s(&["recon-port-scan", "recon-os-fingerprint", "recon-service-detection"]),
                s(&["dos-syn-flood", "dos-icmp-flood", "dos-tcp-flood"]),
            ],
            separation: 2.0,
            stickiness: 0.0,
            noise_scale: [0.5, 2.0],
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.priors.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.priors.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidPriors(sum));
        }
        if self.priors.len() != self.class_names.len() || self.detailed_labels.len() != self.class_names.len() {
            return Err(Error::dims("synthetic classes", self.class_names.len(), self.priors.len()));
        }
        if self.detailed_labels.iter().any(Vec::is_empty) {
            return Err(Error::Empty("detailed labels for a class".into()));
        }
        if self.signal_count > self.feature_count {
            return Err(Error::dims("signal features", self.feature_count, self.signal_count));
        }
        let [lo, hi] = self.noise_scale;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Parse(format!("noise_scale [{lo}, {hi}] must satisfy 0 < lo <= hi")));
        }
        if !(0.0..1.0).contains(&self.stickiness) {
            return Err(Error::Parse(format!("stickiness {} outside [0, 1)", self.stickiness)));
        }
        Ok(())
    }

    /// Column indices that carry class signal for this seed.
    pub fn signal_columns(&self, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5167_4e41_4c00_0000);
        let mut idx: Vec<usize> = (0..self.feature_count).collect();
        idx.shuffle(&mut rng);
        let mut sig = idx[..self.signal_count].to_vec();
        sig.sort_unstable();
        sig
    }

    /// Mapping from every detailed label to its class.
    pub fn label_mapping(&self) -> LabelMapping {
        let mut labels = std::collections::BTreeMap::new();
        for (c, ls) in self.detailed_labels.iter().enumerate() {
            for l in ls {
                labels.insert(l.clone(), self.class_names[c].clone());
            }
        }
        LabelMapping { classes: self.class_names.clone(), labels }
    }
}

fn draw_class(rng: &mut ChaCha8Rng, priors: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &p) in priors.iter().enumerate() {
        acc += p;
        if u < acc {
            return c;
        }
    }
    priors.len() - 1
}

/// Generates a deterministic synthetic flow table.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<FlowTable> {
    synth_generate_stream(spec, seed, 0)
}

/// Rows drawn from the class distributions fixed by `seed`, using sample
/// stream `stream`. Different streams give independent tables from the
/// same distribution (e.g. a training and a test table).
pub fn synth_generate_stream(spec: &SynthSpec, seed: u64, stream: u64) -> Result<FlowTable> {
    spec.validate()?;
    let signal = spec.signal_columns(seed);
    let k = spec.class_names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // per-feature class means: a shuffled ladder of levels, so every signal
    // column separates every pair of classes
    let mut means = vec![vec![0.0; spec.feature_count]; k];
    let mut scales = vec![1.0; spec.feature_count];
    for j in 0..spec.feature_count {
        if signal.binary_search(&j).is_ok() {
            let mut levels: Vec<f64> = (0..k).map(|l| l as f64 - (k as f64 - 1.0) / 2.0).collect();
            levels.shuffle(&mut rng);
            for c in 0..k {
                means[c][j] = spec.separation * (levels[c] + rng.random_range(-0.2..0.2));
            }
        } else {
            let [lo, hi] = spec.noise_scale;
            scales[j] = if lo == hi { lo } else { rng.random_range(lo..hi) };
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + 1);
    let mut cols = vec![Vec::with_capacity(spec.rows); spec.feature_count];
    let mut labels = Vec::with_capacity(spec.rows);
    let mut prev: Option<usize> = None;
    for _ in 0..spec.rows {
        let c = match prev {
            Some(p) if rng.random::<f64>() < spec.stickiness => p,
            _ => draw_class(&mut rng, &spec.priors),
        };
        prev = Some(c);
        let names = &spec.detailed_labels[c];
        labels.push(names[rng.random_range(0..names.len())].clone());
        for j in 0..spec.feature_count {
            let z: f64 = StandardNormal.sample(&mut rng);
            cols[j].push(means[c][j] + scales[j] * z);
        }
    }
    let width = spec.feature_count.to_string().len().max(2);
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| Column::numeric(format!("f{j:0width$}"), v))
        .collect();
    FlowTable::new(columns, labels, (0..spec.rows as u64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::table::load_csv;

    #[test]
    fn deterministic() {
        let spec = SynthSpec { rows: 200, ..Default::default() };
        assert_eq!(synth_generate(&spec, 1).unwrap(), synth_generate(&spec, 1).unwrap());
        assert_ne!(synth_generate(&spec, 1).unwrap(), synth_generate(&spec, 2).unwrap());
    }

    #[test]
    fn streams_share_the_distribution() {
        let spec = SynthSpec { rows: 4000, ..Default::default() };
        let a = synth_generate_stream(&spec, 3, 0).unwrap();
        let b = synth_generate_stream(&spec, 3, 1).unwrap();
        assert_ne!(a, b);
        let m = spec.label_mapping();
        let j = spec.signal_columns(3)[0];
        let class_mean = |t: &FlowTable, c: usize| {
            let v: Vec<f64> = t.columns()[j].values.iter().zip(t.raw_labels()).filter(|(_, l)| m.class_of(l).unwrap() == c).map(|(v, _)| *v).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        for c in 0..3 {
            assert!((class_mean(&a, c) - class_mean(&b, c)).abs() < 0.15);
        }
    }

    #[test]
    fn bad_priors() {
        let spec = SynthSpec { priors: vec![0.5, 0.5, 0.1], ..Default::default() };
        assert!(matches!(synth_generate(&spec, 1), Err(Error::InvalidPriors(_))));
    }

    #[test]
    fn class_shares_follow_priors() {
        let spec = SynthSpec { rows: 10_000, priors: vec![0.25, 0.5, 0.25], ..Default::default() };
        let t = synth_generate(&spec, 9).unwrap();
        let m = spec.label_mapping();
        let mut counts = [0usize; 3];
        for l in t.raw_labels() {
            counts[m.class_of(l).unwrap()] += 1;
        }
        // multinomial sd at n=10^4 is <= 0.5%; +-2% is four sd
        for (c, p) in counts.iter().zip(&spec.priors) {
            assert!((*c as f64 / 10_000.0 - p).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn only_signal_columns_depend_on_class() {
        let spec = SynthSpec { rows: 6000, ..Default::default() };
        let t = synth_generate(&spec, 4).unwrap();
        let m = spec.label_mapping();
        let classes: Vec<usize> = t.raw_labels().iter().map(|l| m.class_of(l).unwrap()).collect();
        let signal = spec.signal_columns(4);
        let mut independent = 0;
        for (j, col) in t.columns().iter().enumerate() {
            let mut sum = [0.0; 3];
            let mut n = [0.0; 3];
            for (v, &c) in col.values.iter().zip(&classes) {
                sum[c] += v;
                n[c] += 1.0;
            }
            let mu: Vec<f64> = (0..3).map(|c| sum[c] / n[c]).collect();
            let spread = mu.iter().cloned().fold(f64::MIN, f64::max) - mu.iter().cloned().fold(f64::MAX, f64::min);
            // standard error of a class mean is < 0.05 here; signal gaps are >= 1.2
            if spread < 0.3 {
                independent += 1;
                assert!(!signal.contains(&j));
            } else {
                assert!(signal.contains(&j));
            }
        }
        assert_eq!(independent, 39);
    }

    #[test]
    fn csv_round_trip() {
        let spec = SynthSpec { rows: 50, feature_count: 6, signal_count: 2, ..Default::default() };
        let t = synth_generate(&spec, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        t.write_csv(&p, "label").unwrap();
        let back = load_csv(&p, "label").unwrap();
        assert_eq!(back, t);
    }
}
