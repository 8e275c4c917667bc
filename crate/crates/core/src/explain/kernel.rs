use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lars::aic_select;
use crate::error::{Error, Result};

/// How background and evaluation rows are drawn from a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Random,
    Consecutive,
}

/// Feature preselection before the constrained regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularization {
    /// AIC-selected lasso when fewer than 20% of all coalitions are evaluated.
    #[default]
    Auto,
    /// Always select features by AIC along the lasso path.
    Aic,
    /// Regress on every varying feature.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapConfig {
    pub background_count: usize,
    pub eval_count: usize,
    /// Coalitions evaluated per instance; `None` means `2*M + 2048`.
    pub coalition_samples: Option<usize>,
    pub seed: u64,
    /// `None` picks random rows for MLPs and consecutive windows for LSTMs.
    pub sampling_mode: Option<SamplingMode>,
    pub regularization: Regularization,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            background_count: 100,
            eval_count: 1000,
            coalition_samples: None,
            seed: 0,
            sampling_mode: None,
            regularization: Regularization::Auto,
        }
    }
}

impl ShapConfig {
    /// Desk-scale settings: 200 evaluated instances.
    pub fn fast(self) -> Self {
        Self { eval_count: self.eval_count.min(200), ..self }
    }

    pub fn samples_for(&self, players: usize) -> usize {
        self.coalition_samples.unwrap_or(2 * players + 2048)
    }

    pub fn violations(&self, players: usize) -> Vec<String> {
        let mut v = Vec::new();
        if self.background_count == 0 {
            v.push("shap.background_count must be >= 1".into());
        }
        if self.eval_count == 0 {
            v.push("shap.eval_count must be >= 1".into());
        }
        if let Some(n) = self.coalition_samples {
            if n < players + 2 {
                v.push(format!("shap.coalition_samples ({n}) must be >= features + 2 ({})", players + 2));
            }
        }
        v
    }
}

/// Attributions for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    /// `phi[feature][class]`.
    pub phi: Vec<Vec<f64>>,
    /// Mean prediction over the background set.
    pub base: Vec<f64>,
    /// Prediction for the explained instance.
    pub fx: Vec<f64>,
}

impl Explanation {
    /// `sum_j phi[j][c] - (fx[c] - base[c])` for each class.
    pub fn additivity_gap(&self) -> Vec<f64> {
        (0..self.fx.len())
            .map(|c| self.phi.iter().map(|p| p[c]).sum::<f64>() - (self.fx[c] - self.base[c]))
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Calls `f` with every `size`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, size: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        let mut i = size;
        while i > 0 && idx[i - 1] == n - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Coalitions (as membership vectors over `m` players) with their kernel
/// weights. Small subset sizes are enumerated exhaustively while the budget
/// allows; the rest are sampled in complementary pairs.
pub(crate) fn coalitions(m: usize, budget: usize, rng: &mut impl Rng) -> Vec<(Vec<bool>, f64)> {
    let mut out: Vec<(Vec<bool>, f64)> = Vec::new();
    if m < 2 {
        return out;
    }
    let n_sizes = m / 2;
    let n_paired = (m - 1) / 2;
    let mut weight: Vec<f64> = (1..=n_sizes).map(|s| (m - 1) as f64 / (s * (m - s)) as f64).collect();
    for (i, w) in weight.iter_mut().enumerate() {
        if i < n_paired {
            *w *= 2.0;
        }
    }
    let total: f64 = weight.iter().sum();
    weight.iter_mut().for_each(|w| *w /= total);

    let mut remaining = weight.clone();
    let mut left = budget as f64;
    let mut full_sizes = 0;
    let membership = |idx: &[usize], complement: bool| {
        let mut z = vec![complement; m];
        for &i in idx {
            z[i] = !complement;
        }
        z
    };
    for s in 1..=n_sizes {
        let paired = s <= n_paired;
        let count = binomial(m, s) * if paired { 2.0 } else { 1.0 };
        if left * remaining[s - 1] / count < 1.0 - 1e-8 {
            break;
        }
        full_sizes += 1;
        left -= count;
        if remaining[s - 1] < 1.0 {
            let r = 1.0 - remaining[s - 1];
            remaining.iter_mut().for_each(|w| *w /= r);
        }
        let w = weight[s - 1] / count;
        for_each_subset(m, s, |idx| {
            out.push((membership(idx, false), w));
            if paired {
                out.push((membership(idx, true), w));
            }
        });
    }

    if full_sizes < n_sizes {
        let weight_left: f64 = weight[full_sizes..].iter().sum();
        let probs: Vec<f64> = weight[full_sizes..].iter().map(|w| w / weight_left).collect();
        let fixed = out.len();
        let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut remaining_samples = left.max(0.0) as usize;
        let mut guard = 0usize;
        while remaining_samples > 0 && guard < 100 * budget.max(1) {
            guard += 1;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    k = i;
                    break;
                }
            }
            let s = full_sizes + k + 1;
            let idx: Vec<usize> = sample(rng, m, s).into_vec();
            let z = membership(&idx, false);
            let paired = s <= n_paired;
            match seen.get(&z) {
                Some(&at) => out[at].1 += 1.0,
                None => {
                    seen.insert(z.clone(), out.len());
                    out.push((z, 1.0));
                    remaining_samples -= 1;
                }
            }
            if paired && remaining_samples > 0 {
                let zc = membership(&idx, true);
                match seen.get(&zc) {
                    Some(&at) => out[at].1 += 1.0,
                    None => {
                        seen.insert(zc.clone(), out.len());
                        out.push((zc, 1.0));
                        remaining_samples -= 1;
                    }
                }
            }
        }
        let sampled: f64 = out[fixed..].iter().map(|(_, w)| w).sum();
        if sampled > 0.0 {
            out[fixed..].iter_mut().for_each(|(_, w)| *w *= weight_left / sampled);
        }
    }
    out
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major `n x n`).
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 1e-12 * scale {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(())
}

/// KernelSHAP values of `predict` at `x` against `background` rows.
///
/// Features equal to `x` in every background row are excluded from the
/// game and receive zero attribution. The regression is constrained so the
/// attributions sum exactly to `f(x) - E[f(background)]`.
pub fn kernel_shap<F>(predict: F, x: &[f64], background: &[Vec<f64>], cfg: &ShapConfig, rng: &mut impl Rng) -> Result<Explanation>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m_all = x.len();
    let v = cfg.violations(m_all);
    if !v.is_empty() {
        return Err(Error::InvalidShapConfig(v.join("; ")));
    }
    if background.is_empty() {
        return Err(Error::Empty("background set".into()));
    }
    if let Some(b) = background.iter().find(|b| b.len() != m_all) {
        return Err(Error::dims("background row", m_all, b.len()));
    }
    let fx = predict(x);
    let classes = fx.len();
    let mut base = vec![0.0; classes];
    for b in background {
        for (acc, p) in base.iter_mut().zip(predict(b)) {
            *acc += p;
        }
    }
    base.iter_mut().for_each(|v| *v /= background.len() as f64);

    let varying: Vec<usize> = (0..m_all).filter(|&j| background.iter().any(|b| b[j] != x[j])).collect();
    let m = varying.len();
    let mut phi = vec![vec![0.0; classes]; m_all];
    let delta: Vec<f64> = (0..classes).map(|c| fx[c] - base[c]).collect();
    if m == 0 {
        return Ok(Explanation { phi, base, fx });
    }
    if m == 1 {
        phi[varying[0]] = delta;
        return Ok(Explanation { phi, base, fx });
    }

    let budget = cfg.samples_for(m_all).min(if m < 60 { (1usize << m) - 2 } else { usize::MAX });
    let coal = coalitions(m, budget, rng);

    // expected prediction under each coalition
    let mut ey = vec![vec![0.0; classes]; coal.len()];
    let mut row = vec![0.0; m_all];
    for (k, (z, _)) in coal.iter().enumerate() {
        for b in background {
            row.copy_from_slice(b);
            for (vi, &j) in varying.iter().enumerate() {
                if z[vi] {
                    row[j] = x[j];
                }
            }
            for (acc, p) in ey[k].iter_mut().zip(predict(&row)) {
                *acc += p;
            }
        }
        ey[k].iter_mut().for_each(|v| *v /= background.len() as f64);
    }

    let space = if m > 30 { 2f64.powi(30) } else { ((1u64 << m) - 2) as f64 };
    let select = match cfg.regularization {
        Regularization::Off => false,
        Regularization::Aic => true,
        Regularization::Auto => (coal.len() as f64) < 0.2 * space,
    };
    let everyone: Vec<usize> = (0..m).collect();
    let subsets: Vec<Vec<usize>> = if select {
        selected_players(&coal, &ey, &base, &delta, m)
            .into_iter()
            .map(|s| s.filter(|s| !s.is_empty()).unwrap_or_else(|| everyone.clone()))
            .collect()
    } else {
        vec![everyone; classes]
    };
    let mut groups: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (c, s) in subsets.iter().enumerate() {
        groups.entry(s.as_slice()).or_default().push(c);
    }
    for (subset, cls) in groups {
        let solved = constrained_wls(&coal, &ey, &base, &delta, subset, &cls)?;
        for (c, values) in cls.iter().zip(solved) {
            for (&player, v) in subset.iter().zip(values) {
                phi[varying[player]][*c] = v;
            }
        }
    }
    Ok(Explanation { phi, base, fx })
}

/// Per class, the players kept by AIC on the lasso path of the augmented
/// regression that folds the efficiency constraint into the data: each
/// coalition contributes a row for its members and one for its complement.
fn selected_players(coal: &[(Vec<bool>, f64)], ey: &[Vec<f64>], base: &[f64], delta: &[f64], m: usize) -> Vec<Option<Vec<usize>>> {
    let classes = base.len();
    let n = 2 * coal.len();
    let mut gram = vec![0.0; m * m];
    let mut colsum = vec![0.0; m];
    let mut xty = vec![vec![0.0; m]; classes];
    let (mut ysum, mut yty) = (vec![0.0; classes], vec![0.0; classes]);
    for (k, (z, w)) in coal.iter().enumerate() {
        let s = z.iter().filter(|v| **v).count() as f64;
        let (a1, a2) = ((w * (m as f64 - s)).sqrt(), (w * s).sqrt());
        let (inside, outside): (Vec<usize>, Vec<usize>) = (0..m).partition(|&j| z[j]);
        for (set, a, sign) in [(&inside, a1, 1.0), (&outside, a2, -1.0)] {
            for &i in set {
                colsum[i] += sign * a;
                for &j in set {
                    gram[i * m + j] += a * a;
                }
            }
        }
        for c in 0..classes {
            let y1 = a1 * (ey[k][c] - base[c]);
            let y2 = a2 * (ey[k][c] - base[c] - delta[c]);
            for &i in &inside {
                xty[c][i] += a1 * y1;
            }
            for &i in &outside {
                xty[c][i] -= a2 * y2;
            }
            ysum[c] += y1 + y2;
            yty[c] += y1 * y1 + y2 * y2;
        }
    }
    let nf = n as f64;
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] -= colsum[i] * colsum[j] / nf;
        }
    }
    (0..classes)
        .map(|c| {
            let xty_c: Vec<f64> = (0..m).map(|i| xty[c][i] - colsum[i] * ysum[c] / nf).collect();
            aic_select(&gram, &xty_c, yty[c] - ysum[c] * ysum[c] / nf, n, m)
        })
        .collect()
}

/// Kernel-weighted least squares over the players in `subset` (indices into
/// the coalition vectors), with the last one eliminated through the sum
/// constraint. Returns one coefficient vector per class in `classes`.
fn constrained_wls(
    coal: &[(Vec<bool>, f64)],
    ey: &[Vec<f64>],
    base: &[f64],
    delta: &[f64],
    subset: &[usize],
    classes: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let n = subset.len() - 1;
    if n == 0 {
        return Ok(classes.iter().map(|&c| vec![delta[c]]).collect());
    }
    let mut gram = vec![0.0; n * n];
    let mut rhs = vec![vec![0.0; n]; classes.len()];
    let mut e = vec![0.0; n];
    for (k, (z, w)) in coal.iter().enumerate() {
        let last = if z[subset[n]] { 1.0 } else { 0.0 };
        for i in 0..n {
            e[i] = if z[subset[i]] { 1.0 } else { 0.0 } - last;
        }
        for i in 0..n {
            if e[i] == 0.0 {
                continue;
            }
            for j in 0..=i {
                gram[i * n + j] += w * e[i] * e[j];
            }
        }
        for (ci, &c) in classes.iter().enumerate() {
            let y = ey[k][c] - base[c] - last * delta[c];
            for i in 0..n {
                rhs[ci][i] += w * e[i] * y;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[j * n + i] = gram[i * n + j];
        }
    }
    let mut out = Vec::with_capacity(classes.len());
    for (ci, &c) in classes.iter().enumerate() {
        let mut a = gram.clone();
        let mut b = rhs[ci].clone();
        cholesky_solve(&mut a, &mut b, n).ok_or(Error::SingularSystem(coal.len()))?;
        let sum: f64 = b.iter().sum();
        b.push(delta[c] - sum);
        out.push(b);
    }
    Ok(out)
}

/// KernelSHAP over a flattened `timesteps x features` window with every
/// (timestep, feature) cell as a player, averaged over timesteps.
pub fn lstm_window_shap<F>(
    predict: F,
    window: &[f64],
    background: &[Vec<f64>],
    timesteps: usize,
    cfg: &ShapConfig,
    rng: &mut impl Rng,
) -> Result<Explanation>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if timesteps == 0 || !window.len().is_multiple_of(timesteps) {
        return Err(Error::dims("window length", timesteps.max(1) * (window.len() / timesteps.max(1)), window.len()));
    }
    let d = window.len() / timesteps;
    let full = kernel_shap(predict, window, background, cfg, rng)?;
    let classes = full.fx.len();
    let mut phi = vec![vec![0.0; classes]; d];
    for (cell, p) in full.phi.iter().enumerate() {
        for c in 0..classes {
            phi[cell % d][c] += p[c] / timesteps as f64;
        }
    }
    Ok(Explanation { phi, base: full.base, fx: full.fx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(w: Vec<f64>) -> impl Fn(&[f64]) -> Vec<f64> {
        move |x: &[f64]| vec![w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + 0.5]
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut count = 0;
        for_each_subset(6, 3, |_| count += 1);
        assert_eq!(count, 20);
        assert_eq!(binomial(49, 2), 1176.0);
    }

    #[test]
    fn coalition_weights_are_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, budget) in [(3, 6), (5, 30), (12, 200), (40, 2128)] {
            let c = coalitions(m, budget, &mut rng);
            let total: f64 = c.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-9, "m={m}: {total}");
            assert!(c.len() <= budget);
            assert!(c.iter().all(|(z, _)| z.iter().any(|v| *v) && z.iter().any(|v| !*v)));
        }
        // exhaustive when affordable
        assert_eq!(coalitions(5, 30, &mut rng).len(), 30);
    }

    #[test]
    fn linear_model_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [3, 8, 20] {
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let bg = random_rows(&mut rng, 25, d);
            let mean: Vec<f64> = (0..d).map(|j| bg.iter().map(|b| b[j]).sum::<f64>() / bg.len() as f64).collect();
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let e = kernel_shap(linear(w.clone()), &x, &bg, &ShapConfig::default(), &mut rng).unwrap();
            for j in 0..d {
                assert!((e.phi[j][0] - w[j] * (x[j] - mean[j])).abs() < 1e-3);
            }
            assert!(e.additivity_gap()[0].abs() < 1e-10);
        }
    }

    #[test]
    fn shared_feature_gets_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut bg = random_rows(&mut rng, 10, 4);
        bg.iter_mut().for_each(|b| b[2] = 1.5);
        let x = vec![0.3, -0.2, 1.5, 0.9];
        let f = |v: &[f64]| vec![(v[0] * v[2]).sin() + v[1] * v[3], v[2] * v[2]];
        let e = kernel_shap(f, &x, &bg, &ShapConfig::default(), &mut rng).unwrap();
        assert!(e.phi[2].iter().all(|p| p.abs() < 1e-6));
        assert!(e.additivity_gap().iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn nonlinear_additivity_under_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 30;
        let bg = random_rows(&mut rng, 8, d);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = |v: &[f64]| {
            let s: f64 = v.iter().enumerate().map(|(i, a)| a * (i as f64 * 0.1).cos()).sum();
            let p = 1.0 / (1.0 + (-s).exp());
            vec![p, 1.0 - p]
        };
        let cfg = ShapConfig { coalition_samples: Some(200), ..Default::default() };
        let e = kernel_shap(f, &x, &bg, &cfg, &mut rng).unwrap();
        assert!(e.additivity_gap().iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn aic_selection_zeroes_unused_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = 40;
        let bg = random_rows(&mut rng, 12, d);
        let f = |v: &[f64]| {
            let p = 1.0 / (1.0 + (-(2.0 * v[3] - 1.5 * v[17] + v[3] * v[30])).exp());
            vec![p, 1.0 - p]
        };
        let mut unused_mass = [0.0; 2];
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            for (i, reg) in [Regularization::Off, Regularization::Auto].into_iter().enumerate() {
                let cfg = ShapConfig { regularization: reg, ..Default::default() };
                let e = kernel_shap(f, &x, &bg, &cfg, &mut rng).unwrap();
                assert!(e.additivity_gap().iter().all(|g| g.abs() < 1e-10));
                unused_mass[i] += (0..d).filter(|j| ![3, 17, 30].contains(j)).map(|j| e.phi[j][0].abs()).sum::<f64>();
            }
        }
        assert!(unused_mass[1] < 0.5 * unused_mass[0], "{unused_mass:?}");
    }

    #[test]
    fn degenerate_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bg = random_rows(&mut rng, 4, 6);
        let cfg = ShapConfig { coalition_samples: Some(3), ..Default::default() };
        assert!(matches!(kernel_shap(linear(vec![1.0; 6]), &[1.0; 6], &bg, &cfg, &mut rng), Err(Error::InvalidShapConfig(_))));
        // rank-deficient normal equations
        let mut a = vec![1.0, 1.0, 1.0, 1.0];
        let mut b = vec![1.0, 2.0];
        assert!(cholesky_solve(&mut a, &mut b, 2).is_none());
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        cholesky_solve(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-12 && b[1].abs() < 1e-12);
    }

    #[test]
    fn window_averaging() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (t, d) = (3, 4);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let step_bg = random_rows(&mut rng, 6, d);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tile = |v: &[f64]| v.iter().cloned().cycle().take(t * d).collect::<Vec<f64>>();
        let wf = w.clone();
        let model = move |v: &[f64]| vec![v.chunks(d).map(|s| s.iter().zip(&wf).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>()];
        let bg: Vec<Vec<f64>> = step_bg.iter().map(|b| tile(b)).collect();
        let e = lstm_window_shap(&model, &tile(&x), &bg, t, &ShapConfig::default(), &mut rng).unwrap();
        let single = kernel_shap(linear(w.clone()), &x, &step_bg, &ShapConfig::default(), &mut rng).unwrap();
        for j in 0..d {
            assert!((e.phi[j][0] - single.phi[j][0]).abs() < 1e-6);
        }
        let scaled = lstm_window_shap(|v: &[f64]| vec![3.0 * model(v)[0]], &tile(&x), &bg, t, &ShapConfig::default(), &mut rng).unwrap();
        for j in 0..d {
            assert!((scaled.phi[j][0] - 3.0 * e.phi[j][0]).abs() < 1e-6);
        }
    }
}
