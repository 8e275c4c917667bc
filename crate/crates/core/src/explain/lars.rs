//! Lasso path by least-angle regression and AIC model selection, working
//! from the Gram matrix of already centered data.

const TINY: f64 = 1e-12;

/// Lower Cholesky factor of the active-set Gram matrix, grown one column at
/// a time.
struct Factor {
    l: Vec<Vec<f64>>,
}

impl Factor {
    fn new() -> Self {
        Self { l: Vec::new() }
    }

    /// Appends variable `j`; `false` when it is collinear with the active set.
    fn push(&mut self, gram: &[f64], p: usize, active: &[usize], j: usize) -> bool {
        let k = self.l.len();
        let mut row = vec![0.0; k + 1];
        for i in 0..k {
            let mut s = gram[active[i] * p + j];
            for t in 0..i {
                s -= self.l[i][t] * row[t];
            }
            row[i] = s / self.l[i][i];
        }
        let d = gram[j * p + j] - row[..k].iter().map(|v| v * v).sum::<f64>();
        if d <= 1e-10 * gram[j * p + j].abs().max(TINY) {
            return false;
        }
        row[k] = d.sqrt();
        self.l.push(row);
        true
    }

    fn rebuild(gram: &[f64], p: usize, active: &[usize]) -> Option<Self> {
        let mut f = Self::new();
        for i in 0..active.len() {
            if !f.push(gram, p, &active[..i], active[i]) {
                return None;
            }
        }
        Some(f)
    }

    /// Solves `L L^T x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.l.len();
        let mut y = b.to_vec();
        for i in 0..k {
            for t in 0..i {
                y[i] -= self.l[i][t] * y[t];
            }
            y[i] /= self.l[i][i];
        }
        for i in (0..k).rev() {
            for t in i + 1..k {
                y[i] -= self.l[t][i] * y[t];
            }
            y[i] /= self.l[i][i];
        }
        y
    }
}

/// Coefficients at every breakpoint of the lasso path, starting from zero.
/// `gram` is the row-major `p x p` matrix `X^T X`, `xty` is `X^T y`.
pub(crate) fn lasso_path(gram: &[f64], xty: &[f64], p: usize, max_active: usize) -> Vec<Vec<f64>> {
    let mut beta = vec![0.0; p];
    let mut path = vec![beta.clone()];
    let mut corr = xty.to_vec();
    let Some(first) = (0..p).max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs())) else {
        return path;
    };
    let scale = corr[first].abs();
    if scale <= TINY {
        return path;
    }
    let mut active = Vec::new();
    let mut in_active = vec![false; p];
    let mut factor = Factor::new();
    if !factor.push(gram, p, &active, first) {
        return path;
    }
    active.push(first);
    in_active[first] = true;

    for _ in 0..8 * p.max(1) {
        let c = corr[active[0]].abs();
        if c <= TINY * scale {
            break;
        }
        let signs: Vec<f64> = active.iter().map(|&j| corr[j].signum()).collect();
        let w = factor.solve(&signs);
        let norm = signs.iter().zip(&w).map(|(s, v)| s * v).sum::<f64>();
        if norm <= 0.0 {
            break;
        }
        let aa = 1.0 / norm.sqrt();
        let w: Vec<f64> = w.iter().map(|v| v * aa).collect();
        let a: Vec<f64> = (0..p).map(|j| active.iter().zip(&w).map(|(&k, wk)| gram[j * p + k] * wk).sum()).collect();

        // full least squares on the active set
        let mut gamma = c / aa;
        let mut enter = None;
        if active.len() < max_active {
            for j in (0..p).filter(|&j| !in_active[j]) {
                for g in [(c - corr[j]) / (aa - a[j]), (c + corr[j]) / (aa + a[j])] {
                    if g > TINY && g < gamma {
                        gamma = g;
                        enter = Some(j);
                    }
                }
            }
        }
        let mut drop = None;
        for (i, &k) in active.iter().enumerate() {
            if w[i] != 0.0 {
                let g = -beta[k] / w[i];
                if g > TINY && g < gamma {
                    gamma = g;
                    drop = Some(i);
                    enter = None;
                }
            }
        }
        for (i, &k) in active.iter().enumerate() {
            beta[k] += gamma * w[i];
        }
        for j in 0..p {
            corr[j] -= gamma * a[j];
        }
        if let Some(i) = drop {
            let k = active.remove(i);
            in_active[k] = false;
            beta[k] = 0.0;
            path.push(beta.clone());
            match Factor::rebuild(gram, p, &active) {
                Some(f) if !active.is_empty() => factor = f,
                _ => break,
            }
        } else if let Some(j) = enter {
            path.push(beta.clone());
            if !factor.push(gram, p, &active, j) {
                break;
            }
            active.push(j);
            in_active[j] = true;
        } else {
            path.push(beta.clone());
            break;
        }
    }
    path
}

/// Variables kept by the AIC-best point of the lasso path, or `None` when
/// the noise variance cannot be estimated (too few rows, collinear columns
/// or an exact fit).
///
/// Data must be centered; `n` counts rows and `yty` is `y^T y`. The noise
/// variance comes from the full least-squares fit with `n - p - 1` degrees
/// of freedom.
pub(crate) fn aic_select(gram: &[f64], xty: &[f64], yty: f64, n: usize, p: usize) -> Option<Vec<usize>> {
    if n <= p + 1 || p == 0 {
        return None;
    }
    let all: Vec<usize> = (0..p).collect();
    let full = Factor::rebuild(gram, p, &all)?;
    let beta = full.solve(xty);
    let rss_full = yty - beta.iter().zip(xty).map(|(b, v)| b * v).sum::<f64>();
    let sigma2 = rss_full / (n - p - 1) as f64;
    if sigma2 <= 1e-12 * yty.max(TINY) {
        return None;
    }
    let rss = |b: &[f64]| {
        let mut q = 0.0;
        for i in 0..p {
            if b[i] == 0.0 {
                continue;
            }
            let gi: f64 = (0..p).filter(|&j| b[j] != 0.0).map(|j| gram[i * p + j] * b[j]).sum();
            q += b[i] * gi;
        }
        yty - 2.0 * b.iter().zip(xty).map(|(a, v)| a * v).sum::<f64>() + q
    };
    let path = lasso_path(gram, xty, p, p.min(n - 1));
    let mut best: Option<(f64, usize)> = None;
    for (k, b) in path.iter().enumerate() {
        let df = b.iter().filter(|v| v.abs() > f64::EPSILON).count();
        let crit = rss(b) / sigma2 + 2.0 * df as f64;
        if best.is_none_or(|(c, _)| crit < c) {
            best = Some((crit, k));
        }
    }
    let (_, k) = best?;
    Some((0..p).filter(|&j| path[k][j].abs() > f64::EPSILON).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    struct Problem {
        gram: Vec<f64>,
        xty: Vec<f64>,
        yty: f64,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
    }

    fn centered(x: Vec<Vec<f64>>, y: Vec<f64>) -> Problem {
        let (n, p) = (x.len(), x[0].len());
        let mx: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let my = y.iter().sum::<f64>() / n as f64;
        let x: Vec<Vec<f64>> = x.iter().map(|r| r.iter().zip(&mx).map(|(a, m)| a - m).collect()).collect();
        let y: Vec<f64> = y.iter().map(|v| v - my).collect();
        let mut gram = vec![0.0; p * p];
        for r in &x {
            for i in 0..p {
                for j in 0..p {
                    gram[i * p + j] += r[i] * r[j];
                }
            }
        }
        let xty = (0..p).map(|j| x.iter().zip(&y).map(|(r, v)| r[j] * v).sum()).collect();
        let yty = y.iter().map(|v| v * v).sum();
        Problem { gram, xty, yty, x, y }
    }

    fn sparse_problem(n: usize, p: usize, true_coef: &[(usize, f64)], noise: f64, seed: u64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let y = x
            .iter()
            .map(|r| true_coef.iter().map(|&(j, b)| b * r[j]).sum::<f64>() + noise * rng.sample::<f64, _>(StandardNormal))
            .collect();
        centered(x, y)
    }

    /// Lasso at penalty `lambda` (objective `0.5*|y - Xb|^2 + lambda*|b|_1`)
    /// by cyclic coordinate descent.
    fn coordinate_descent(pr: &Problem, lambda: f64) -> Vec<f64> {
        let p = pr.x[0].len();
        let mut b = vec![0.0; p];
        let mut resid = pr.y.clone();
        for _ in 0..5000 {
            for j in 0..p {
                let col_sq: f64 = pr.x.iter().map(|r| r[j] * r[j]).sum();
                let rho: f64 = pr.x.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>() + col_sq * b[j];
                let new = rho.signum() * (rho.abs() - lambda).max(0.0) / col_sq;
                for (r, e) in pr.x.iter().zip(resid.iter_mut()) {
                    *e -= r[j] * (new - b[j]);
                }
                b[j] = new;
            }
        }
        b
    }

    #[test]
    fn path_matches_coordinate_descent_between_breakpoints() {
        let pr = sparse_problem(60, 6, &[(0, 2.0), (3, -1.0), (5, 0.5)], 0.3, 1);
        let p = 6;
        let path = lasso_path(&pr.gram, &pr.xty, p, p);
        let corr = |b: &[f64]| -> f64 {
            (0..p).map(|j| (pr.xty[j] - (0..p).map(|k| pr.gram[j * p + k] * b[k]).sum::<f64>()).abs()).fold(0.0, f64::max)
        };
        for w in path.windows(2) {
            let (l0, l1) = (corr(&w[0]), corr(&w[1]));
            let lambda = 0.5 * (l0 + l1);
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let cd = coordinate_descent(&pr, lambda);
            for j in 0..p {
                assert!((mid[j] - cd[j]).abs() < 1e-6, "lambda {lambda}: {mid:?} vs {cd:?}");
            }
        }
        // the path ends at the least-squares fit
        let last = path.last().unwrap();
        assert!(corr(last) < 1e-8);
    }

    #[test]
    fn kkt_holds_at_every_breakpoint() {
        let pr = sparse_problem(40, 12, &[(1, 1.0), (4, -2.0), (7, 0.7), (10, 0.2)], 0.5, 2);
        let p = 12;
        for b in lasso_path(&pr.gram, &pr.xty, p, p) {
            let c: Vec<f64> = (0..p).map(|j| pr.xty[j] - (0..p).map(|k| pr.gram[j * p + k] * b[k]).sum::<f64>()).collect();
            let lambda = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for j in 0..p {
                assert!(c[j].abs() <= lambda + 1e-8);
                if b[j] != 0.0 {
                    assert!((c[j] - b[j].signum() * lambda).abs() < 1e-7 * lambda.max(1.0));
                }
            }
        }
    }

    #[test]
    fn aic_recovers_the_support() {
        let pr = sparse_problem(400, 15, &[(2, 1.5), (6, -1.0), (11, 0.8)], 0.2, 3);
        let sel = aic_select(&pr.gram, &pr.xty, pr.yty, 400, 15).unwrap();
        for j in [2, 6, 11] {
            assert!(sel.contains(&j), "{sel:?}");
        }
        assert!(sel.len() <= 6, "{sel:?}");
    }

    #[test]
    fn exact_fits_and_short_data_skip_selection() {
        let exact = sparse_problem(50, 4, &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)], 0.0, 4);
        assert!(aic_select(&exact.gram, &exact.xty, exact.yty, 50, 4).is_none());
        let short = sparse_problem(5, 4, &[(0, 1.0)], 0.1, 5);
        assert!(aic_select(&short.gram, &short.xty, short.yty, 5, 4).is_none());
    }
}
