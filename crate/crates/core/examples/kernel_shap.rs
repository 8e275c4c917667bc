//! KernelSHAP on a small nonlinear function, compared with the exact values
//! for its additive part.
//!
//! cargo run --release --example kernel_shap

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsebench::explain::{kernel_shap, ShapConfig};

fn main() -> sparsebench::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let background: Vec<Vec<f64>> = (0..50).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    // additive in x0..x3, an interaction between x4 and x5
    let f = |x: &[f64]| vec![2.0 * x[0] - x[1] + 0.5 * x[2] * x[2] + x[3] + x[4] * x[5]];
    let x = [0.8, -0.5, 0.3, 0.0, 1.0, 1.0];

    let e = kernel_shap(f, &x, &background, &ShapConfig::default(), &mut rng)?;
    let mean = |j: usize| background.iter().map(|r| r[j]).sum::<f64>() / background.len() as f64;
    println!("feature   phi      w(x - E[x]) for the linear terms");
    for (j, w) in [(0, 2.0), (1, -1.0), (3, 1.0)] {
        println!("x{j}     {:8.4}   {:8.4}", e.phi[j][0], w * (x[j] - mean(j)));
    }
    for j in [2, 4, 5] {
        println!("x{j}     {:8.4}", e.phi[j][0]);
    }
    println!("f(x) {:.4}  base {:.4}  additivity gap {:.2e}", e.fx[0], e.base[0], e.additivity_gap()[0]);
    Ok(())
}
