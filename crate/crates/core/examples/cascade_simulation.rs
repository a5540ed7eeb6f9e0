//! Simulates a lognormal cascade on a small grid and summarizes the map.

use sphere_renyi::cascade::{simulate_cascade_with_diagnostics, CascadeConfig, CovarianceSpec};
use sphere_renyi::models::ModelSpec;
use sphere_renyi::sphere::{Ordering, PixelGrid};

fn main() -> sphere_renyi::Result<()> {
    let config = CascadeConfig {
        mother: ModelSpec::log_normal(3.0, 0.5)?,
        covariance: CovarianceSpec::new(1.0, 0.5)?,
        levels: 6,
        grid: PixelGrid::new(8, Ordering::Nested)?,
        seed: 11,
    };
    let (map, diag) = simulate_cascade_with_diagnostics(&config)?;
    let v = map.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("{} pixels, {} factors, max jitter {:e}", v.len(), diag.factors, diag.max_jitter);
    println!("mean {mean:.4}  sd {:.4}  min {min:.4}  max {max:.4}", var.sqrt());
    Ok(())
}
