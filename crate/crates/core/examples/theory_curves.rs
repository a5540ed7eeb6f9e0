//! Prints `T(q)`, `α(q)` and `f(α)` for every model family on a coarse grid.

use sphere_renyi::models::{evaluate_curves, ModelSpec, Normalization};

fn main() -> sphere_renyi::Result<()> {
    let specs = [
        ModelSpec::log_normal(2.0, 1.0)?,
        ModelSpec::log_gamma(2.0, 3.0, 2.0)?,
        ModelSpec::log_neg_inv_gamma(2.0, 3.0, 2.0)?,
        ModelSpec::chi_square(2.0)?,
        ModelSpec::chi_square_eps(2.0, 0.1)?,
        ModelSpec::even_power(2.0, 2, Normalization::Normalized)?,
        ModelSpec::chi_square_k(2.0, 2, Normalization::Normalized)?,
    ];
    let q: Vec<f64> = (1..=5).map(|i| 0.5 * i as f64).collect();
    for spec in &specs {
        let (curve, spectrum) = evaluate_curves(spec, &q)?;
        println!("{}", spec.family());
        println!("  {:>5} {:>10} {:>10} {:>10}", "q", "T", "alpha", "f");
        for i in 0..q.len() {
            println!("  {:5.2} {:10.6} {:10.6} {:10.6}", q[i], curve.t[i], spectrum.alpha[i], spectrum.f[i]);
        }
    }
    Ok(())
}
