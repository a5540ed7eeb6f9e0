//! Fits each family to the noiseless curve of a known model and prints the
//! recovered parameters.

use sphere_renyi::fitting::{fit_family, FitOptions};
use sphere_renyi::models::{evaluate_curves, Family, ModelSpec, Normalization};

fn main() -> sphere_renyi::Result<()> {
    let q: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
    let cases = [
        (ModelSpec::log_normal(3.0, 2.0)?, Family::LogNormal),
        (ModelSpec::chi_square(2.0)?, Family::ChiSquare),
        (ModelSpec::log_gamma(2.0, 3.0, 2.0)?, Family::LogGamma),
        (ModelSpec::log_neg_inv_gamma(2.0, 3.0, 2.0)?, Family::LogNegInvGamma),
        (ModelSpec::even_power(2.0, 2, Normalization::Normalized)?, Family::EvenPower),
        (ModelSpec::chi_square_k(2.0, 3, Normalization::Normalized)?, Family::ChiSquareK),
    ];
    for (spec, family) in cases {
        let (curve, _) = evaluate_curves(&spec, &q)?;
        let options = FitOptions { init: None, starts: 8, b: Some(spec.b) };
        let fit = fit_family(&curve, family, Normalization::Normalized, &options)?;
        let show = |ps: &[sphere_renyi::fitting::Param]| {
            ps.iter().map(|p| format!("{}={:.6}", p.name, p.value)).collect::<Vec<_>>().join(" ")
        };
        println!(
            "{family:15} {}  [{}]  rmse {:.1e}  converged {}",
            show(&fit.params),
            show(&fit.natural_params),
            fit.rmse,
            fit.converged
        );
    }

    // a lognormal curve seen through the wrong family
    let (curve, _) = evaluate_curves(&ModelSpec::log_normal(2.0, 1.0)?, &q)?;
    let fit = fit_family(&curve, Family::LogGamma, Normalization::Normalized, &FitOptions { starts: 8, ..FitOptions::default() })?;
    println!("lognormal data as loggamma: rmse {:.2e}", fit.rmse);
    Ok(())
}
