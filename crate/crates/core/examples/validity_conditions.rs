//! Checks which parameter sets satisfy the cascade convergence conditions.

use sphere_renyi::models::{check_conditions, ModelSpec};

fn main() -> sphere_renyi::Result<()> {
    let cases = [
        ("lognormal b=2 sigma2=1", ModelSpec::log_normal(2.0, 1.0)?),
        ("lognormal b=1.2 sigma2=1", ModelSpec::log_normal(1.2, 1.0)?),
        ("loggamma b=2 lambda=3 beta=2", ModelSpec::log_gamma(2.0, 3.0, 2.0)?),
        ("loggamma b=2 lambda=2 beta=2", ModelSpec::log_gamma(2.0, 2.0, 2.0)?),
        ("chi-square b=3", ModelSpec::chi_square(3.0)?),
    ];
    for (label, spec) in &cases {
        let report = check_conditions(spec, 1.0, 1.0);
        println!("{label}: satisfied = {} (sigma_L^2 = {:.4})", report.satisfied, report.sigma2_lambda);
        for c in report.checks.iter().chain(&report.extension_checks) {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            println!("  {mark} {}: {:.4} {} {:.4}", c.name, c.actual, c.relation, c.required);
        }
        for note in &report.notes {
            println!("  note: {note}");
        }
    }
    Ok(())
}
