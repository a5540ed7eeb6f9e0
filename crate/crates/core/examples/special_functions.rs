//! Evaluates the special functions behind the closed-form moments.

use sphere_renyi::specfun::{bessel_k, digamma, ln_bessel_k, ln_gamma};

fn main() -> sphere_renyi::Result<()> {
    for x in [0.5, 1.0, 2.5, 10.0] {
        println!("lnGamma({x}) = {:.12}  psi({x}) = {:.12}", ln_gamma(x)?, digamma(x)?);
    }
    for (nu, x) in [(0.5, 1.0), (2.0, 2.0 * 6f64.sqrt()), (7.3, 0.2), (800.0, 50.0)] {
        println!("K_{nu}({x:.4}) = {:.6e}  ln K = {:.6}", bessel_k(nu, x)?, ln_bessel_k(nu, x)?);
    }
    Ok(())
}
