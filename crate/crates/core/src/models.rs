//! Closed-form Rényi functions, singularity exponents and spectra of the
//! mother-field families, plus their convergence conditions.
//!
//! Every family shares the scaling law
//!
//! ```text
//! T(q) = q - 1 - (1/2) log_b E[Λ^q]
//! ```
//!
//! so each family only has to supply `ln E[Λ^q]` and its derivative in `q`.
//! The spectrum follows as `α = T'(q)` and `f = q α - T(q)`.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{digamma_unchecked, ln_bessel_k_unchecked, ln_gamma_unchecked};

/// How EvenPower and ChiSquareK mothers are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Rescale the mother so that `E Λ = 1`.
    #[default]
    Normalized,
    /// Unnormalized closed forms (`Y` with unit variance for EvenPower,
    /// `Λ = (2/k) χ²_k` for ChiSquareK); `E Λ` is then not one.
    Verbatim,
}

/// Model family tag, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LogNormal,
    LogGamma,
    LogNegInvGamma,
    ChiSquare,
    ChiSquareEps,
    EvenPower,
    ChiSquareK,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::LogNormal,
        Family::LogGamma,
        Family::LogNegInvGamma,
        Family::ChiSquare,
        Family::ChiSquareEps,
        Family::EvenPower,
        Family::ChiSquareK,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::LogNormal => "lognormal",
            Family::LogGamma => "loggamma",
            Family::LogNegInvGamma => "logneginvgamma",
            Family::ChiSquare => "chisquare",
            Family::ChiSquareEps => "chisquare-eps",
            Family::EvenPower => "even-power",
            Family::ChiSquareK => "chisquare-k",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let n = name.trim().to_ascii_lowercase().replace('_', "-");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == n || f.name().replace('-', "") == n.replace('-', ""))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model family '{name}'")))
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Mother-field law with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MotherLaw {
    /// `Λ = exp(Y - σ²/2)`, `Y` Gaussian with variance `sigma2`.
    LogNormal { sigma2: f64 },
    /// `Λ = exp(Z - c_Z)`, `Z` gamma with shape `beta`, rate `lambda`.
    LogGamma { lambda: f64, beta: f64 },
    /// `Λ = exp(-1/Z - c_U)`, `Z` gamma with shape `beta`, rate `lambda`.
    LogNegInvGamma { lambda: f64, beta: f64 },
    /// `Λ = Y²`, `Y` standard Gaussian.
    ChiSquare,
    /// `Λ = (1 - ε) Y² + ε`.
    ChiSquareEps { eps: f64 },
    /// `Λ = Y^(2k)`.
    EvenPower { k: u32, mode: Normalization },
    /// `Λ ∝ Z_1² + … + Z_k²`.
    ChiSquareK { k: u32, mode: Normalization },
}

/// A mother law together with the cascade scaling factor `b > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub b: f64,
    pub law: MotherLaw,
}

impl ModelSpec {
    pub fn new(b: f64, law: MotherLaw) -> Result<Self> {
        let spec = Self { b, law };
        spec.validate()?;
        Ok(spec)
    }

    pub fn log_normal(b: f64, sigma2: f64) -> Result<Self> {
        Self::new(b, MotherLaw::LogNormal { sigma2 })
    }

    pub fn log_gamma(b: f64, lambda: f64, beta: f64) -> Result<Self> {
        Self::new(b, MotherLaw::LogGamma { lambda, beta })
    }

    pub fn log_neg_inv_gamma(b: f64, lambda: f64, beta: f64) -> Result<Self> {
        Self::new(b, MotherLaw::LogNegInvGamma { lambda, beta })
    }

    pub fn chi_square(b: f64) -> Result<Self> {
        Self::new(b, MotherLaw::ChiSquare)
    }

    pub fn chi_square_eps(b: f64, eps: f64) -> Result<Self> {
        Self::new(b, MotherLaw::ChiSquareEps { eps })
    }

    pub fn even_power(b: f64, k: u32, mode: Normalization) -> Result<Self> {
        Self::new(b, MotherLaw::EvenPower { k, mode })
    }

    pub fn chi_square_k(b: f64, k: u32, mode: Normalization) -> Result<Self> {
        Self::new(b, MotherLaw::ChiSquareK { k, mode })
    }

    pub fn family(&self) -> Family {
        match self.law {
            MotherLaw::LogNormal { .. } => Family::LogNormal,
            MotherLaw::LogGamma { .. } => Family::LogGamma,
            MotherLaw::LogNegInvGamma { .. } => Family::LogNegInvGamma,
            MotherLaw::ChiSquare => Family::ChiSquare,
            MotherLaw::ChiSquareEps { .. } => Family::ChiSquareEps,
            MotherLaw::EvenPower { .. } => Family::EvenPower,
            MotherLaw::ChiSquareK { .. } => Family::ChiSquareK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        if !(self.b > 1.0) || !self.b.is_finite() {
            return bad(format!("scaling factor b must exceed 1, got {}", self.b));
        }
        match self.law {
            MotherLaw::LogNormal { sigma2 } if !(sigma2 >= 0.0 && sigma2.is_finite()) => {
                bad(format!("sigma2 must be non-negative, got {sigma2}"))
            }
            MotherLaw::LogGamma { lambda, beta } | MotherLaw::LogNegInvGamma { lambda, beta }
                if !(lambda > 0.0 && beta > 0.0 && lambda.is_finite() && beta.is_finite()) =>
            {
                bad(format!("lambda and beta must be positive, got lambda={lambda}, beta={beta}"))
            }
            MotherLaw::LogGamma { lambda, .. } if lambda <= 1.0 => {
                bad(format!("loggamma needs lambda > 1 for E Λ to exist, got {lambda}"))
            }
            MotherLaw::ChiSquareEps { eps } if !(eps > 0.0 && eps < 1.0) => {
                bad(format!("eps must lie in (0, 1), got {eps}"))
            }
            MotherLaw::EvenPower { k, .. } | MotherLaw::ChiSquareK { k, .. } if k == 0 => {
                bad("k must be a positive integer".into())
            }
            _ => Ok(()),
        }
    }

    /// `c_Z = -β ln(1 - 1/λ)` for LogGamma.
    pub fn c_z(&self) -> Option<f64> {
        match self.law {
            MotherLaw::LogGamma { lambda, beta } => Some(log_gamma_c(lambda, beta)),
            _ => None,
        }
    }

    /// `c_U = ln(2 λ^(β/2) K_β(2√λ) / Γ(β))` for LogNegInvGamma.
    pub fn c_u(&self) -> Option<f64> {
        match self.law {
            MotherLaw::LogNegInvGamma { lambda, beta } => Some(neg_inv_gamma_c(lambda, beta)),
            _ => None,
        }
    }
}

pub(crate) fn log_gamma_c(lambda: f64, beta: f64) -> f64 {
    -beta * (-1.0 / lambda).ln_1p()
}

pub(crate) fn neg_inv_gamma_c(lambda: f64, beta: f64) -> f64 {
    ln_neg_inv_gamma_laplace(1.0, lambda, beta)
}

/// `ln E exp(-q/Z) = ln(2 (qλ)^(β/2) K_β(2√(qλ)) / Γ(β))` for `Z ~ Gamma(β, λ)`, `q >= 0`.
fn ln_neg_inv_gamma_laplace(q: f64, lambda: f64, beta: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let ql = q * lambda;
    LN_2 + 0.5 * beta * ql.ln() + ln_bessel_k_unchecked(beta, 2.0 * ql.sqrt()) - ln_gamma_unchecked(beta)
}

/// ln of the mean-one normalizing variance for EvenPower: `σ^(2k) = √π / (2^k Γ(k + 1/2))`.
fn even_power_ln_sigma2k(k: f64) -> f64 {
    0.5 * PI.ln() - k * LN_2 - ln_gamma_unchecked(k + 0.5)
}

/// Variance of the Gaussian that EvenPower(k) raises to the power `2k`.
pub fn even_power_gaussian_variance(k: u32, mode: Normalization) -> f64 {
    match mode {
        Normalization::Verbatim => 1.0,
        Normalization::Normalized => (even_power_ln_sigma2k(k as f64) / k as f64).exp(),
    }
}

fn domain_err(family: Family, q: f64, reason: impl Into<String>) -> Error {
    Error::MomentDomain { family: family.name(), q, reason: reason.into() }
}

// ---- family moment kernels, shared with the fitting module (k may be fractional) ----

/// `ln E[(Y²)^(kq)]·`-style kernel for EvenPower: returns `(ln E Λ^q, d/dq)`.
pub(crate) fn even_power_ln_moment(k: f64, mode: Normalization, q: f64) -> (f64, f64) {
    let kq = k * q + 0.5;
    match mode {
        Normalization::Verbatim => (
            k * q * LN_2 + ln_gamma_unchecked(kq) - 0.5 * PI.ln(),
            k * LN_2 + k * digamma_unchecked(kq),
        ),
        Normalization::Normalized => {
            let lg = ln_gamma_unchecked(k + 0.5);
            (
                ln_gamma_unchecked(kq) - q * lg + 0.5 * (q - 1.0) * PI.ln(),
                k * digamma_unchecked(kq) - lg + 0.5 * PI.ln(),
            )
        }
    }
}

/// ChiSquareK kernel: `Λ = c·W`, `W ~ χ²_k`, with `c = 1/k` (normalized) or `2/k` (verbatim).
pub(crate) fn chi_square_k_ln_moment(k: f64, mode: Normalization, q: f64) -> (f64, f64) {
    let ln_c = match mode {
        Normalization::Normalized => -k.ln(),
        Normalization::Verbatim => LN_2 - k.ln(),
    };
    let h = q + 0.5 * k;
    (
        q * (ln_c + LN_2) + ln_gamma_unchecked(h) - ln_gamma_unchecked(0.5 * k),
        ln_c + LN_2 + digamma_unchecked(h),
    )
}

pub(crate) fn log_gamma_ln_moment(lambda: f64, beta: f64, q: f64) -> (f64, f64) {
    let c = log_gamma_c(lambda, beta);
    (-q * c - beta * (-q / lambda).ln_1p(), -c + beta / (lambda - q))
}

pub(crate) fn neg_inv_gamma_ln_moment(lambda: f64, beta: f64, q: f64) -> (f64, f64) {
    let c = neg_inv_gamma_c(lambda, beta);
    let value = ln_neg_inv_gamma_laplace(q, lambda, beta) - q * c;
    let z = 2.0 * (q * lambda).sqrt();
    // K'_β = -(K_{β-1} + K_{β+1}) / 2, taken as ratios to K_β
    let ln_kb = ln_bessel_k_unchecked(beta, z);
    let lower = (ln_bessel_k_unchecked(beta - 1.0, z) - ln_kb).exp();
    let upper = (ln_bessel_k_unchecked(beta + 1.0, z) - ln_kb).exp();
    let slope = -c + beta / (2.0 * q) - 0.5 * (lower + upper) * (lambda / q).sqrt();
    (value, slope)
}

/// Nodes of an exp-sinh rule on `[0, ∞)` for `E[g(Y²)]`, `Y` standard normal:
/// pairs `(y², weight)` with weights summing to one.
fn half_normal_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        const STEP: f64 = 1.0 / 32.0;
        let density = (2.0 / PI).sqrt();
        let mut nodes = Vec::new();
        let mut i = -160i32;
        while i <= 96 {
            let t = i as f64 * STEP;
            let y = (0.5 * PI * t.sinh()).exp();
            if y < 40.0 {
                let dy = y * 0.5 * PI * t.cosh();
                nodes.push((y * y, STEP * density * (-0.5 * y * y).exp() * dy));
            }
            i += 1;
        }
        nodes
    })
}

/// `(ln E Λ^q, d/dq)` for `Λ = (1 - ε) Y² + ε` by quadrature.
pub(crate) fn chi_square_eps_ln_moment(eps: f64, q: f64) -> (f64, f64) {
    let mut m = 0.0;
    let mut dm = 0.0;
    for &(y2, w) in half_normal_rule() {
        let g = (1.0 - eps) * y2 + eps;
        let lg = g.ln();
        let gq = (q * lg).exp();
        m += w * gq;
        dm += w * gq * lg;
    }
    (m.ln(), dm / m)
}

/// `ln E Λ^q` and its derivative in `q`.
pub fn ln_moment_with_slope(spec: &ModelSpec, q: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    let family = spec.family();
    if !q.is_finite() {
        return Err(domain_err(family, q, "q must be finite"));
    }
    Ok(match spec.law {
        MotherLaw::LogNormal { sigma2 } => (0.5 * sigma2 * (q * q - q), 0.5 * sigma2 * (2.0 * q - 1.0)),
        MotherLaw::LogGamma { lambda, beta } => {
            if q >= lambda {
                return Err(domain_err(family, q, format!("requires q < lambda = {lambda}")));
            }
            log_gamma_ln_moment(lambda, beta, q)
        }
        MotherLaw::LogNegInvGamma { lambda, beta } => {
            if q < 0.0 {
                return Err(domain_err(family, q, "requires q >= 0"));
            }
            if q == 0.0 {
                // slope is the q -> 0+ limit, which diverges
                (0.0, f64::NAN)
            } else {
                neg_inv_gamma_ln_moment(lambda, beta, q)
            }
        }
        MotherLaw::ChiSquare => {
            if q <= -0.5 {
                return Err(domain_err(family, q, "requires q > -1/2"));
            }
            even_power_ln_moment(1.0, Normalization::Normalized, q)
        }
        MotherLaw::EvenPower { k, mode } => {
            if k as f64 * q <= -0.5 {
                return Err(domain_err(family, q, format!("requires k q > -1/2 (k = {k})")));
            }
            even_power_ln_moment(k as f64, mode, q)
        }
        MotherLaw::ChiSquareK { k, mode } => {
            if q <= -0.5 * k as f64 {
                return Err(domain_err(family, q, format!("requires q > -k/2 (k = {k})")));
            }
            chi_square_k_ln_moment(k as f64, mode, q)
        }
        MotherLaw::ChiSquareEps { eps } => chi_square_eps_ln_moment(eps, q),
    })
}

/// `log_b E Λ^q`. Exactly zero at `q = 0` for every family.
pub fn moment_log(spec: &ModelSpec, q: f64) -> Result<f64> {
    let (ln_m, _) = ln_moment_with_slope(spec, q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_m / spec.b.ln())
}

/// Rényi function `T(q) = q - 1 - (1/2) log_b E Λ^q`.
#[allow(non_snake_case)]
pub fn renyi_T(spec: &ModelSpec, q: f64) -> Result<f64> {
    Ok(q - 1.0 - 0.5 * moment_log(spec, q)?)
}

/// Singularity exponent `α = dT/dq` and spectrum value `f = q α - T(q)`.
pub fn spectrum_point(spec: &ModelSpec, q: f64) -> Result<(f64, f64)> {
    let (ln_m, slope) = ln_moment_with_slope(spec, q)?;
    let ln_b = spec.b.ln();
    let t = q - 1.0 - 0.5 * if q == 0.0 { 0.0 } else { ln_m / ln_b };
    let alpha = 1.0 - 0.5 * slope / ln_b;
    Ok((alpha, q * alpha - t))
}

/// Where a sampled curve came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Theoretical { spec: ModelSpec },
    Empirical { source: String },
}

/// Sampled Rényi function `(q, T(q))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenyiCurve {
    pub q: Vec<f64>,
    pub t: Vec<f64>,
    pub provenance: Provenance,
}

impl RenyiCurve {
    pub fn new(q: Vec<f64>, t: Vec<f64>, provenance: Provenance) -> Result<Self> {
        check_grid(&q)?;
        if q.len() != t.len() {
            return Err(Error::Malformed(format!("{} q values but {} T values", q.len(), t.len())));
        }
        Ok(Self { q, t, provenance })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Sampled spectrum: `α(q)` and `f(α(q))` on a q grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub q: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
}

/// Rejects empty, non-finite or non-increasing grids.
pub fn check_grid(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::InvalidArgument("q grid is empty".into()));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("q grid has non-finite values".into()));
    }
    if q.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("q grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `T`, `α` and `f` on every grid point.
pub fn evaluate_curves(spec: &ModelSpec, q_grid: &[f64]) -> Result<(RenyiCurve, SpectrumCurve)> {
    check_grid(q_grid)?;
    let mut t = Vec::with_capacity(q_grid.len());
    let mut alpha = Vec::with_capacity(q_grid.len());
    let mut f = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        t.push(renyi_T(spec, q)?);
        let (a, fa) = spectrum_point(spec, q)?;
        alpha.push(a);
        f.push(fa);
    }
    let provenance = Provenance::Theoretical { spec: *spec };
    Ok((
        RenyiCurve { q: q_grid.to_vec(), t, provenance },
        SpectrumCurve { q: q_grid.to_vec(), alpha, f },
    ))
}

/// `E Λ`, which is one unless a verbatim-mode law is in use.
pub fn mean(spec: &ModelSpec) -> Result<f64> {
    Ok(ln_moment_with_slope(spec, 1.0)?.0.exp())
}

/// `Var Λ`, or `+∞` when the second moment does not exist.
pub fn variance(spec: &ModelSpec) -> Result<f64> {
    let m1 = mean(spec)?;
    match ln_moment_with_slope(spec, 2.0) {
        Ok((ln_m2, _)) => Ok(ln_m2.exp() - m1 * m1),
        Err(Error::MomentDomain { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// One inequality of a validity report: `actual <relation> required`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub relation: String,
    #[serde(with = "crate::float_serde")]
    pub required: f64,
    #[serde(with = "crate::float_serde")]
    pub actual: f64,
    pub passed: bool,
}

impl ConditionCheck {
    fn greater(name: impl Into<String>, actual: f64, required: f64) -> Self {
        Self {
            name: name.into(),
            relation: ">".into(),
            required,
            actual,
            passed: actual > required,
        }
    }

    fn equal(name: impl Into<String>, actual: f64, required: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            relation: "=".into(),
            required,
            actual,
            passed: (actual - required).abs() <= tol,
        }
    }
}

/// Outcome of [`check_conditions`].
///
/// `satisfied` is the conjunction of `checks`. `extension_checks` hold stronger
/// conditions that widen the admissible q range and do not enter `satisfied`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub satisfied: bool,
    #[serde(with = "crate::float_serde")]
    pub sigma2_lambda: f64,
    pub checks: Vec<ConditionCheck>,
    pub extension_checks: Vec<ConditionCheck>,
    pub notes: Vec<String>,
}

/// Evaluates the convergence and moment conditions applicable to `spec`, with
/// `C` and `gamma` the constants of the covariance bound `|ρ(r)| <= C e^{-γ r}`.
#[allow(non_snake_case)]
pub fn check_conditions(spec: &ModelSpec, C: f64, gamma: f64) -> ValidityReport {
    let mut checks = vec![
        ConditionCheck::greater("covariance bound constant C > 0", C, 0.0),
        ConditionCheck::greater("covariance decay rate gamma > 0", gamma, 0.0),
    ];
    let mut extension_checks = Vec::new();
    let mut notes = Vec::new();
    let b = spec.b;

    let sigma2 = variance(spec).unwrap_or(f64::INFINITY);
    let general = |checks: &mut Vec<ConditionCheck>| {
        checks.push(ConditionCheck::greater("b > cbrt(1 + var Λ)", b, (1.0 + sigma2).cbrt()));
        checks.push(ConditionCheck::greater("b > exp(var Λ · C / 3)", b, (sigma2 * C / 3.0).exp()));
    };

    match spec.law {
        MotherLaw::LogNormal { sigma2: s2 } => {
            checks.push(ConditionCheck::greater("lognormal: b > exp(sigma_Y^2 / 3)", b, (s2 / 3.0).exp()));
        }
        MotherLaw::LogGamma { lambda, beta } => {
            checks.push(ConditionCheck::greater("lambda > 2", lambda, 2.0));
            checks.push(ConditionCheck::greater(
                "b > (1 + lambda^-2 / (1 - 2/lambda))^(beta/2)",
                b,
                gamma_set_bound(lambda, beta),
            ));
        }
        MotherLaw::LogNegInvGamma { lambda, beta } => {
            checks.push(ConditionCheck::greater("lambda > 2", lambda, 2.0));
            checks.push(ConditionCheck::greater(
                "b > (1 + lambda^-2 / (1 - 2/lambda))^(beta/2)",
                b,
                gamma_set_bound(lambda, beta),
            ));
            let bound = (ln_gamma_unchecked(beta) + (0.5 * beta - 1.0) * LN_2
                + ln_bessel_k_unchecked(beta, 2.0 * (2.0 * lambda).sqrt())
                - 0.5 * beta * lambda.ln()
                - 2.0 * ln_bessel_k_unchecked(beta, 2.0 * lambda.sqrt()))
                * 0.5;
            checks.push(ConditionCheck::greater(
                "b > sqrt(Γ(β) 2^(β/2-1) K_β(2√(2λ)) / (λ^(β/2) K_β(2√λ)^2))",
                b,
                bound.exp(),
            ));
        }
        MotherLaw::ChiSquare => {
            general(&mut checks);
            let s = sigma2.sqrt();
            extension_checks.push(ConditionCheck::greater(
                "q in [1,4]: b > exp(max(sigma_Λ C, 1)^4 / 3)",
                b,
                ((s * C).max(1.0).powi(4) / 3.0).exp(),
            ));
            notes.push(
                "the q in [1,4] bound is evaluated as exp(max(sigma_Λ C, 1)^4 / 3); \
                 some statements of it carry an extra leading sigma factor, which is not applied"
                    .into(),
            );
        }
        MotherLaw::ChiSquareEps { .. } => general(&mut checks),
        MotherLaw::EvenPower { mode, .. } | MotherLaw::ChiSquareK { mode, .. } => {
            general(&mut checks);
            if mode == Normalization::Verbatim {
                let m = mean(spec).unwrap_or(f64::NAN);
                checks.push(ConditionCheck::equal("mean-one mother: E Λ = 1", m, 1.0, 1e-9));
            }
        }
    }

    ValidityReport {
        satisfied: checks.iter().all(|c| c.passed),
        sigma2_lambda: sigma2,
        checks,
        extension_checks,
        notes,
    }
}

fn gamma_set_bound(lambda: f64, beta: f64) -> f64 {
    if lambda <= 2.0 {
        return f64::INFINITY;
    }
    (1.0 + (1.0 / (lambda * lambda)) / (1.0 - 2.0 / lambda)).powf(0.5 * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ln2() -> f64 {
        LN_2
    }

    fn all_normalized_specs(b: f64) -> Vec<ModelSpec> {
        vec![
            ModelSpec::log_normal(b, 1.0).unwrap(),
            ModelSpec::log_gamma(b, 3.0, 2.0).unwrap(),
            ModelSpec::log_neg_inv_gamma(b, 3.0, 2.0).unwrap(),
            ModelSpec::chi_square(b).unwrap(),
            ModelSpec::chi_square_eps(b, 0.3).unwrap(),
            ModelSpec::even_power(b, 2, Normalization::Normalized).unwrap(),
            ModelSpec::chi_square_k(b, 2, Normalization::Normalized).unwrap(),
        ]
    }

    #[test]
    fn moment_log_examples() {
        let ln = ModelSpec::log_normal(2.0, 1.0).unwrap();
        assert!(moment_log(&ln, 1.0).unwrap().abs() < 1e-15);
        let chi = ModelSpec::chi_square(2.0).unwrap();
        assert_relative_eq!(moment_log(&chi, 2.0).unwrap(), 3f64.log2(), max_relative = 1e-12);
        // gamma MGF: E e^{qZ} = (1 - q/λ)^{-β}
        let lg = ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap();
        let mgf = |q: f64| (1.0 - q / 3.0f64).powf(-2.0);
        let want = (mgf(2.0) / mgf(1.0).powf(2.0)).log2();
        assert_relative_eq!(moment_log(&lg, 2.0).unwrap(), want, max_relative = 1e-12);
        assert!(matches!(moment_log(&lg, 3.0), Err(Error::MomentDomain { .. })));
    }

    #[test]
    fn renyi_examples() {
        let ln = ModelSpec::log_normal(2.0, 1.0).unwrap();
        assert_relative_eq!(renyi_T(&ln, 2.0).unwrap(), 1.0 - 2.0 / (4.0 * ln2()), max_relative = 1e-12);
        assert_relative_eq!(renyi_T(&ln, 2.0).unwrap(), 0.278_652_5, epsilon = 1e-7);

        let lg = ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap();
        let direct = 2.0 * (1.0 - (2.0f64 / 3.0).log2()) + (1.0f64 / 3.0).log2() - 1.0;
        assert_relative_eq!(renyi_T(&lg, 2.0).unwrap(), direct, max_relative = 1e-12);
        assert_relative_eq!(renyi_T(&lg, 2.0).unwrap(), 0.584_962_5, epsilon = 1e-7);

        let k6 = ModelSpec::chi_square_k(2.0, 2, Normalization::Verbatim).unwrap();
        assert_relative_eq!(renyi_T(&k6, 2.0).unwrap(), -0.5, epsilon = 1e-12);
        assert_relative_eq!(renyi_T(&k6, 1.0).unwrap(), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn direct_closed_forms_match() {
        // closed forms written out directly, independent of the shared scaling law
        let b: f64 = 2.7;
        let logb = |x: f64| x.ln() / b.ln();
        let lg_ = |x: f64| ln_gamma_unchecked(x);
        let (lambda, beta): (f64, f64) = (3.5, 1.7);
        let c_u = (2.0 * lambda.powf(beta / 2.0) * crate::specfun::bessel_k(beta, 2.0 * lambda.sqrt()).unwrap()
            / lg_(beta).exp())
        .ln();
        for &q in &[0.7, 1.0, 1.4, 2.0, 2.9] {
            let s2 = 1.3;
            let m1 = q * (1.0 + s2 / (4.0 * b.ln())) - q * q * s2 / (4.0 * b.ln()) - 1.0;
            assert_relative_eq!(renyi_T(&ModelSpec::log_normal(b, s2).unwrap(), q).unwrap(), m1, max_relative = 1e-12);

            let m2 = q * (1.0 - beta / 2.0 * logb(1.0 - 1.0 / lambda)) + beta / 2.0 * logb(1.0 - q / lambda) - 1.0;
            assert_relative_eq!(
                renyi_T(&ModelSpec::log_gamma(b, lambda, beta).unwrap(), q).unwrap(),
                m2,
                epsilon = 1e-12
            );

            let m3 = q * (1.0 + c_u / (2.0 * b.ln()))
                - 0.5 * logb(q.powf(beta / 2.0) * crate::specfun::bessel_k(beta, 2.0 * (q * lambda).sqrt()).unwrap())
                - (1.0 + 0.5 * logb(2.0 * lambda.powf(beta / 2.0) / lg_(beta).exp()));
            assert_relative_eq!(
                renyi_T(&ModelSpec::log_neg_inv_gamma(b, lambda, beta).unwrap(), q).unwrap(),
                m3,
                epsilon = 1e-12
            );

            let m4 = q - 1.0 - 0.5 * logb(2f64.powf(q) * lg_(q + 0.5).exp() / PI.sqrt());
            assert_relative_eq!(renyi_T(&ModelSpec::chi_square(b).unwrap(), q).unwrap(), m4, epsilon = 1e-12);

            let k = 3.0;
            let m5 = q - 1.0 - 0.5 * logb(2f64.powf(k * q) * lg_(k * q + 0.5).exp() / PI.sqrt());
            let spec5 = ModelSpec::even_power(b, 3, Normalization::Verbatim).unwrap();
            assert_relative_eq!(renyi_T(&spec5, q).unwrap(), m5, epsilon = 1e-11);

            let m6 = q * (1.0 - 0.5 * logb(2.0 / k)) - 1.0
                - 0.5 * logb(2f64.powf(q) * lg_(q + k / 2.0).exp() / lg_(k / 2.0).exp());
            let spec6 = ModelSpec::chi_square_k(b, 3, Normalization::Verbatim).unwrap();
            assert_relative_eq!(renyi_T(&spec6, q).unwrap(), m6, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectrum_examples() {
        let ln = ModelSpec::log_normal(2.0, 1.0).unwrap();
        let (a, f) = spectrum_point(&ln, 1.0).unwrap();
        assert_relative_eq!(a, 1.0 - 1.0 / (4.0 * ln2()), max_relative = 1e-12);
        assert_relative_eq!(f, 1.0 - 1.0 / (4.0 * ln2()), max_relative = 1e-12);

        let chi = ModelSpec::chi_square(2.0).unwrap();
        let psi32 = 2.0 - crate::specfun::EULER_GAMMA - 2.0 * ln2();
        let (a, _) = spectrum_point(&chi, 1.0).unwrap();
        assert_relative_eq!(a, 0.5 - psi32 / (2.0 * ln2()), max_relative = 1e-12);
        assert!((a - 0.4737).abs() < 1e-4);
    }

    #[test]
    fn legendre_identity_everywhere() {
        for spec in all_normalized_specs(2.3) {
            for i in 1..30 {
                let q = 0.1 * i as f64;
                let (a, f) = spectrum_point(&spec, q).unwrap();
                let t = renyi_T(&spec, q).unwrap();
                assert!((f + t - q * a).abs() < 1e-12, "{:?} q {q}", spec.family());
            }
        }
    }

    #[test]
    fn alpha_matches_finite_differences() {
        let h = 1e-5;
        let mut specs = all_normalized_specs(2.0);
        specs.push(ModelSpec::log_neg_inv_gamma(1.7, 2.2, 0.6).unwrap());
        specs.push(ModelSpec::even_power(3.0, 3, Normalization::Verbatim).unwrap());
        specs.push(ModelSpec::chi_square_k(3.0, 5, Normalization::Verbatim).unwrap());
        for spec in specs {
            for i in 0..=24 {
                let q = 0.5 + 0.1 * i as f64;
                let fd = (renyi_T(&spec, q + h).unwrap() - renyi_T(&spec, q - h).unwrap()) / (2.0 * h);
                let (a, _) = spectrum_point(&spec, q).unwrap();
                assert!((a - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{:?} q {q}: {a} vs {fd}", spec.family());
            }
        }
    }

    #[test]
    fn baselines_at_one_and_zero() {
        for spec in all_normalized_specs(2.0) {
            assert!(renyi_T(&spec, 1.0).unwrap().abs() < 1e-9, "{:?}", spec.family());
            assert_eq!(moment_log(&spec, 0.0).unwrap(), 0.0);
            assert_eq!(renyi_T(&spec, 0.0).unwrap(), -1.0);
            assert!((renyi_T(&spec, 1e-9).unwrap() + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn chi_square_is_even_power_one() {
        for mode in [Normalization::Normalized, Normalization::Verbatim] {
            let a = ModelSpec::chi_square(2.5).unwrap();
            let b = ModelSpec::even_power(2.5, 1, mode).unwrap();
            for i in 0..40 {
                let q = -0.4 + 0.1 * i as f64;
                assert!((renyi_T(&a, q).unwrap() - renyi_T(&b, q).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eps_quadrature_is_exact_for_polynomial_moment() {
        for &eps in &[1e-6, 0.1, 0.5, 0.9] {
            let spec = ModelSpec::chi_square_eps(2.0, eps).unwrap();
            let exact = (1.0 - eps) * (1.0 - eps) * 3.0 + 2.0 * eps * (1.0 - eps) + eps * eps;
            let got = 2f64.powf(moment_log(&spec, 2.0).unwrap());
            assert_relative_eq!(got, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn eps_family_tends_to_chi_square() {
        let eps = ModelSpec::chi_square_eps(2.0, 1e-6).unwrap();
        let chi = ModelSpec::chi_square(2.0).unwrap();
        for i in 0..=20 {
            let q = 1.0 + 0.05 * i as f64;
            assert!((renyi_T(&eps, q).unwrap() - renyi_T(&chi, q).unwrap()).abs() < 1e-4);
        }
    }

    #[test]
    fn jensen_and_concavity() {
        for spec in all_normalized_specs(2.0) {
            let grid: Vec<f64> = (1..300).map(|i| 0.01 * i as f64).collect();
            let t: Vec<f64> = grid.iter().map(|&q| renyi_T(&spec, q).unwrap()).collect();
            for w in t.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-10, "{:?}", spec.family());
            }
            for (q, tq) in grid.iter().zip(&t) {
                if *q >= 1.0 {
                    assert!(*tq <= q - 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn evaluate_curves_rejects_bad_grids() {
        let spec = ModelSpec::log_normal(2.0, 1.0).unwrap();
        assert!(evaluate_curves(&spec, &[1.0, 1.0]).is_err());
        assert!(evaluate_curves(&spec, &[]).is_err());
        let (r, s) = evaluate_curves(&spec, &[1.0]).unwrap();
        assert_eq!(r.t, vec![0.0]);
        assert_eq!(s.q, vec![1.0]);
    }

    #[test]
    fn invalid_specs() {
        assert!(ModelSpec::log_normal(1.0, 1.0).is_err());
        assert!(ModelSpec::chi_square_eps(2.0, 1.0).is_err());
        assert!(ModelSpec::even_power(2.0, 0, Normalization::Normalized).is_err());
        assert!(ModelSpec::log_gamma(2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn variance_closed_forms() {
        let k = 3u32;
        let ep = ModelSpec::even_power(2.0, k, Normalization::Normalized).unwrap();
        let want = PI.sqrt() * ln_gamma_unchecked(2.0 * k as f64 + 0.5).exp()
            / ln_gamma_unchecked(k as f64 + 0.5).exp().powi(2)
            - 1.0;
        assert_relative_eq!(variance(&ep).unwrap(), want, max_relative = 1e-10);
        let lg = ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap();
        let want = (2.0f64 / 3.0).powi(4) * 9.0 - 1.0;
        assert_relative_eq!(variance(&lg).unwrap(), want, max_relative = 1e-12);
        let ck = ModelSpec::chi_square_k(2.0, 4, Normalization::Normalized).unwrap();
        assert_relative_eq!(variance(&ck).unwrap(), 0.5, max_relative = 1e-12);
        let e = ModelSpec::chi_square_eps(2.0, 0.25).unwrap();
        assert_relative_eq!(variance(&e).unwrap(), 2.0 * 0.75 * 0.75, max_relative = 1e-12);
        let ln = ModelSpec::log_normal(2.0, 1.0).unwrap();
        assert_relative_eq!(variance(&ln).unwrap(), 1f64.exp() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn condition_examples() {
        let r = check_conditions(&ModelSpec::log_normal(2.0, 1.0).unwrap(), 1.0, 1.0);
        assert!(r.satisfied);
        let c = r.checks.iter().find(|c| c.name.starts_with("lognormal")).unwrap();
        assert_relative_eq!(c.required, (1.0f64 / 3.0).exp(), max_relative = 1e-12);

        let r = check_conditions(&ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap(), 1.0, 1.0);
        assert!(r.satisfied);
        let c = r.checks.iter().find(|c| c.name.starts_with("b > (1 + lambda")).unwrap();
        assert_relative_eq!(c.required, 4.0 / 3.0, max_relative = 1e-12);

        for b in [1.5, 2.0, 10.0] {
            let r = check_conditions(&ModelSpec::log_gamma(b, 2.0, 1.0).unwrap(), 1.0, 1.0);
            assert!(!r.satisfied);
        }
    }

    #[test]
    fn general_bound_hand_computed() {
        // chi-square mother: var Λ = 2, so the bound is max(3^(1/3), e^(2C/3))
        let ok = check_conditions(&ModelSpec::chi_square(2.0).unwrap(), 1.0, 1.0);
        assert!(ok.satisfied);
        let fail = check_conditions(&ModelSpec::chi_square(1.9).unwrap(), 1.0, 1.0);
        assert!(!fail.satisfied);
        let c2 = check_conditions(&ModelSpec::chi_square(3.7).unwrap(), 2.0, 1.0);
        assert!(!c2.satisfied);
        let c2 = check_conditions(&ModelSpec::chi_square(3.8).unwrap(), 2.0, 1.0);
        assert!(c2.satisfied);
        let ext = &ok.extension_checks[0];
        assert_relative_eq!(ext.required, (4.0f64 / 3.0).exp(), max_relative = 1e-12);
        assert!(!ext.passed);

        let verb = check_conditions(&ModelSpec::chi_square_k(5.0, 2, Normalization::Verbatim).unwrap(), 1.0, 1.0);
        assert!(!verb.satisfied);
        assert!(verb.checks.iter().any(|c| c.name.starts_with("mean-one") && !c.passed));
    }
}
