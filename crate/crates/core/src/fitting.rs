//! Least-squares fits of the model families to sampled Rényi curves.
//!
//! Every family is fitted in a reparameterized form of `T(q) - q + 1`:
//!
//! | family          | model of `T(q) - q + 1`                                       |
//! |-----------------|---------------------------------------------------------------|
//! | LogNormal       | `a (q - q²)`                                                  |
//! | ChiSquare       | `A log2(2^q Γ(q + 1/2) / √π)`                                 |
//! | LogGamma        | `(ln(1 - B q) - q ln(1 - B)) / A`                             |
//! | LogNegInvGamma  | `-A (ln L(q) - q ln L(1))`, `L(q) = 2 C^B q^(B/2) K_B(2C√q) / Γ(B)` |
//! | EvenPower       | `A log2 E Λ_k^q`                                              |
//! | ChiSquareK      | `-A log2 E Λ_k^q`                                             |
//!
//! The first two are linear and solved in closed form. For the rest the
//! leading multiplier is eliminated by projection, the remaining shape
//! parameters go through [`levenberg_marquardt`] with numeric Jacobians, and a
//! final run over all parameters polishes the result.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{chi_square_k_ln_moment, even_power_ln_moment, Family, Normalization, RenyiCurve};
use crate::specfun::{ln_bessel_k_unchecked, ln_gamma_unchecked};

const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-10;
const GRADIENT_TOL: f64 = 1e-10;
const JACOBIAN_STEP: f64 = 1e-7;

/// A named parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
}

fn params(names: &[&str], values: &[f64]) -> Vec<Param> {
    names.iter().zip(values).map(|(n, v)| Param { name: (*n).to_string(), value: *v }).collect()
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SmallGradient,
    SmallStep,
    MaxIterations,
    NonFinite,
    NoProgress,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    /// Normalization of the moment kernel, for EvenPower and ChiSquareK fits.
    pub mode: Option<Normalization>,
    pub params: Vec<Param>,
    pub natural_params: Vec<Param>,
    pub rmse: f64,
    /// Model minus observation at each q.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Nearest integer to a continuous `k` estimate.
    pub nearest_k: Option<u32>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn natural(&self, name: &str) -> Option<f64> {
        self.natural_params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

pub fn rmse(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

fn check_curve(curve: &RenyiCurve, min_points: usize) -> Result<()> {
    if curve.q.len() != curve.t.len() {
        return Err(Error::Malformed(format!("{} q values but {} T values", curve.q.len(), curve.t.len())));
    }
    if curve.q.len() < min_points {
        return Err(Error::InvalidArgument(format!("need at least {min_points} curve points, got {}", curve.q.len())));
    }
    if curve.q.iter().chain(&curve.t).any(|v| !v.is_finite()) {
        return Err(Error::Malformed("curve has non-finite values".into()));
    }
    Ok(())
}

fn chi_square_regressor(q: f64) -> f64 {
    even_power_ln_moment(1.0, Normalization::Verbatim, q).0 / std::f64::consts::LN_2
}

/// Closed-form least squares without intercept for LogNormal (`a`) or ChiSquare (`A`).
pub fn fit_linear_family(curve: &RenyiCurve, family: Family) -> Result<FitResult> {
    check_curve(curve, 2)?;
    let regressor: fn(f64) -> f64 = match family {
        Family::LogNormal => |q| q - q * q,
        Family::ChiSquare => {
            if curve.q.iter().any(|&q| q <= -0.5) {
                return Err(Error::InvalidArgument("chi-square regressor needs q > -1/2".into()));
            }
            chi_square_regressor
        }
        other => return Err(Error::InvalidArgument(format!("{other} is not a linear family"))),
    };
    let x: Vec<f64> = curve.q.iter().map(|&q| regressor(q)).collect();
    let y: Vec<f64> = curve.q.iter().zip(&curve.t).map(|(q, t)| t - q + 1.0).collect();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let coef = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(a, b)| coef * a - b).collect();
    let (name, natural) = match family {
        Family::LogNormal => ("a", vec![]),
        _ => {
            let natural = if coef < 0.0 { params(&["b"], &[2f64.powf(-0.5 / coef)]) } else { vec![] };
            ("A", natural)
        }
    };
    Ok(FitResult {
        family,
        mode: None,
        params: params(&[name], &[coef]),
        natural_params: natural,
        rmse: rmse(&residuals),
        residuals,
        converged: true,
        iterations: 0,
        stop_reason: StopReason::ClosedForm,
        nearest_k: None,
    })
}

/// Box constraints; infinite entries are unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    fn clamp(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub cost: f64,
    pub gradient_norm: f64,
}

fn jacobian<F>(f: &F, p: &[f64], r0: &[f64], bounds: Option<&Bounds>) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut probe = p.to_vec();
    for j in 0..p.len() {
        let mut h = JACOBIAN_STEP * p[j].abs().max(1e-3);
        if let Some(b) = bounds {
            if p[j] + h > b.upper[j] {
                h = -h;
            }
        }
        probe[j] = p[j] + h;
        let r1 = f(&probe);
        probe[j] = p[j];
        if r1.len() != r0.len() || r1.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for i in 0..r0.len() {
            jac[(i, j)] = (r1[i] - r0[i]) / h;
        }
    }
    Some(jac)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn half_cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Stopping rules for [`levenberg_marquardt_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step size below which the run stops.
    pub step_tol: f64,
    /// Absolute gradient norm below which the run stops; 0 disables the test.
    pub gradient_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: MAX_ITERATIONS, step_tol: STEP_TOL, gradient_tol: GRADIENT_TOL }
    }
}

/// Minimizes `|r(p)|²` by damped Gauss–Newton steps with Marquardt scaling.
///
/// Non-finite residuals at a trial point only increase the damping; if the
/// residuals are non-finite at `init` the run stops immediately and reports
/// non-convergence.
pub fn levenberg_marquardt<F>(residual_map: F, init: &[f64], bounds: Option<&Bounds>) -> (Vec<f64>, LmDiagnostics)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    levenberg_marquardt_with(residual_map, init, bounds, &LmOptions::default())
}

/// [`levenberg_marquardt`] with explicit stopping rules.
pub fn levenberg_marquardt_with<F>(
    residual_map: F,
    init: &[f64],
    bounds: Option<&Bounds>,
    options: &LmOptions,
) -> (Vec<f64>, LmDiagnostics)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut p = init.to_vec();
    if let Some(b) = bounds {
        b.clamp(&mut p);
    }
    let mut r = residual_map(&p);
    let mut diag = LmDiagnostics {
        iterations: 0,
        converged: false,
        stop_reason: StopReason::MaxIterations,
        cost: half_cost(&r),
        gradient_norm: f64::NAN,
    };
    if r.iter().any(|v| !v.is_finite()) {
        diag.stop_reason = StopReason::NonFinite;
        return (p, diag);
    }
    let mut damping = 1e-6;
    let mut last_jac_scale = 0.0;
    while diag.iterations < options.max_iterations {
        let Some(jac) = jacobian(&residual_map, &p, &r, bounds) else {
            diag.stop_reason = StopReason::NonFinite;
            break;
        };
        let rv = DVector::from_column_slice(&r);
        let g = jac.transpose() * &rv;
        diag.gradient_norm = g.norm();
        last_jac_scale = jac.norm();
        if diag.gradient_norm < options.gradient_tol {
            diag.stop_reason = StopReason::SmallGradient;
            break;
        }
        let jtj = jac.transpose() * &jac;
        diag.iterations += 1;
        let cost = half_cost(&r);
        let mut accepted = false;
        let mut small_step = false;
        while damping < 1e16 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let step = match a.clone().cholesky() {
                Some(c) => c.solve(&(-&g)),
                None => match a.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        damping *= 10.0;
                        continue;
                    }
                },
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(b) = bounds {
                b.clamp(&mut trial);
            }
            let rt = residual_map(&trial);
            let finite = rt.iter().all(|v| v.is_finite());
            if finite && half_cost(&rt) <= cost {
                let dp: f64 = p.iter().zip(&trial).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let pn: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                small_step = dp <= options.step_tol * (pn + options.step_tol);
                p = trial;
                r = rt;
                damping = (damping / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            damping *= 4.0;
        }
        diag.cost = half_cost(&r);
        if !accepted {
            diag.stop_reason = StopReason::NoProgress;
            break;
        }
        if small_step {
            diag.stop_reason = StopReason::SmallStep;
            break;
        }
    }
    if let Some(jac) = jacobian(&residual_map, &p, &r, bounds) {
        diag.gradient_norm = (jac.transpose() * DVector::from_column_slice(&r)).norm();
        last_jac_scale = jac.norm();
    }
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tolerance = GRADIENT_TOL.max(1e-6 * rn * last_jac_scale);
    diag.converged = matches!(
        diag.stop_reason,
        StopReason::SmallGradient | StopReason::SmallStep | StopReason::NoProgress
    ) && diag.gradient_norm <= tolerance;
    (p, diag)
}

/// Residual model of `T(q) - q + 1` for a nonlinear family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearModel {
    pub family: Family,
    pub mode: Normalization,
}

impl NonlinearModel {
    pub fn new(family: Family, mode: Normalization) -> Result<Self> {
        match family {
            Family::LogGamma | Family::LogNegInvGamma | Family::EvenPower | Family::ChiSquareK => {
                Ok(Self { family, mode })
            }
            other => Err(Error::InvalidArgument(format!("{other} is not fitted by nonlinear least squares"))),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self.family {
            Family::LogGamma => &["A", "B"],
            Family::LogNegInvGamma => &["A", "B", "C"],
            _ => &["A", "k"],
        }
    }

    pub fn default_init(&self) -> Vec<f64> {
        match self.family {
            Family::LogGamma => vec![0.03, 0.005],
            Family::LogNegInvGamma => vec![0.25, 5.0, 0.4],
            Family::EvenPower => vec![-0.1, 1.0],
            _ => vec![0.1, 2.0],
        }
    }

    pub fn bounds(&self, q: &[f64]) -> Bounds {
        let inf = f64::INFINITY;
        let q_max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
        match self.family {
            Family::LogGamma => {
                let upper = if q_max > 1.0 { (1.0 - 1e-12) / q_max } else { 1.0 - 1e-12 };
                Bounds { lower: vec![-inf, 1e-12], upper: vec![inf, upper] }
            }
            Family::LogNegInvGamma => Bounds { lower: vec![-inf, 1e-8, 1e-8], upper: vec![inf, 1e3, 1e3] },
            Family::EvenPower => {
                // k q > -1/2 caps k from above when the grid has negative q
                let k_max = if q_min < 0.0 { -0.5 / q_min * (1.0 - 1e-9) } else { inf };
                Bounds { lower: vec![-inf, 1e-8], upper: vec![inf, k_max] }
            }
            _ => {
                let k_min = if q_min < 0.0 { -2.0 * q_min * (1.0 + 1e-9) } else { 1e-8 };
                Bounds { lower: vec![-inf, k_min], upper: vec![inf; 2] }
            }
        }
    }

    /// `T(q) - q + 1` with the leading multiplier removed: `value(p) = A·shape` or `shape / A`.
    pub fn shape(&self, theta: &[f64], q: f64) -> f64 {
        let mut p = vec![1.0];
        p.extend_from_slice(theta);
        self.value(&p, q)
    }

    fn multiplier_from_coefficient(&self, c: f64) -> Option<f64> {
        let a = match self.family {
            Family::LogGamma => 1.0 / c,
            _ => c,
        };
        (a.is_finite() && a != 0.0).then_some(a)
    }

    /// `T(q) - q + 1` under parameters `p`.
    pub fn value(&self, p: &[f64], q: f64) -> f64 {
        let log2 = std::f64::consts::LN_2;
        match self.family {
            Family::LogGamma => {
                let (a, b) = (p[0], p[1]);
                ((-b * q).ln_1p() - q * (-b).ln_1p()) / a
            }
            Family::LogNegInvGamma => {
                let (a, b, c) = (p[0], p[1], p[2]);
                let ln_l = |x: f64| {
                    if x == 0.0 {
                        return 0.0;
                    }
                    std::f64::consts::LN_2 + b * c.ln() + 0.5 * b * x.ln()
                        + ln_bessel_k_unchecked(b, 2.0 * c * x.sqrt())
                        - ln_gamma_unchecked(b)
                };
                -a * (ln_l(q) - q * ln_l(1.0))
            }
            Family::EvenPower => p[0] * even_power_ln_moment(p[1], self.mode, q).0 / log2,
            _ => -p[0] * chi_square_k_ln_moment(p[1], self.mode, q).0 / log2,
        }
    }

    fn natural(&self, p: &[f64], b_known: Option<f64>) -> Vec<Param> {
        match self.family {
            Family::LogGamma => {
                let mut out = params(&["lambda"], &[1.0 / p[1]]);
                if let Some(b) = b_known {
                    out.extend(params(&["beta"], &[2.0 * b.ln() / p[0]]));
                }
                out
            }
            Family::LogNegInvGamma => params(&["b", "beta", "lambda"], &[(0.5 / p[0]).exp(), p[1], p[2] * p[2]]),
            Family::EvenPower => params(&["b", "k"], &[2f64.powf(-0.5 / p[0]), p[1]]),
            _ => params(&["b", "k"], &[2f64.powf(0.5 / p[0]), p[1]]),
        }
    }
}

/// Options shared by the nonlinear fits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    pub init: Option<Vec<f64>>,
    /// Number of log-spaced multi-starts around the initial shape parameters; 0 or 1 runs once.
    /// The leading multiplier of `init` only has to lie in the model domain.
    pub starts: usize,
    /// Known scaling factor, used only to recover natural parameters.
    pub b: Option<f64>,
}

/// Fits one nonlinear family from a single starting point.
pub fn fit_nonlinear_family(
    curve: &RenyiCurve,
    family: Family,
    mode: Normalization,
    init: Option<&[f64]>,
) -> Result<FitResult> {
    fit_with_options(curve, family, mode, &FitOptions { init: init.map(<[f64]>::to_vec), starts: 1, b: None })
}

/// Multi-start nonlinear fit keeping the lowest-RMSE run.
pub fn fit_with_options(curve: &RenyiCurve, family: Family, mode: Normalization, options: &FitOptions) -> Result<FitResult> {
    check_curve(curve, 2)?;
    let model = NonlinearModel::new(family, mode)?;
    let init = options.init.clone().unwrap_or_else(|| model.default_init());
    if init.len() != model.param_names().len() {
        return Err(Error::InvalidArgument(format!(
            "{family} takes {} parameters, got {}",
            model.param_names().len(),
            init.len()
        )));
    }
    let bounds = model.bounds(&curve.q);
    let target: Vec<f64> = curve.q.iter().zip(&curve.t).map(|(q, t)| t - q + 1.0).collect();
    let residual = |p: &[f64]| -> Vec<f64> {
        curve.q.iter().zip(&target).map(|(&q, y)| model.value(p, q) - y).collect()
    };
    let r0 = residual(&init);
    let inside = init.iter().enumerate().all(|(i, v)| *v >= bounds.lower[i] && *v <= bounds.upper[i]);
    if !inside || r0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InitDomain(format!("{family} initial values {init:?} leave the model domain on this q grid")));
    }

    let starts = options.starts.max(1);
    let shape_bounds = Bounds { lower: bounds.lower[1..].to_vec(), upper: bounds.upper[1..].to_vec() };
    let projected = |theta: &[f64]| -> (f64, Vec<f64>) {
        let g: Vec<f64> = curve.q.iter().map(|&q| model.shape(theta, q)).collect();
        let c = dot(&g, &target) / dot(&g, &g);
        (c, g.iter().zip(&target).map(|(g, y)| c * g - y).collect())
    };
    let mut best: Option<(Vec<f64>, LmDiagnostics, f64)> = None;
    for s in 0..starts {
        let factor = if starts == 1 { 1.0 } else { 10f64.powf(-1.0 + 2.0 * s as f64 / (starts - 1) as f64) };
        let mut theta: Vec<f64> = init[1..].iter().map(|v| v * factor).collect();
        shape_bounds.clamp(&mut theta);
        if projected(&theta).1.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let (theta, _) = levenberg_marquardt(|t: &[f64]| projected(t).1, &theta, Some(&shape_bounds));
        let (c, _) = projected(&theta);
        let Some(a) = model.multiplier_from_coefficient(c) else {
            continue;
        };
        let mut start = vec![a];
        start.extend_from_slice(&theta);
        if residual(&start).iter().any(|v| !v.is_finite()) {
            continue;
        }
        let polish = LmOptions { gradient_tol: 0.0, ..LmOptions::default() };
        let (p, diag) = levenberg_marquardt_with(&residual, &start, Some(&bounds), &polish);
        let r = residual(&p);
        if r.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let score = rmse(&r);
        if best.as_ref().map_or(true, |b| score < b.2) {
            best = Some((p, diag, score));
        }
    }
    let Some((p, diag, score)) = best else {
        return Err(Error::InitDomain(format!("no start for {family} produced finite residuals")));
    };
    let residuals = residual(&p);
    let nearest_k = match family {
        Family::EvenPower | Family::ChiSquareK => Some(p[1].round().max(1.0) as u32),
        _ => None,
    };
    Ok(FitResult {
        family,
        mode: matches!(family, Family::EvenPower | Family::ChiSquareK).then_some(mode),
        params: params(model.param_names(), &p),
        natural_params: model.natural(&p, options.b),
        rmse: score,
        residuals,
        converged: diag.converged,
        iterations: diag.iterations,
        stop_reason: diag.stop_reason,
        nearest_k,
    })
}

/// Fits any family, dispatching to the linear or nonlinear solver.
pub fn fit_family(curve: &RenyiCurve, family: Family, mode: Normalization, options: &FitOptions) -> Result<FitResult> {
    match family {
        Family::LogNormal | Family::ChiSquare => {
            let mut fit = fit_linear_family(curve, family)?;
            if let (Family::LogNormal, Some(b)) = (family, options.b) {
                fit.natural_params = params(&["sigma2"], &[4.0 * b.ln() * fit.params[0].value]);
            }
            Ok(fit)
        }
        Family::ChiSquareEps => Err(Error::InvalidArgument(
            "the chi-square-eps family has no reparameterized fitting form".into(),
        )),
        _ => fit_with_options(curve, family, mode, options),
    }
}
