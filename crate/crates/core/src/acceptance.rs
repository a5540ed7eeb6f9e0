//! End-to-end acceptance checks, shared by the `selftest` subcommand and the
//! `acceptance` integration test.

use std::fmt;
use std::time::{Duration, Instant};

use crate::cascade::{simulate_cascade_batch, CascadeConfig, CovarianceSpec};
use crate::cli::run_command;
use crate::estimator::{cell_masses, empirical_T, empirical_spectrum, preprocess_shift, SphericalMap};
use crate::fitting::{fit_family, fit_linear_family, FitOptions, FitResult};
use crate::models::{
    check_conditions, evaluate_curves, moment_log, renyi_T, spectrum_point, Family, ModelSpec, Normalization, Provenance,
    RenyiCurve,
};
use crate::specfun::{bessel_k, bessel_k_any_order, digamma, ln_gamma, normal_sample, RandomStream};
use crate::sphere::{build_mesh, nested_to_ring, ring_to_nested, Ordering, PixelGrid, Window};

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} [{}] {:.2}s (limit {}s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

/// Runs `check`, which returns `(ok, detail)`, and folds in the time limit.
fn timed(id: u8, title: &'static str, limit_secs: u64, check: impl FnOnce() -> (bool, String)) -> CriterionOutcome {
    let start = Instant::now();
    let (ok, detail) = check();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_secs);
    let in_time = elapsed <= limit;
    let detail = if in_time { detail } else { format!("{detail}; over time limit") };
    CriterionOutcome { id, title, passed: ok && in_time, detail, elapsed, limit }
}

fn nm() -> Normalization {
    Normalization::Normalized
}

/// Parameter grids used for the baseline checks.
pub fn baseline_specs() -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for b in [2.0, 3.0, 5.0] {
        for s2 in [0.5, 1.0, 2.0] {
            out.push(ModelSpec::log_normal(b, s2).unwrap());
        }
    }
    for lambda in [3.0, 5.0, 10.0] {
        for beta in [1.5, 2.0, 3.0] {
            out.push(ModelSpec::log_gamma(2.0, lambda, beta).unwrap());
            out.push(ModelSpec::log_neg_inv_gamma(2.0, lambda, beta).unwrap());
        }
    }
    for b in [1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.0, 10.0, 20.0] {
        out.push(ModelSpec::chi_square(b).unwrap());
    }
    for b in [2.0, 3.0, 5.0] {
        for eps in [0.01, 0.1, 0.5] {
            out.push(ModelSpec::chi_square_eps(b, eps).unwrap());
        }
        for k in [1, 2, 3] {
            out.push(ModelSpec::even_power(b, k, nm()).unwrap());
            out.push(ModelSpec::chi_square_k(b, k, nm()).unwrap());
        }
    }
    out
}

/// `T(1) = 0` and `T(q) -> -1` as `q -> 0+`.
///
/// The limit is read off by Richardson extrapolation of `T(1e-4)` and
/// `T(2e-4)`, which removes the linear term `q α(0)`, and directly at `q = 1e-8`.
pub fn criterion_1() -> CriterionOutcome {
    timed(1, "baselines T(1)=0 and T(0+)=-1", 1, || {
        let mut worst_one = 0.0f64;
        let mut worst_limit = 0.0f64;
        let mut raw = 0.0f64;
        for spec in baseline_specs() {
            let t = |q: f64| renyi_T(&spec, q).unwrap();
            worst_one = worst_one.max(t(1.0).abs());
            worst_limit = worst_limit.max((t(1e-8) + 1.0).abs());
            raw = raw.max((t(1e-4) + 1.0).abs());
        }
        (
            worst_one <= 1e-9 && worst_limit <= 1e-6,
            format!("max|T(1)| = {worst_one:.1e}, max|T(1e-8)+1| = {worst_limit:.1e}; at q=1e-4 the linear term leaves {raw:.1e}"),
        )
    })
}

/// Specs covering every family and mode for the derivative check.
pub fn derivative_specs() -> Vec<ModelSpec> {
    let mut out = vec![
        ModelSpec::log_normal(2.0, 1.0).unwrap(),
        ModelSpec::log_normal(3.0, 2.0).unwrap(),
        ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap(),
        ModelSpec::log_gamma(1.5, 6.0, 0.7).unwrap(),
        ModelSpec::log_neg_inv_gamma(2.0, 3.0, 2.0).unwrap(),
        ModelSpec::log_neg_inv_gamma(3.0, 0.8, 0.6).unwrap(),
        ModelSpec::chi_square(2.0).unwrap(),
        ModelSpec::chi_square_eps(2.0, 0.1).unwrap(),
        ModelSpec::chi_square_eps(4.0, 0.6).unwrap(),
    ];
    for mode in [Normalization::Normalized, Normalization::Verbatim] {
        for k in [1, 2, 4] {
            out.push(ModelSpec::even_power(2.0, k, mode).unwrap());
            out.push(ModelSpec::chi_square_k(3.0, k, mode).unwrap());
        }
    }
    out
}

pub fn criterion_2() -> CriterionOutcome {
    timed(2, "alpha(q) matches finite differences of T", 5, || {
        let h = 1e-5;
        let mut worst = 0.0f64;
        let mut at = String::new();
        for spec in derivative_specs() {
            let q_max = match spec.law {
                crate::models::MotherLaw::LogGamma { lambda, .. } => (lambda - 0.05).min(3.0),
                _ => 3.0,
            };
            let mut q = 0.5;
            while q <= q_max + 1e-12 {
                let fd = (renyi_T(&spec, q + h).unwrap() - renyi_T(&spec, q - h).unwrap()) / (2.0 * h);
                let (a, _) = spectrum_point(&spec, q).unwrap();
                let rel = (a - fd).abs() / fd.abs().max(f64::MIN_POSITIVE);
                if rel > worst {
                    worst = rel;
                    at = format!("{} q={q:.2}", spec.family());
                }
                q += 0.05;
            }
        }
        (worst <= 1e-5, format!("max relative error {worst:.1e} ({at})"))
    })
}

/// Monte-Carlo `log_b E Λ^2` with its standard error, by the delta method.
fn monte_carlo_moment(draw: impl Fn(f64) -> f64, b: f64, seed: u64) -> (f64, f64) {
    let n = 1_000_000;
    let ys = normal_sample(&mut RandomStream::new(seed), n);
    let (mut s, mut ss) = (0.0, 0.0);
    for y in ys {
        let v = draw(y).powi(2);
        s += v;
        ss += v * v;
    }
    let mean = s / n as f64;
    let var = ss / n as f64 - mean * mean;
    let se = (var / n as f64).sqrt();
    (mean.ln() / b.ln(), se / (mean * b.ln()))
}

pub fn criterion_3() -> CriterionOutcome {
    timed(3, "moment oracles", 10, || {
        let ln = ModelSpec::log_normal(2.0, 1.0).unwrap();
        let (mc_ln, se_ln) = monte_carlo_moment(|y| (y - 0.5).exp(), 2.0, 2024);
        let z_ln = (mc_ln - moment_log(&ln, 2.0).unwrap()).abs() / se_ln;

        let chi = ModelSpec::chi_square(2.0).unwrap();
        let (mc_chi, se_chi) = monte_carlo_moment(|y| y * y, 2.0, 2025);
        let z_chi = (mc_chi - moment_log(&chi, 2.0).unwrap()).abs() / se_chi;

        let mut gamma_err = 0.0f64;
        for (lambda, beta) in [(3.0, 2.0), (5.0, 0.5), (10.0, 4.0)] {
            let lg = ModelSpec::log_gamma(2.0, lambda, beta).unwrap();
            let mgf = |q: f64| (1.0 - q / lambda).powf(-beta);
            for q in [0.5, 1.5, 2.0, 2.5] {
                let want = (mgf(q) / mgf(1.0).powf(q)).log2();
                gamma_err = gamma_err.max((moment_log(&lg, q).unwrap() - want).abs());
            }
        }
        (
            z_ln <= 3.0 && z_chi <= 3.0 && gamma_err <= 1e-12,
            format!("lognormal {z_ln:.2} se, chi-square {z_chi:.2} se, gamma MGF error {gamma_err:.1e}"),
        )
    })
}

fn parse_theory_csv(text: &str) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut q = Vec::new();
    let mut t = Vec::new();
    for line in text.lines().skip(1) {
        let mut it = line.split(',');
        q.push(it.next()?.parse().ok()?);
        t.push(it.next()?.parse().ok()?);
    }
    Some((q, t))
}

/// Reference curves through the `theory` subcommand.
pub fn criterion_4() -> CriterionOutcome {
    timed(4, "theory curves concave with the right T(1)", 5, || {
        let cases: &[(&[&str], f64)] = &[
            (&["--model", "lognormal", "--sigma2", "1"], 0.0),
            (&["--model", "loggamma", "--lambda", "3", "--beta", "2"], 0.0),
            (&["--model", "logneginvgamma", "--lambda", "3", "--beta", "2"], 0.0),
            (&["--model", "chisquare"], 0.0),
            (&["--model", "chisquare-eps", "--eps", "0.1"], 0.0),
            (&["--model", "even-power", "--k", "2"], 0.0),
            (&["--model", "chisquare-k", "--k", "2"], 0.0),
            (&["--model", "chisquare-k", "--k", "2", "--mode", "verbatim"], -0.5),
        ];
        let mut failures = Vec::new();
        let mut worst_curv = f64::NEG_INFINITY;
        for (flags, t_one) in cases {
            let mut argv = vec!["sphere-renyi", "theory", "--b", "2", "--q", "0.01:2.99:0.01"];
            argv.extend_from_slice(flags);
            let mut out = Vec::new();
            let name = flags[1];
            match run_command(argv, &mut out) {
                Ok(0) => {}
                other => {
                    failures.push(format!("{name}: {other:?}"));
                    continue;
                }
            }
            let Some((q, t)) = parse_theory_csv(&String::from_utf8_lossy(&out)) else {
                failures.push(format!("{name}: unreadable CSV"));
                continue;
            };
            let curv = t.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::NEG_INFINITY, f64::max);
            worst_curv = worst_curv.max(curv);
            let i = q.iter().position(|v| (v - 1.0).abs() < 1e-9).unwrap();
            if curv > 1e-10 || (t[i] - t_one).abs() > 1e-9 {
                failures.push(format!("{name}: curvature {curv:.1e}, T(1) = {}", t[i]));
            }
        }
        (
            failures.is_empty(),
            if failures.is_empty() {
                format!("{} curves, max second difference {worst_curv:.1e}", cases.len())
            } else {
                failures.join("; ")
            },
        )
    })
}

pub fn criterion_5() -> CriterionOutcome {
    timed(5, "estimator exact on uniform and Dirac maps", 1, || {
        let grid = PixelGrid::new(16, Ordering::Ring).unwrap();
        let mesh = build_mesh(&grid, 2).unwrap();
        let q: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
        let uniform = SphericalMap::constant(grid, 3.7).unwrap();
        let m = cell_masses(&uniform, &mesh, &Window::FullSky).unwrap();
        let t = empirical_T(&m, &q).unwrap();
        let s = empirical_spectrum(&m, &q).unwrap();
        let mut err_u = 0.0f64;
        for i in 0..q.len() {
            err_u = err_u
                .max((t.t[i] - (q[i] - 1.0)).abs())
                .max((s.alpha[i] - 1.0).abs())
                .max((s.f[i] - 1.0).abs());
        }
        let mut v = vec![0.0; grid.pixel_count() as usize];
        v[1234] = 5.0;
        let dirac = preprocess_shift(&SphericalMap::new(grid, v).unwrap());
        let m = cell_masses(&dirac, &mesh, &Window::FullSky).unwrap();
        let qp: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
        let t = empirical_T(&m, &qp).unwrap();
        let s = empirical_spectrum(&m, &qp).unwrap();
        let err_d = t.t.iter().chain(&s.alpha).chain(&s.f).fold(0.0f64, |a, x| a.max(x.abs()));
        (
            err_u <= 1e-12 && err_d <= 1e-12,
            format!("uniform error {err_u:.1e}, Dirac error {err_d:.1e}"),
        )
    })
}

/// Seeds, q grid and settings of the cascade reproduction check.
pub const CASCADE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Mean empirical `T` over the seeds, and the theoretical curve, on `q in [1, 2]`.
pub fn cascade_reproduction() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let spec = ModelSpec::log_normal(3.0, 2.0).unwrap();
    let grid = PixelGrid::new(16, Ordering::Nested).unwrap();
    let mesh = build_mesh(&grid, 2).unwrap();
    let q: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
    let config = CascadeConfig {
        mother: spec,
        covariance: CovarianceSpec::new(1.0, 2.0).unwrap(),
        levels: 40,
        grid,
        seed: CASCADE_SEEDS[0],
    };
    let (maps, _) = simulate_cascade_batch(&config, &CASCADE_SEEDS).expect("cascade simulation");
    let mut mean = vec![0.0; q.len()];
    for map in &maps {
        let masses = cell_masses(&preprocess_shift(map), &mesh, &Window::FullSky).expect("masses");
        let t = empirical_T(&masses, &q).expect("empirical T");
        for (m, v) in mean.iter_mut().zip(t.t) {
            *m += v / maps.len() as f64;
        }
    }
    let theory = q.iter().map(|&x| renyi_T(&spec, x).unwrap()).collect();
    (q, mean, theory)
}

pub fn criterion_6() -> CriterionOutcome {
    timed(6, "cascade reproduces the lognormal Rényi function", 300, || {
        let (q, mean, theory) = cascade_reproduction();
        let (i, gap) = mean
            .iter()
            .zip(&theory)
            .map(|(a, b)| (a - b).abs())
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
        (
            gap < 0.05,
            format!(
                "max |mean T - T_theory| = {gap:.4} at q={:.2} (empirical {:.4}, theory {:.4})",
                q[i], mean[i], theory[i]
            ),
        )
    })
}

fn relative(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Reparameterized values each family should recover.
pub fn round_trip_cases() -> Vec<(ModelSpec, Family, Normalization, Vec<f64>)> {
    let ln2 = std::f64::consts::LN_2;
    vec![
        (ModelSpec::log_normal(3.0, 2.0).unwrap(), Family::LogNormal, nm(), vec![2.0 / (4.0 * 3f64.ln())]),
        (ModelSpec::chi_square(2.0).unwrap(), Family::ChiSquare, nm(), vec![-0.5]),
        (ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap(), Family::LogGamma, nm(), vec![ln2, 1.0 / 3.0]),
        (
            ModelSpec::log_neg_inv_gamma(2.0, 3.0, 2.0).unwrap(),
            Family::LogNegInvGamma,
            nm(),
            vec![0.5 / ln2, 2.0, 3f64.sqrt()],
        ),
        (ModelSpec::even_power(2.0, 2, nm()).unwrap(), Family::EvenPower, nm(), vec![-0.5, 2.0]),
        (
            ModelSpec::chi_square_k(2.0, 2, Normalization::Verbatim).unwrap(),
            Family::ChiSquareK,
            Normalization::Verbatim,
            vec![0.5, 2.0],
        ),
    ]
}

pub fn round_trip_fit(spec: &ModelSpec, family: Family, mode: Normalization) -> FitResult {
    let q: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
    let (curve, _) = evaluate_curves(spec, &q).unwrap();
    fit_family(&curve, family, mode, &FitOptions { init: None, starts: 8, b: Some(spec.b) }).unwrap()
}

pub fn criterion_7() -> CriterionOutcome {
    timed(7, "fits recover their own noiseless curves", 30, || {
        let mut failures = Vec::new();
        let mut worst = 0.0f64;
        for (spec, family, mode, want) in round_trip_cases() {
            let fit = round_trip_fit(&spec, family, mode);
            let linear = matches!(family, Family::LogNormal | Family::ChiSquare);
            let tol = if linear { 1e-10 } else { 1e-6 };
            let err = fit.params.iter().zip(&want).map(|(p, w)| relative(p.value, *w)).fold(0.0, f64::max);
            worst = worst.max(err);
            if err >= tol || fit.rmse >= 1e-9 {
                failures.push(format!("{family}: rel err {err:.1e}, rmse {:.1e}", fit.rmse));
            }
        }
        let q: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
        let t: Vec<f64> = q.iter().map(|x| x - 1.0).collect();
        let mono = RenyiCurve::new(q, t, Provenance::Empirical { source: "monofractal".into() }).unwrap();
        let a = fit_linear_family(&mono, Family::LogNormal).unwrap().params[0].value;
        if a.abs() >= 1e-10 {
            failures.push(format!("monofractal a = {a:e}"));
        }
        (
            failures.is_empty(),
            if failures.is_empty() {
                format!("6 families, max relative error {worst:.1e}, monofractal a = {a:e}")
            } else {
                failures.join("; ")
            },
        )
    })
}

pub fn criterion_8() -> CriterionOutcome {
    timed(8, "pixel and cell counts, ring/nested bijection", 5, || {
        let big = PixelGrid::new(1024, Ordering::Ring).unwrap();
        let mesh = build_mesh(&big, 3).unwrap();
        let counts_ok = big.pixel_count() == 12_582_912 && mesh.cell_count() == 196_608 && mesh.pixels_per_cell() == 64;
        let mut bijective = true;
        for nside in [1u32, 2, 4, 8, 16] {
            let n = 12 * (nside as u64).pow(2);
            let mut seen = vec![false; n as usize];
            for h in 0..n {
                let r = nested_to_ring(nside, h).unwrap();
                bijective &= r < n && !std::mem::replace(&mut seen[r as usize], true);
                bijective &= ring_to_nested(nside, r).unwrap() == h;
            }
        }
        (
            counts_ok && bijective,
            format!(
                "{} pixels, {} cells of {} pixels, bijection {}",
                big.pixel_count(),
                mesh.cell_count(),
                mesh.pixels_per_cell(),
                if bijective { "verified" } else { "broken" }
            ),
        )
    })
}

pub fn criterion_9() -> CriterionOutcome {
    timed(9, "special-function identities", 1, || {
        let mut notes = Vec::new();
        let pi = std::f64::consts::PI;
        let mut half = 0.0f64;
        for x in [0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 80.0] {
            let k12 = (pi / (2.0 * x)).sqrt() * (-x).exp();
            half = half
                .max(relative(bessel_k(0.5, x).unwrap(), k12))
                .max(relative(bessel_k(1.5, x).unwrap(), k12 * (1.0 + 1.0 / x)))
                .max(relative(bessel_k(2.5, x).unwrap(), k12 * (1.0 + 3.0 / x + 3.0 / (x * x))));
        }
        if half > 1e-10 {
            notes.push(format!("half-integer K error {half:.1e}"));
        }
        let mut gam = 0.0f64;
        let mut dig = 0.0f64;
        let mut dig_fd = 0.0f64;
        for i in 0..=499 {
            let x = 0.1 + 0.1 * i as f64;
            gam = gam.max((ln_gamma(x + 1.0).unwrap() - ln_gamma(x).unwrap() - x.ln()).abs());
            dig = dig.max((digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x).abs());
            let h = 1e-5;
            let fd = (ln_gamma(x + h).unwrap() - ln_gamma(x - h).unwrap()) / (2.0 * h);
            dig_fd = dig_fd.max((fd - digamma(x).unwrap()).abs());
        }
        if gam > 1e-12 {
            notes.push(format!("gamma recurrence error {gam:.1e}"));
        }
        if dig > 1e-10 || dig_fd > 1e-6 {
            notes.push(format!("digamma errors {dig:.1e} / {dig_fd:.1e}"));
        }
        let mut rec = 0.0f64;
        let mut deriv = 0.0f64;
        for nu in [0.3, 1.0, 2.0, 4.7, 10.0] {
            for x in [0.2, 1.0, 3.0, 10.0, 40.0] {
                let km = bessel_k_any_order(nu - 1.0, x).unwrap();
                let (k, kp) = (bessel_k(nu, x).unwrap(), bessel_k(nu + 1.0, x).unwrap());
                rec = rec.max(relative(kp, km + 2.0 * nu / x * k));
                let h = 1e-5 * x;
                let fd = (bessel_k(nu, x + h).unwrap() - bessel_k(nu, x - h).unwrap()) / (2.0 * h);
                deriv = deriv.max(relative(fd, -0.5 * (km + kp)));
            }
        }
        if rec > 1e-8 || deriv > 1e-6 {
            notes.push(format!("Bessel recurrence {rec:.1e}, derivative {deriv:.1e}"));
        }
        (
            notes.is_empty(),
            if notes.is_empty() {
                format!("half-integer {half:.1e}, lnΓ rec {gam:.1e}, ψ rec {dig:.1e}, K rec {rec:.1e}, K' {deriv:.1e}")
            } else {
                notes.join("; ")
            },
        )
    })
}

pub fn criterion_10() -> CriterionOutcome {
    timed(10, "condition validator", 1, || {
        let mut notes = Vec::new();
        if !check_conditions(&ModelSpec::log_normal(2.0, 1.0).unwrap(), 1.0, 1.0).satisfied {
            notes.push("lognormal b=2 sigma2=1 should pass");
        }
        let lg2 = check_conditions(&ModelSpec::log_gamma(2.0, 2.0, 1.0).unwrap(), 1.0, 1.0);
        if lg2.satisfied || lg2.checks.iter().any(|c| c.name == "lambda > 2" && c.passed) {
            notes.push("loggamma lambda=2 should fail lambda > 2");
        }
        let lg3 = check_conditions(&ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap(), 1.0, 1.0);
        let bound = lg3.checks.iter().find(|c| c.name.starts_with("b > (1 + lambda")).map(|c| c.required);
        if !lg3.satisfied || bound.map_or(true, |v| (v - 4.0 / 3.0).abs() > 1e-12) {
            notes.push("loggamma b=2 lambda=3 beta=2 should pass with bound 4/3");
        }
        // chi-square mother: var Λ = 2, so b must exceed max(3^(1/3), exp(2C/3))
        for (b, c, want) in [(2.0, 1.0, true), (1.9, 1.0, false), (3.7, 2.0, false), (3.8, 2.0, true)] {
            let r = check_conditions(&ModelSpec::chi_square(b).unwrap(), c, 1.0);
            let bound = 3f64.cbrt().max((2.0 * c / 3.0).exp());
            if r.satisfied != want || (b > bound) != want {
                notes.push("general bound on chi-square mother");
            }
        }
        // normalized 2-fold chi-square: var Λ = 1, bound max(2^(1/3), e^(C/3))
        let ck = ModelSpec::chi_square_k(1.3, 2, nm()).unwrap();
        if !check_conditions(&ck, 0.5, 1.0).satisfied || check_conditions(&ck, 1.0, 1.0).satisfied {
            notes.push("general bound on normalized chi-square-k mother");
        }
        (notes.is_empty(), if notes.is_empty() { "all hand-computed cases agree".into() } else { notes.join("; ") })
    })
}

/// Runs every criterion; `include_slow = false` skips the cascade check.
pub fn run_all(include_slow: bool) -> Vec<CriterionOutcome> {
    let mut out = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5()];
    if include_slow {
        out.push(criterion_6());
    }
    out.extend([criterion_7(), criterion_8(), criterion_9(), criterion_10()]);
    out
}
