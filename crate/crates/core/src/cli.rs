//! Command-line front end: `theory`, `validate`, `simulate`, `estimate`, `fit`
//! and `selftest`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acceptance;
use crate::cascade::{gaussian_variance, simulate_cascade_with_diagnostics, CascadeConfig, CovarianceSpec};
use crate::error::{Error, Result};
use crate::estimator::{
    cell_masses, empirical_T_with, empirical_spectrum_with, preprocess_shift_with, AreaConvention, ShiftRule, SpectrumMode,
};
use crate::fitting::{fit_family, FitOptions};
use crate::io::{curves_to_csv, parse_curve_csv, parse_map_csv, read_map_file, write_map_file, ResultDocument, RunProvenance};
use crate::models::{check_conditions, evaluate_curves, Family, ModelSpec, MotherLaw, Normalization};
use crate::sphere::{build_mesh, Ordering, PixelGrid, SkyCoord, Window};

#[derive(Parser, Debug)]
#[command(name = "sphere-renyi", version, about = "Rényi functions and multifractal spectra on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Theoretical T(q), alpha(q) and f(q) as CSV.
    Theory(TheoryArgs),
    /// Convergence and moment conditions as JSON.
    Validate(ValidateArgs),
    /// Simulate a cascade map into a map file.
    Simulate(SimulateArgs),
    /// Empirical Rényi function and spectrum of a map.
    Estimate(EstimateArgs),
    /// Fit model families to a curve.
    Fit(FitArgs),
    /// Run the acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Normalized,
    Verbatim,
}

impl From<ModeArg> for Normalization {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Normalized => Normalization::Normalized,
            ModeArg::Verbatim => Normalization::Verbatim,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum OrderingArg {
    Ring,
    Nested,
}

impl From<OrderingArg> for Ordering {
    fn from(o: OrderingArg) -> Self {
        match o {
            OrderingArg::Ring => Ordering::Ring,
            OrderingArg::Nested => Ordering::Nested,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct ModelArgs {
    /// lognormal, loggamma, logneginvgamma, chisquare, chisquare-eps, even-power, chisquare-k
    #[arg(long)]
    model: Option<String>,
    /// Scaling factor b > 1.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

fn required<T>(v: Option<T>, flag: &str, family: Family) -> Result<T> {
    v.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for {family}")))
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        let family = Family::parse(self.model.as_deref().ok_or_else(|| Error::InvalidArgument("--model is required".into()))?)?;
        let b = self.b.unwrap_or(2.0);
        let mode = self.mode.map(Normalization::from).unwrap_or_default();
        let law = match family {
            Family::LogNormal => MotherLaw::LogNormal { sigma2: required(self.sigma2, "sigma2", family)? },
            Family::LogGamma => MotherLaw::LogGamma {
                lambda: required(self.lambda, "lambda", family)?,
                beta: required(self.beta, "beta", family)?,
            },
            Family::LogNegInvGamma => MotherLaw::LogNegInvGamma {
                lambda: required(self.lambda, "lambda", family)?,
                beta: required(self.beta, "beta", family)?,
            },
            Family::ChiSquare => MotherLaw::ChiSquare,
            Family::ChiSquareEps => MotherLaw::ChiSquareEps { eps: required(self.eps, "eps", family)? },
            Family::EvenPower => MotherLaw::EvenPower { k: required(self.k, "k", family)?, mode },
            Family::ChiSquareK => MotherLaw::ChiSquareK { k: required(self.k, "k", family)?, mode },
        };
        ModelSpec::new(b, law)
    }
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// q grid as start:stop:step.
    #[arg(long, default_value = "1:2:0.01")]
    q: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Constant C of the covariance bound C exp(-gamma r).
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct SimulateArgs {
    /// TOML file with any of the flags below; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// Variance of the Gaussian mother field.
    #[arg(long)]
    variance: Option<f64>,
    /// Exponential covariance rate per unit chordal distance.
    #[arg(long)]
    gamma: Option<f64>,
    /// Index of the last level; the map multiplies levels + 1 factors.
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    nside: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    ordering: Option<OrderingArg>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

impl SimulateArgs {
    fn merged_with(self, file: SimulateArgs) -> SimulateArgs {
        let m = self.model;
        let f = file.model;
        SimulateArgs {
            config: self.config,
            model: ModelArgs {
                model: m.model.or(f.model),
                b: m.b.or(f.b),
                sigma2: m.sigma2.or(f.sigma2),
                lambda: m.lambda.or(f.lambda),
                beta: m.beta.or(f.beta),
                k: m.k.or(f.k),
                eps: m.eps.or(f.eps),
                mode: m.mode.or(f.mode),
            },
            variance: self.variance.or(file.variance),
            gamma: self.gamma.or(file.gamma),
            levels: self.levels.or(file.levels),
            nside: self.nside.or(file.nside),
            seed: self.seed.or(file.seed),
            ordering: self.ordering.or(file.ordering),
            out: self.out,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum MapFormat {
    Auto,
    Srfm,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum SpectrumArg {
    Base2,
    Verbatim,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum AreaArg {
    Normalized,
    Steradian,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ShiftArg {
    /// Subtract the support minimum when it is negative.
    Auto,
    /// Always subtract the support minimum.
    Min,
    None,
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    #[arg(long)]
    #[serde(skip)]
    map: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: MapFormat,
    /// Pixel ordering of CSV map input.
    #[arg(long, value_enum, default_value = "ring")]
    csv_ordering: OrderingArg,
    /// full, cap:THETA,PHI,RADIUS or area:THETA,PHI,STERADIANS (angles in radians).
    #[arg(long, default_value = "full")]
    window: String,
    #[arg(long, value_enum, default_value = "auto")]
    shift: ShiftArg,
    /// Cells hold 4^j pixels.
    #[arg(long, default_value_t = 3)]
    group_order: u32,
    #[arg(long, default_value = "1:2:0.01")]
    q: String,
    #[arg(long, value_enum, default_value = "base2")]
    spectrum: SpectrumArg,
    #[arg(long, value_enum, default_value = "normalized")]
    area: AreaArg,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    /// Result document (.json) or q,T curve (.csv).
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated families.
    #[arg(long, default_value = "lognormal,chisquare,loggamma,logneginvgamma,even-power,chisquare-k")]
    family: String,
    /// Moment normalization for even-power and chisquare-k.
    #[arg(long, value_enum, default_value = "normalized")]
    mode: ModeArg,
    /// Comma-separated initial values (single family only).
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Known scaling factor, used to recover natural parameters.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Skip the cascade reproduction check.
    #[arg(long)]
    skip_slow: bool,
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_q_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("q range '{text}' is not start:stop:step"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(Error::InvalidArgument(format!("q range '{text}' has too many points")));
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Parses `full`, `cap:THETA,PHI,RADIUS` or `area:THETA,PHI,STERADIANS`.
pub fn parse_window(text: &str) -> Result<Window> {
    let bad = || Error::InvalidArgument(format!("window '{text}' is not full, cap:θ,φ,r or area:θ,φ,A"));
    if text.trim() == "full" {
        return Ok(Window::FullSky);
    }
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    let v: Vec<f64> = rest
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [theta, phi, size] = v[..] else { return Err(bad()) };
    let center = SkyCoord::new(theta, phi)?;
    match kind {
        "cap" => Window::cap(center, size),
        "area" => Window::cap_with_area(center, size),
        _ => Err(bad()),
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn theory(args: TheoryArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = args.model.spec()?;
    let q = parse_q_range(&args.q)?;
    let (curve, spectrum) = evaluate_curves(&spec, &q)?;
    emit(out, args.out.as_deref(), &curves_to_csv(&curve, &spectrum))?;
    Ok(0)
}

fn validate(args: ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = args.model.spec()?;
    let report = check_conditions(&spec, args.c, args.gamma);
    emit(out, args.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(0)
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let args = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let file: SimulateArgs =
                toml::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {}", path.display(), e.message())))?;
            args.merged_with(file)
        }
        None => args,
    };
    let mut model = args.model.clone();
    if model.model.as_deref().map(Family::parse).transpose()? == Some(Family::LogNormal) && model.sigma2.is_none() {
        model.sigma2 = args.variance;
    }
    let spec = model.spec()?;
    let variance = match args.variance {
        Some(v) => v,
        None => gaussian_variance(&spec)?,
    };
    let config = CascadeConfig {
        mother: spec,
        covariance: CovarianceSpec::new(args.gamma.unwrap_or(1.0), variance)?,
        levels: args.levels.unwrap_or(40),
        grid: PixelGrid::new(args.nside.unwrap_or(16), args.ordering.unwrap_or(OrderingArg::Nested).into())?,
        seed: args.seed.unwrap_or(0),
    };
    let path = args.out.ok_or_else(|| Error::InvalidArgument("--out is required for simulate".into()))?;
    let (map, diag) = simulate_cascade_with_diagnostics(&config)?;
    write_map_file(&path, &map)?;
    writeln!(
        out,
        "wrote {}: nside {}, {} pixels, {} factors, max jitter {:e}",
        path.display(),
        config.grid.nside(),
        config.grid.pixel_count(),
        diag.factors,
        diag.max_jitter
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct EstimateProvenance<'a> {
    args: &'a EstimateArgs,
    map_sha256: String,
}

fn estimate(args: EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let bytes = fs::read(&args.map)?;
    let is_csv = match args.format {
        MapFormat::Csv => true,
        MapFormat::Srfm => false,
        MapFormat::Auto => args.map.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let map = if is_csv {
        let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Malformed("CSV map is not UTF-8".into()))?;
        parse_map_csv(&text, args.csv_ordering.into())?
    } else {
        read_map_file(&args.map)?
    };
    let window = parse_window(&args.window)?;
    let q = parse_q_range(&args.q)?;
    let mesh = build_mesh(map.grid(), args.group_order)?;
    let rule = match args.shift {
        ShiftArg::Auto => ShiftRule::IfNegative,
        ShiftArg::Min => ShiftRule::Minimum,
        ShiftArg::None => ShiftRule::None,
    };
    let shifted = preprocess_shift_with(&map, &mesh, &window, rule)?;
    let masses = cell_masses(&shifted, &mesh, &window)?;
    let area = match args.area {
        AreaArg::Normalized => AreaConvention::Normalized,
        AreaArg::Steradian => AreaConvention::Steradian,
    };
    let mode = match args.spectrum {
        SpectrumArg::Base2 => SpectrumMode::Base2,
        SpectrumArg::Verbatim => SpectrumMode::Verbatim,
    };
    let curve = empirical_T_with(&masses, &q, area)?;
    let spectrum = empirical_spectrum_with(&masses, &q, mode, area)?;
    let digest = Sha256::digest(&bytes);
    let prov = EstimateProvenance { args: &args, map_sha256: digest.iter().map(|b| format!("{b:02x}")).collect() };
    let doc = ResultDocument::new(&curve, Some(&spectrum), RunProvenance::new("estimate", None, &prov)?);
    emit(out, args.out.as_deref(), &doc.to_json()?)?;
    Ok(0)
}

fn fit(args: FitArgs, out: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(&args.input)?;
    let is_csv = args.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let families: Vec<Family> = args.family.split(',').map(Family::parse).collect::<Result<_>>()?;
    let init = args
        .init
        .as_deref()
        .map(|s| {
            s.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad --init value '{v}'"))))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    if init.is_some() && families.len() != 1 {
        return Err(Error::InvalidArgument("--init needs exactly one --family".into()));
    }
    let mut doc = if is_csv {
        let curve = parse_curve_csv(&text, &args.input.display().to_string())?;
        let hash_input = (&args, &text);
        ResultDocument::new(&curve, None, RunProvenance::new("fit", None, &hash_input)?)
    } else {
        ResultDocument::from_json(&text)?
    };
    let curve = doc.curve()?;
    let options = FitOptions { init, starts: args.starts, b: args.b };
    doc.fits = families
        .iter()
        .map(|&f| fit_family(&curve, f, args.mode.into(), &options))
        .collect::<Result<_>>()?;
    emit(out, args.out.as_deref(), &doc.to_json()?)?;
    Ok(0)
}

fn selftest(args: SelftestArgs, out: &mut dyn Write) -> Result<i32> {
    let outcomes = acceptance::run_all(!args.skip_slow);
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 1 })
}

/// Runs one invocation. `argv[0]` is the program name. Returns the exit status
/// for completed runs; errors carry their own status via [`Error::exit_code`].
pub fn run_command<I, T>(argv: I, out: &mut dyn Write) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            write!(out, "{e}")?;
            return Ok(0);
        }
        Err(e) => {
            let msg = e.to_string();
            let line = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Err(Error::InvalidArgument(line.to_string()));
        }
    };
    match cli.command {
        Command::Theory(a) => theory(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Selftest(a) => selftest(a, out),
    }
}
