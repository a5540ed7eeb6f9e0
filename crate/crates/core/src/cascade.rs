//! Finite-product multiplicative cascades on the sphere.
//!
//! Level `i` of a cascade is an independent mother field evaluated at the
//! scaled pixel centres `b^i x`; the map is the pointwise product of levels
//! `0..=k`. Mother fields are transforms of Gaussian fields with exponential
//! covariance in chordal distance, sampled by dense Cholesky factorization.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SphericalMap;
use crate::models::{even_power_gaussian_variance, mean, MotherLaw, ModelSpec, Normalization};
use crate::specfun::{normal_sample, RandomStream};
use crate::sphere::{chordal_distance_vec, pixel_centers, scale_coord, PixelGrid, SkyCoord};

/// Largest point set accepted by the dense sampler.
pub const MAX_POINTS: usize = 20_000;

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

/// Exponential covariance `variance * exp(-gamma * chord)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub gamma: f64,
    pub variance: f64,
}

impl CovarianceSpec {
    pub fn new(gamma: f64, variance: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameters(format!("covariance rate gamma must be positive, got {gamma}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameters(format!("covariance variance must be positive, got {variance}")));
        }
        Ok(Self { gamma, variance })
    }

    pub fn at_chord(&self, chord: f64) -> f64 {
        self.variance * (-self.gamma * chord).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub mother: ModelSpec,
    pub covariance: CovarianceSpec,
    /// Index of the last level; the product has `levels + 1` factors.
    pub levels: u32,
    pub grid: PixelGrid,
    pub seed: u64,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        self.mother.validate()?;
        CovarianceSpec::new(self.covariance.gamma, self.covariance.variance)?;
        let expected = gaussian_variance(&self.mother)?;
        check_variance(self.covariance.variance, expected)?;
        if self.grid.pixel_count() as usize > MAX_POINTS {
            return Err(Error::TooManyPoints { count: self.grid.pixel_count() as usize, limit: MAX_POINTS });
        }
        Ok(())
    }
}

/// Per-run numerical diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeDiagnostics {
    /// Largest diagonal jitter, relative to the variance, over all levels.
    pub max_jitter: f64,
    pub factors: u32,
}

/// Variance of the Gaussian input each simulable family expects.
pub fn gaussian_variance(spec: &ModelSpec) -> Result<f64> {
    let m = mean(spec)?;
    if (m - 1.0).abs() > 1e-9 {
        return Err(Error::NotSimulable(format!(
            "{} mother has E Λ = {m}, a cascade needs a mean-one mother",
            spec.family()
        )));
    }
    match spec.law {
        MotherLaw::LogNormal { sigma2 } => Ok(sigma2),
        MotherLaw::ChiSquare | MotherLaw::ChiSquareEps { .. } | MotherLaw::ChiSquareK { .. } => Ok(1.0),
        MotherLaw::EvenPower { k, mode } => Ok(even_power_gaussian_variance(k, mode)),
        MotherLaw::LogGamma { .. } | MotherLaw::LogNegInvGamma { .. } => Err(Error::NotSimulable(format!(
            "{} mothers are gamma-correlated and have no Gaussian construction",
            spec.family()
        ))),
    }
}

/// Number of independent Gaussian layers per level.
pub fn layer_count(spec: &ModelSpec) -> usize {
    match spec.law {
        MotherLaw::ChiSquareK { k, .. } => k as usize,
        _ => 1,
    }
}

fn check_variance(covariance: f64, expected: f64) -> Result<()> {
    if (covariance - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(Error::VarianceMismatch { covariance, expected });
    }
    Ok(())
}

/// Lower Cholesky factor of the covariance matrix over a point set.
pub struct GaussianSampler {
    factor: Mat<f64>,
    jitter: f64,
}

impl GaussianSampler {
    pub fn new(points: &[SkyCoord], cov: &CovarianceSpec) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no points to simulate on".into()));
        }
        if n > MAX_POINTS {
            return Err(Error::TooManyPoints { count: n, limit: MAX_POINTS });
        }
        let xyz: Vec<[f64; 3]> = points.iter().map(SkyCoord::to_unit_vector).collect();
        let base = Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                cov.variance
            } else {
                cov.at_chord(chordal_distance_vec(&xyz[i], &xyz[j]))
            }
        });
        let mut jitter = JITTER_START;
        loop {
            let mut m = base.clone();
            for i in 0..n {
                m[(i, i)] += jitter * cov.variance;
            }
            if let Ok(llt) = m.llt(Side::Lower) {
                return Ok(Self { factor: llt.L().to_owned(), jitter });
            }
            jitter *= 10.0;
            if jitter > JITTER_MAX * (1.0 + 1e-9) {
                return Err(Error::Factorization { jitter: jitter / 10.0 });
            }
        }
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Diagonal jitter used, relative to the variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// One realization `L z` with `z` standard normal.
    pub fn sample(&self, stream: &mut RandomStream) -> Vec<f64> {
        let n = self.len();
        let z = normal_sample(stream, n);
        let l = &self.factor;
        (0..n)
            .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
            .collect()
    }
}

/// One zero-mean Gaussian vector with covariance `variance * exp(-gamma * chord)`.
pub fn simulate_gaussian_on_points(
    points: &[SkyCoord],
    cov: &CovarianceSpec,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    Ok(GaussianSampler::new(points, cov)?.sample(stream))
}

/// Maps Gaussian layers to mother values. All families except ChiSquareK take
/// a single layer; ChiSquareK takes `k`.
pub fn mother_transform(spec: &ModelSpec, variance: f64, layers: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_variance(variance, gaussian_variance(spec)?)?;
    let want = layer_count(spec);
    if layers.len() != want {
        return Err(Error::InvalidArgument(format!("{} needs {want} Gaussian layers, got {}", spec.family(), layers.len())));
    }
    let n = layers[0].len();
    if layers.iter().any(|l| l.len() != n) {
        return Err(Error::InvalidArgument("Gaussian layers differ in length".into()));
    }
    let y = &layers[0];
    Ok(match spec.law {
        MotherLaw::LogNormal { sigma2 } => y.iter().map(|v| (v - 0.5 * sigma2).exp()).collect(),
        MotherLaw::ChiSquare => y.iter().map(|v| v * v).collect(),
        MotherLaw::ChiSquareEps { eps } => y.iter().map(|v| (1.0 - eps) * v * v + eps).collect(),
        MotherLaw::EvenPower { k, .. } => y.iter().map(|v| v.powi(2 * k as i32)).collect(),
        MotherLaw::ChiSquareK { k, mode } => {
            let scale = match mode {
                Normalization::Normalized => 1.0 / k as f64,
                Normalization::Verbatim => 2.0 / k as f64,
            };
            (0..n).map(|p| scale * layers.iter().map(|l| l[p] * l[p]).sum::<f64>()).collect()
        }
        MotherLaw::LogGamma { .. } | MotherLaw::LogNegInvGamma { .. } => unreachable!("rejected above"),
    })
}

/// Simulates the cascade product over the pixel centres of `config.grid`.
pub fn simulate_cascade(config: &CascadeConfig) -> Result<SphericalMap> {
    Ok(simulate_cascade_with_diagnostics(config)?.0)
}

pub fn simulate_cascade_with_diagnostics(config: &CascadeConfig) -> Result<(SphericalMap, CascadeDiagnostics)> {
    let substreams: Vec<u64> = (0..=config.levels as u64).collect();
    let (mut maps, diag) = run_levels(config, &[config.seed], &substreams)?;
    Ok((maps.pop().expect("one seed"), diag))
}

/// Like [`simulate_cascade`], with level `i` drawing from sub-stream
/// `substreams[i]` of the seed instead of sub-stream `i`.
pub fn simulate_cascade_with_substreams(config: &CascadeConfig, substreams: &[u64]) -> Result<SphericalMap> {
    if substreams.len() != config.levels as usize + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} sub-streams given for {} levels",
            substreams.len(),
            config.levels + 1
        )));
    }
    let (mut maps, _) = run_levels(config, &[config.seed], substreams)?;
    Ok(maps.pop().expect("one seed"))
}

/// One map per seed, identical to calling [`simulate_cascade`] with each seed
/// in turn. Each level's covariance is factorized once for the whole batch.
pub fn simulate_cascade_batch(config: &CascadeConfig, seeds: &[u64]) -> Result<(Vec<SphericalMap>, CascadeDiagnostics)> {
    let substreams: Vec<u64> = (0..=config.levels as u64).collect();
    run_levels(config, seeds, &substreams)
}

fn run_levels(config: &CascadeConfig, seeds: &[u64], substreams: &[u64]) -> Result<(Vec<SphericalMap>, CascadeDiagnostics)> {
    config.validate()?;
    let centers = pixel_centers(&config.grid);
    let layers = layer_count(&config.mother);
    let mut products = vec![vec![1.0; centers.len()]; seeds.len()];
    let mut max_jitter = 0.0f64;
    let mut factor = 1.0;
    for level in 0..=config.levels {
        let points: Vec<SkyCoord> = centers.iter().map(|c| scale_coord(c, factor)).collect();
        let sampler = GaussianSampler::new(&points, &config.covariance)?;
        max_jitter = max_jitter.max(sampler.jitter());
        for (product, &seed) in products.iter_mut().zip(seeds) {
            let mut stream = RandomStream::new(seed).substream(substreams[level as usize]);
            let gaussians: Vec<Vec<f64>> = (0..layers).map(|_| sampler.sample(&mut stream)).collect();
            let mother = mother_transform(&config.mother, config.covariance.variance, &gaussians)?;
            for (p, m) in product.iter_mut().zip(mother) {
                *p *= m;
            }
        }
        factor *= config.mother.b;
    }
    let maps = products
        .into_iter()
        .map(|values| SphericalMap::new(config.grid, values))
        .collect::<Result<Vec<_>>>()?;
    Ok((maps, CascadeDiagnostics { max_jitter, factors: config.levels + 1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{Ordering, SkyCoord};

    fn cov(variance: f64) -> CovarianceSpec {
        CovarianceSpec::new(1.0, variance).unwrap()
    }

    #[test]
    fn single_point_is_univariate() {
        let p = [SkyCoord::new(0.3, 1.0).unwrap()];
        let mut draws = Vec::new();
        for s in 0..2000 {
            draws.extend(simulate_gaussian_on_points(&p, &cov(2.0), &mut RandomStream::new(s)).unwrap());
        }
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!(m.abs() < 3.0 * (2.0f64 / 2000.0).sqrt());
        // var of the sample variance is about 2 sigma^4 / n
        assert!((v - 2.0).abs() < 3.0 * (8.0f64 / 2000.0).sqrt());
    }

    #[test]
    fn coincident_points_agree() {
        let p = SkyCoord::new(1.1, 2.2).unwrap();
        let v = simulate_gaussian_on_points(&[p, p], &cov(1.0), &mut RandomStream::new(3)).unwrap();
        assert!((v[0] - v[1]).abs() < 1e-5);
    }

    #[test]
    fn antipodal_correlation() {
        let pts = [SkyCoord::new(0.0, 0.0).unwrap(), SkyCoord::new(std::f64::consts::PI, 0.0).unwrap()];
        let sampler = GaussianSampler::new(&pts, &cov(1.0)).unwrap();
        let mut stream = RandomStream::new(11);
        let (mut sxy, mut sxx, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let n = 500.0;
        for _ in 0..500 {
            let v = sampler.sample(&mut stream);
            sx += v[0];
            sy += v[1];
            sxy += v[0] * v[1];
            sxx += v[0] * v[0];
            syy += v[1] * v[1];
        }
        let r = (sxy - sx * sy / n) / ((sxx - sx * sx / n) * (syy - sy * sy / n)).sqrt();
        assert!((r - (-2.0f64).exp()).abs() < 0.15, "r = {r}");
    }

    #[test]
    fn batch_matches_single_runs() {
        let config = CascadeConfig {
            mother: ModelSpec::log_normal(2.0, 0.5).unwrap(),
            covariance: cov(0.5),
            levels: 3,
            grid: PixelGrid::new(2, Ordering::Nested).unwrap(),
            seed: 0,
        };
        let (maps, _) = simulate_cascade_batch(&config, &[4, 9]).unwrap();
        for (map, seed) in maps.iter().zip([4, 9]) {
            assert_eq!(map, &simulate_cascade(&CascadeConfig { seed, ..config.clone() }).unwrap());
        }
        let identity = simulate_cascade_with_substreams(&CascadeConfig { seed: 4, ..config.clone() }, &[0, 1, 2, 3]).unwrap();
        assert_eq!(identity, maps[0]);
        let swapped = simulate_cascade_with_substreams(&CascadeConfig { seed: 4, ..config.clone() }, &[1, 0, 2, 3]).unwrap();
        assert_ne!(swapped, maps[0]);
        assert!(simulate_cascade_with_substreams(&config, &[0, 1]).is_err());
    }

    #[test]
    fn transform_examples() {
        let ln = ModelSpec::log_normal(2.0, 1.0).unwrap();
        assert_eq!(mother_transform(&ln, 1.0, &[vec![0.5]]).unwrap(), vec![1.0]);
        let chi = ModelSpec::chi_square(2.0).unwrap();
        assert_eq!(mother_transform(&chi, 1.0, &[vec![-2.0]]).unwrap(), vec![4.0]);
        let eps = ModelSpec::chi_square_eps(2.0, 0.5).unwrap();
        assert_eq!(mother_transform(&eps, 1.0, &[vec![0.0]]).unwrap(), vec![0.5]);
        let ck = ModelSpec::chi_square_k(2.0, 2, Normalization::Normalized).unwrap();
        assert_eq!(mother_transform(&ck, 1.0, &[vec![1.0], vec![3.0]]).unwrap(), vec![5.0]);
        assert!(matches!(mother_transform(&ln, 2.0, &[vec![0.0]]), Err(Error::VarianceMismatch { .. })));
        assert!(mother_transform(&ck, 1.0, &[vec![1.0]]).is_err());
    }

    #[test]
    fn non_simulable_families() {
        let lg = ModelSpec::log_gamma(2.0, 3.0, 2.0).unwrap();
        assert!(matches!(gaussian_variance(&lg), Err(Error::NotSimulable(_))));
        let v = ModelSpec::chi_square_k(2.0, 2, Normalization::Verbatim).unwrap();
        assert!(matches!(gaussian_variance(&v), Err(Error::NotSimulable(_))));
        let ep = ModelSpec::even_power(2.0, 1, Normalization::Verbatim).unwrap();
        assert_eq!(gaussian_variance(&ep).unwrap(), 1.0);
    }

    fn config(levels: u32, seed: u64) -> CascadeConfig {
        CascadeConfig {
            mother: ModelSpec::log_normal(3.0, 0.5).unwrap(),
            covariance: cov(0.5),
            levels,
            grid: PixelGrid::new(4, Ordering::Nested).unwrap(),
            seed,
        }
    }

    #[test]
    fn level_zero_is_one_mother() {
        let c = config(0, 5);
        let map = simulate_cascade(&c).unwrap();
        let centers = pixel_centers(&c.grid);
        let g = simulate_gaussian_on_points(&centers, &c.covariance, &mut RandomStream::new(5).substream(0)).unwrap();
        let want = mother_transform(&c.mother, 0.5, &[g]).unwrap();
        assert_eq!(map.values(), &want[..]);
    }

    #[test]
    fn reproducible_and_positive() {
        let a = simulate_cascade(&config(3, 9)).unwrap();
        let b = simulate_cascade(&config(3, 9)).unwrap();
        let c = simulate_cascade(&config(3, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.values().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn jitter_stays_small() {
        let (_, d) = simulate_cascade_with_diagnostics(&config(5, 1)).unwrap();
        assert!(d.max_jitter <= 1e-6);
        assert_eq!(d.factors, 6);
    }

    #[test]
    fn oversized_grid_rejected() {
        let mut c = config(0, 1);
        c.grid = PixelGrid::new(64, Ordering::Nested).unwrap();
        assert!(matches!(simulate_cascade(&c), Err(Error::TooManyPoints { .. })));
    }
}
