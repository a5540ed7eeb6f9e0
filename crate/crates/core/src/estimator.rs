//! Empirical Rényi functions and spectra of pixelized sky maps.
//!
//! A map is shifted to be non-negative, normalized into a probability measure
//! over the cells of a [`DyadicMesh`] inside a [`Window`], and the partition
//! sums `Σ μ_l^q` are compared with the cell measure:
//!
//! ```text
//! T(q) = log2(Σ μ_l^q) / log2 |S|
//! α(q) = Σ w_l log2 μ_l / log2 |S|,   w_l = μ_l^q / Σ μ^q
//! f(q) = q α(q) - T(q)
//! ```
//!
//! Cells with zero mass are left out of every sum.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{check_grid, Provenance, RenyiCurve, SpectrumCurve};
use crate::sphere::{build_mesh, window_mask, DyadicMesh, Ordering, PixelGrid, Window};

/// One finite value per pixel of a HEALPix grid, in the grid's ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalMap {
    grid: PixelGrid,
    values: Vec<f64>,
}

impl SphericalMap {
    pub fn new(grid: PixelGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != grid.pixel_count() {
            return Err(Error::Malformed(format!(
                "nside {} needs {} values, got {}",
                grid.nside(),
                grid.pixel_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Malformed(format!("non-finite value at pixel {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: PixelGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.pixel_count() as usize])
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The same field renumbered to `ordering`.
    pub fn reordered(&self, ordering: Ordering) -> Self {
        if ordering == self.grid.ordering() {
            return self.clone();
        }
        let target = self.grid.with_ordering(ordering);
        let mut out = vec![0.0; self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            let nested = self.grid.to_nested_index(i as u64).expect("index in range");
            let j = target.from_nested_index(nested).expect("index in range");
            out[j as usize] = *v;
        }
        Self { grid: target, values: out }
    }
}

/// `M(i) - min M`, so the smallest value becomes zero.
pub fn preprocess_shift(map: &SphericalMap) -> SphericalMap {
    let min = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    SphericalMap { grid: map.grid, values: map.values.iter().map(|v| v - min).collect() }
}

/// How a map is turned into non-negative pixel weights before masses are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftRule {
    /// Subtract the support minimum.
    Minimum,
    /// Subtract the support minimum only when it is negative.
    IfNegative,
    /// Use the values as they are.
    None,
}

/// Shift by the minimum over the pixels of the cells inside `window`. Pixels
/// outside the support are set to zero.
pub fn preprocess_shift_in_window(map: &SphericalMap, mesh: &DyadicMesh, window: &Window) -> Result<SphericalMap> {
    preprocess_shift_with(map, mesh, window, ShiftRule::Minimum)
}

/// [`preprocess_shift_in_window`] under an explicit rule.
pub fn preprocess_shift_with(map: &SphericalMap, mesh: &DyadicMesh, window: &Window, rule: ShiftRule) -> Result<SphericalMap> {
    check_grid_match(map, mesh)?;
    let mask = window_mask(mesh, window);
    let nested = map.reordered(Ordering::Nested);
    let support = |cell: usize| mesh.cell_pixels(cell as u64).map(|p| nested.values[p as usize]);
    let min = (0..mask.len())
        .filter(|&c| mask[c])
        .flat_map(support)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NoCellsInWindow);
    }
    let min = match rule {
        ShiftRule::Minimum => min,
        ShiftRule::IfNegative => min.min(0.0),
        ShiftRule::None => 0.0,
    };
    let mut out = vec![0.0; nested.values.len()];
    for (cell, inside) in mask.iter().enumerate() {
        if *inside {
            for p in mesh.cell_pixels(cell as u64) {
                out[p as usize] = nested.values[p as usize] - min;
            }
        }
    }
    Ok(SphericalMap { grid: nested.grid, values: out }.reordered(map.grid.ordering()))
}

fn check_grid_match(map: &SphericalMap, mesh: &DyadicMesh) -> Result<()> {
    if map.grid.nside() != mesh.grid().nside() {
        return Err(Error::GridMismatch { map: map.grid.nside(), mesh: mesh.grid().nside() });
    }
    Ok(())
}

/// Normalized cell masses over the cells inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMasses {
    mesh: DyadicMesh,
    masses: Vec<f64>,
    included: Vec<bool>,
}

impl CellMasses {
    pub fn mesh(&self) -> &DyadicMesh {
        &self.mesh
    }

    /// Masses of the included cells, in nested cell order.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    pub fn included_count(&self) -> usize {
        self.masses.len()
    }

    pub fn positive_count(&self) -> usize {
        self.masses.iter().filter(|m| **m > 0.0).count()
    }
}

/// Per-cell pixel sums divided by their total over the included cells.
pub fn cell_masses(map: &SphericalMap, mesh: &DyadicMesh, window: &Window) -> Result<CellMasses> {
    check_grid_match(map, mesh)?;
    let included = window_mask(mesh, window);
    if !included.iter().any(|x| *x) {
        return Err(Error::NoCellsInWindow);
    }
    let nested = map.reordered(Ordering::Nested);
    let mut sums = Vec::new();
    for (cell, inside) in included.iter().enumerate() {
        if !*inside {
            continue;
        }
        let mut s = 0.0;
        for p in mesh.cell_pixels(cell as u64) {
            let v = nested.values[p as usize];
            if v < 0.0 {
                let index = map.grid.from_nested_index(p).expect("index in range") as usize;
                return Err(Error::NegativeValue { index, value: v });
            }
            s += v;
        }
        sums.push(s);
    }
    let total: f64 = sums.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalMass);
    }
    Ok(CellMasses { mesh: *mesh, masses: sums.iter().map(|s| s / total).collect(), included })
}

/// How the cell size `|S|` in the denominators is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaConvention {
    /// Fraction of the whole sphere, `4^j / N_pix`.
    #[default]
    Normalized,
    /// Solid angle in steradians, `4π · 4^j / N_pix`.
    Steradian,
}

impl AreaConvention {
    pub fn cell_size(&self, mesh: &DyadicMesh) -> f64 {
        let frac = mesh.cell_measure().value();
        match self {
            AreaConvention::Normalized => frac,
            AreaConvention::Steradian => 4.0 * PI * frac,
        }
    }
}

/// Logarithm base used for `ln μ` in the singularity-exponent numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMode {
    /// `log2 μ` over `log2 |S|`; a uniform map gives `α = 1`.
    #[default]
    Base2,
    /// Natural log over `log2 |S|`, as commonly printed; a uniform map gives `α = ln 2`.
    Verbatim,
}

/// `ln Σ μ^q` over positive masses, and the normalized weights' mean of `ln μ`.
fn partition(ln_mu: &[f64], q: f64) -> (f64, f64) {
    let top = ln_mu.iter().map(|l| q * l).fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    let mut sl = 0.0;
    for l in ln_mu {
        let w = (q * l - top).exp();
        s += w;
        sl += w * l;
    }
    (top + s.ln(), sl / s)
}

fn positive_logs(masses: &CellMasses) -> Result<Vec<f64>> {
    if masses.included_count() < 2 {
        return Err(Error::InsufficientCells { needed: 2, found: masses.included_count() });
    }
    let logs: Vec<f64> = masses.masses.iter().filter(|m| **m > 0.0).map(|m| m.ln()).collect();
    if logs.is_empty() {
        return Err(Error::ZeroTotalMass);
    }
    Ok(logs)
}

#[allow(non_snake_case)]
pub fn empirical_T(masses: &CellMasses, q_grid: &[f64]) -> Result<RenyiCurve> {
    empirical_T_with(masses, q_grid, AreaConvention::Normalized)
}

#[allow(non_snake_case)]
pub fn empirical_T_with(masses: &CellMasses, q_grid: &[f64], area: AreaConvention) -> Result<RenyiCurve> {
    check_grid(q_grid)?;
    let logs = positive_logs(masses)?;
    let ln_size = area.cell_size(&masses.mesh).ln();
    let t = q_grid
        .iter()
        .map(|&q| if q == 1.0 { 0.0 } else { partition(&logs, q).0 / ln_size })
        .collect();
    Ok(RenyiCurve {
        q: q_grid.to_vec(),
        t,
        provenance: Provenance::Empirical { source: describe(masses) },
    })
}

pub fn empirical_spectrum(masses: &CellMasses, q_grid: &[f64]) -> Result<SpectrumCurve> {
    empirical_spectrum_with(masses, q_grid, SpectrumMode::Base2, AreaConvention::Normalized)
}

pub fn empirical_spectrum_with(
    masses: &CellMasses,
    q_grid: &[f64],
    mode: SpectrumMode,
    area: AreaConvention,
) -> Result<SpectrumCurve> {
    let t = empirical_T_with(masses, q_grid, area)?.t;
    let logs = positive_logs(masses)?;
    let ln_size = area.cell_size(&masses.mesh).ln();
    let numerator_scale = match mode {
        SpectrumMode::Base2 => 1.0,
        SpectrumMode::Verbatim => LN_2,
    };
    let mut alpha = Vec::with_capacity(q_grid.len());
    let mut f = Vec::with_capacity(q_grid.len());
    for (&q, &tq) in q_grid.iter().zip(&t) {
        let a = numerator_scale * partition(&logs, q).1 / ln_size;
        alpha.push(a);
        f.push(q * a - tq);
    }
    Ok(SpectrumCurve { q: q_grid.to_vec(), alpha, f })
}

fn describe(masses: &CellMasses) -> String {
    format!(
        "nside {} mesh order {}: {} of {} cells",
        masses.mesh.grid().nside(),
        masses.mesh.group_order(),
        masses.included_count(),
        masses.mesh.cell_count()
    )
}

/// Slope of `log2 Σ μ^q` against `log2 |S|` across several mesh orders, an
/// alternative to the single-level estimate. The map must already be shifted.
#[allow(non_snake_case)]
pub fn empirical_T_multilevel(
    map: &SphericalMap,
    group_orders: &[u32],
    window: &Window,
    q_grid: &[f64],
) -> Result<RenyiCurve> {
    check_grid(q_grid)?;
    if group_orders.len() < 2 {
        return Err(Error::InvalidArgument("slope regression needs at least two mesh orders".into()));
    }
    let mut xs = Vec::new();
    let mut rows = Vec::new();
    for &j in group_orders {
        let mesh = build_mesh(map.grid(), j)?;
        let masses = cell_masses(map, &mesh, window)?;
        let logs = positive_logs(&masses)?;
        xs.push(mesh.cell_measure().value().ln());
        rows.push(q_grid.iter().map(|&q| partition(&logs, q).0).collect::<Vec<_>>());
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let t = (0..q_grid.len())
        .map(|k| {
            let ym = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            xs.iter().zip(&rows).map(|(x, r)| (x - xm) * (r[k] - ym)).sum::<f64>() / sxx
        })
        .collect();
    Ok(RenyiCurve {
        q: q_grid.to_vec(),
        t,
        provenance: Provenance::Empirical {
            source: format!("nside {} slope over mesh orders {group_orders:?}", map.grid().nside()),
        },
    })
}
