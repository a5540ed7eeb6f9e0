//! Equal-area HEALPix pixelization, dyadic cell meshes and sky windows.
//!
//! Pixel geometry (centres, point lookup, nested/ring renumbering) is delegated
//! to `cdshealpix`; this module adds the pieces the estimator and the cascade
//! need on top of it: coarse-pixel meshes with exact rational cell measures,
//! cap windows, chordal distances and the modular coordinate scaling.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use cdshealpix::nested;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel numbering scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Ring,
    Nested,
}

/// A HEALPix grid with `12 * nside^2` equal-area pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelGrid {
    nside: u32,
    ordering: Ordering,
}

impl PixelGrid {
    pub fn new(nside: u32, ordering: Ordering) -> Result<Self> {
        if nside == 0 || !nside.is_power_of_two() || nside > (1 << 29) {
            return Err(Error::InvalidNside(nside));
        }
        Ok(Self { nside, ordering })
    }

    pub fn nested(nside: u32) -> Result<Self> {
        Self::new(nside, Ordering::Nested)
    }

    pub fn nside(&self) -> u32 {
        self.nside
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn depth(&self) -> u8 {
        self.nside.trailing_zeros() as u8
    }

    pub fn pixel_count(&self) -> u64 {
        12 * (self.nside as u64) * (self.nside as u64)
    }

    /// Area of one pixel in steradians.
    pub fn pixel_area(&self) -> f64 {
        4.0 * PI / self.pixel_count() as f64
    }

    pub fn with_ordering(&self, ordering: Ordering) -> Self {
        Self { nside: self.nside, ordering }
    }

    fn check_index(&self, index: u64) -> Result<()> {
        if index >= self.pixel_count() {
            return Err(Error::PixelOutOfRange { index, nside: self.nside });
        }
        Ok(())
    }

    /// Converts a pixel index of this grid's ordering into the nested index.
    pub fn to_nested_index(&self, index: u64) -> Result<u64> {
        self.check_index(index)?;
        Ok(match self.ordering {
            Ordering::Nested => index,
            Ordering::Ring => nested::get(self.depth()).from_ring(index),
        })
    }

    /// Converts a nested index into this grid's ordering.
    pub fn from_nested_index(&self, nested_index: u64) -> Result<u64> {
        self.check_index(nested_index)?;
        Ok(match self.ordering {
            Ordering::Nested => nested_index,
            Ordering::Ring => nested::get(self.depth()).to_ring(nested_index),
        })
    }
}

pub fn nested_to_ring(nside: u32, index: u64) -> Result<u64> {
    PixelGrid::new(nside, Ordering::Ring)?.from_nested_index(index)
}

pub fn ring_to_nested(nside: u32, index: u64) -> Result<u64> {
    PixelGrid::new(nside, Ordering::Ring)?.to_nested_index(index)
}

/// A point on the unit sphere: colatitude `theta` in `[0, pi]`, longitude `phi` in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkyCoord {
    theta: f64,
    phi: f64,
}

impl SkyCoord {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(0.0..TAU).contains(&phi) {
            return Err(Error::Domain(format!(
                "sky coordinate (theta={theta}, phi={phi}) outside [0,pi] x [0,2pi)"
            )));
        }
        Ok(Self { theta, phi })
    }

    /// Builds a coordinate, wrapping longitude into `[0, 2pi)` and clamping colatitude.
    pub fn wrapped(theta: f64, phi: f64) -> Self {
        Self { theta: theta.clamp(0.0, PI), phi: wrap(phi, TAU) }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    fn from_lon_lat(lon: f64, lat: f64) -> Self {
        Self::wrapped(FRAC_PI_2 - lat, lon)
    }

    fn lon_lat(&self) -> (f64, f64) {
        (self.phi, FRAC_PI_2 - self.theta)
    }
}

fn wrap(value: f64, modulus: f64) -> f64 {
    let r = value.rem_euclid(modulus);
    if r >= modulus {
        0.0
    } else {
        r
    }
}

/// Euclidean distance between two points of the unit sphere, `2 sin(angle / 2)`.
pub fn chordal_distance(a: &SkyCoord, b: &SkyCoord) -> f64 {
    chordal_distance_vec(&a.to_unit_vector(), &b.to_unit_vector())
}

pub(crate) fn chordal_distance_vec(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Great-circle angle between two points.
pub fn angular_distance(a: &SkyCoord, b: &SkyCoord) -> f64 {
    2.0 * (0.5 * chordal_distance(a, b)).min(1.0).asin()
}

/// Modular scaling `(factor * theta mod pi, factor * phi mod 2pi)` used to place
/// cascade level `i` at `b^i x`.
pub fn scale_coord(x: &SkyCoord, factor: f64) -> SkyCoord {
    SkyCoord { theta: wrap(factor * x.theta, PI), phi: wrap(factor * x.phi, TAU) }
}

/// Standard HEALPix centre of a pixel.
pub fn pixel_center(grid: &PixelGrid, index: u64) -> Result<SkyCoord> {
    let nested_index = grid.to_nested_index(index)?;
    let (lon, lat) = nested::center(grid.depth(), nested_index);
    Ok(SkyCoord::from_lon_lat(lon, lat))
}

/// Index of the pixel containing `coord`.
pub fn pixel_at(grid: &PixelGrid, coord: &SkyCoord) -> u64 {
    let (lon, lat) = coord.lon_lat();
    let h = nested::hash(grid.depth(), lon, lat);
    match grid.ordering {
        Ordering::Nested => h,
        Ordering::Ring => nested::get(grid.depth()).to_ring(h),
    }
}

/// Centres of every pixel, listed in the grid's own ordering.
pub fn pixel_centers(grid: &PixelGrid) -> Vec<SkyCoord> {
    (0..grid.pixel_count())
        .map(|i| pixel_center(grid, i).expect("index in range"))
        .collect()
}

/// Exact rational cell measure as a fraction of the whole sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMeasure {
    pub numerator: u64,
    pub denominator: u64,
}

impl CellMeasure {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Partition of a grid into equal-area cells of `4^j` nested-consecutive pixels,
/// i.e. the pixels of the coarser grid `nside / 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicMesh {
    grid: PixelGrid,
    group_order: u32,
}

impl DyadicMesh {
    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn group_order(&self) -> u32 {
        self.group_order
    }

    pub fn pixels_per_cell(&self) -> u64 {
        1u64 << (2 * self.group_order)
    }

    pub fn cell_count(&self) -> u64 {
        self.grid.pixel_count() / self.pixels_per_cell()
    }

    pub fn cell_measure(&self) -> CellMeasure {
        CellMeasure { numerator: self.pixels_per_cell(), denominator: self.grid.pixel_count() }
    }

    /// Nested pixel indices covered by `cell`.
    pub fn cell_pixels(&self, cell: u64) -> std::ops::Range<u64> {
        let n = self.pixels_per_cell();
        cell * n..(cell + 1) * n
    }

    /// The grid whose pixels are this mesh's cells.
    pub fn coarse_grid(&self) -> PixelGrid {
        PixelGrid { nside: self.grid.nside >> self.group_order, ordering: Ordering::Nested }
    }
}

pub fn build_mesh(grid: &PixelGrid, group_order: u32) -> Result<DyadicMesh> {
    if group_order > grid.depth() as u32 {
        return Err(Error::InvalidGroupOrder { order: group_order, nside: grid.nside });
    }
    Ok(DyadicMesh { grid: grid.with_ordering(Ordering::Nested), group_order })
}

/// Region of the sphere an analysis is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    FullSky,
    Cap { center: SkyCoord, radius: f64 },
}

impl Window {
    pub fn cap(center: SkyCoord, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= PI) {
            return Err(Error::Domain(format!("cap radius {radius} outside (0, pi]")));
        }
        Ok(Window::Cap { center, radius })
    }

    /// Cap with the given solid angle in steradians.
    pub fn cap_with_area(center: SkyCoord, area: f64) -> Result<Self> {
        if !(area > 0.0 && area <= 4.0 * PI) {
            return Err(Error::Domain(format!("cap area {area} outside (0, 4pi]")));
        }
        Self::cap(center, cap_radius_for_area(area))
    }

    pub fn contains(&self, coord: &SkyCoord) -> bool {
        match self {
            Window::FullSky => true,
            Window::Cap { center, radius } => angular_distance(center, coord) <= *radius,
        }
    }

    /// Solid angle in steradians.
    pub fn area(&self) -> f64 {
        match self {
            Window::FullSky => 4.0 * PI,
            Window::Cap { radius, .. } => TAU * (1.0 - radius.cos()),
        }
    }
}

/// Cap radius enclosing `area` steradians: `arccos(1 - area / 2pi)`.
pub fn cap_radius_for_area(area: f64) -> f64 {
    (1.0 - area / TAU).clamp(-1.0, 1.0).acos()
}

/// A cell is included iff every one of its pixel centres lies in the window.
pub fn window_mask(mesh: &DyadicMesh, window: &Window) -> Vec<bool> {
    match window {
        Window::FullSky => vec![true; mesh.cell_count() as usize],
        Window::Cap { radius, .. } if *radius >= PI => vec![true; mesh.cell_count() as usize],
        Window::Cap { .. } => {
            let depth = mesh.grid.depth();
            (0..mesh.cell_count())
                .map(|cell| {
                    mesh.cell_pixels(cell).all(|p| {
                        let (lon, lat) = nested::center(depth, p);
                        window.contains(&SkyCoord::from_lon_lat(lon, lat))
                    })
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn base_resolution_centers() {
        let grid = PixelGrid::new(1, Ordering::Ring).unwrap();
        let centers = pixel_centers(&grid);
        assert_eq!(centers.len(), 12);
        let north = (2.0f64 / 3.0).acos();
        let south = (-2.0f64 / 3.0).acos();
        let count = |t: f64| centers.iter().filter(|c| (c.theta() - t).abs() < 1e-12).count();
        assert_eq!(count(north), 4);
        assert_eq!(count(FRAC_PI_2), 4);
        assert_eq!(count(south), 4);
        for i in 0..12 {
            for j in 0..i {
                assert!(chordal_distance(&centers[i], &centers[j]) > 0.1);
            }
        }
    }

    #[test]
    fn center_lookup_roundtrip() {
        for ordering in [Ordering::Nested, Ordering::Ring] {
            let grid = PixelGrid::new(16, ordering).unwrap();
            for i in 0..grid.pixel_count() {
                let c = pixel_center(&grid, i).unwrap();
                assert_eq!(pixel_at(&grid, &c), i);
            }
        }
    }

    #[test]
    fn nested_and_ring_centers_agree() {
        let nest = PixelGrid::new(8, Ordering::Nested).unwrap();
        let ring = PixelGrid::new(8, Ordering::Ring).unwrap();
        for i in 0..nest.pixel_count() {
            let r = nested_to_ring(8, i).unwrap();
            let a = pixel_center(&nest, i).unwrap();
            let b = pixel_center(&ring, r).unwrap();
            assert!(chordal_distance(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn nested_ring_bijection_exhaustive() {
        for depth in 0..=4 {
            let nside = 1u32 << depth;
            let n = 12 * (nside as u64).pow(2);
            let mut seen = vec![false; n as usize];
            for i in 0..n {
                let r = nested_to_ring(nside, i).unwrap();
                assert!(!seen[r as usize]);
                seen[r as usize] = true;
                assert_eq!(ring_to_nested(nside, r).unwrap(), i);
            }
        }
    }

    #[test]
    fn out_of_range_and_bad_nside() {
        let grid = PixelGrid::nested(4).unwrap();
        assert!(matches!(pixel_center(&grid, 192), Err(Error::PixelOutOfRange { .. })));
        assert!(PixelGrid::nested(3).is_err());
        assert!(PixelGrid::nested(0).is_err());
    }

    #[test]
    fn nside_1024_pixel_count() {
        assert_eq!(PixelGrid::nested(1024).unwrap().pixel_count(), 12_582_912);
    }

    #[test]
    fn chordal_examples() {
        let a = SkyCoord::new(0.3, 1.1).unwrap();
        assert_eq!(chordal_distance(&a, &a), 0.0);
        let north = SkyCoord::new(0.0, 0.0).unwrap();
        let south = SkyCoord::new(PI, 0.0).unwrap();
        assert_relative_eq!(chordal_distance(&north, &south), 2.0, max_relative = 1e-15);
        let eq = SkyCoord::new(FRAC_PI_2, 0.0).unwrap();
        assert_relative_eq!(chordal_distance(&north, &eq), 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn scale_coord_examples() {
        let x = SkyCoord::new(0.8 * PI, 0.6 * PI).unwrap();
        assert_eq!(scale_coord(&x, 1.0), x);
        let y = scale_coord(&x, 2.0);
        assert_relative_eq!(y.theta(), 0.6 * PI, max_relative = 1e-12);
        assert_relative_eq!(y.phi(), 1.2 * PI, max_relative = 1e-12);
        let z = scale_coord(&SkyCoord::new(FRAC_PI_2, PI).unwrap(), 3.0);
        assert_relative_eq!(z.theta(), FRAC_PI_2, max_relative = 1e-12);
        assert_relative_eq!(z.phi(), PI, max_relative = 1e-12);
    }

    #[test]
    fn mesh_examples() {
        let m = build_mesh(&PixelGrid::nested(1024).unwrap(), 3).unwrap();
        assert_eq!(m.cell_count(), 196_608);
        assert_eq!(m.pixels_per_cell(), 64);

        let m = build_mesh(&PixelGrid::nested(8).unwrap(), 3).unwrap();
        assert_eq!(m.cell_count(), 12);
        assert_eq!(m.cell_measure().value(), 1.0 / 12.0);

        let g = PixelGrid::nested(4).unwrap();
        let m = build_mesh(&g, 0).unwrap();
        assert_eq!(m.cell_count(), 192);
        assert_eq!(m.cell_measure(), CellMeasure { numerator: 1, denominator: 192 });

        assert!(matches!(build_mesh(&g, 3), Err(Error::InvalidGroupOrder { .. })));
    }

    #[test]
    fn mesh_measures_sum_to_one_exactly() {
        for depth in 0..=10u32 {
            let g = PixelGrid::nested(1 << depth).unwrap();
            for j in 0..=depth {
                let m = build_mesh(&g, j).unwrap();
                let cm = m.cell_measure();
                assert_eq!(m.cell_count() * cm.numerator, cm.denominator);
            }
        }
    }

    #[test]
    fn mesh_cells_are_coarse_pixels() {
        let g = PixelGrid::nested(16).unwrap();
        let m = build_mesh(&g, 2).unwrap();
        let coarse = m.coarse_grid();
        for cell in 0..m.cell_count() {
            for p in m.cell_pixels(cell) {
                let c = pixel_center(&g, p).unwrap();
                assert_eq!(pixel_at(&coarse, &c), cell);
            }
        }
    }

    #[test]
    fn full_sky_and_whole_cap_include_everything() {
        let m = build_mesh(&PixelGrid::nested(8).unwrap(), 1).unwrap();
        assert!(window_mask(&m, &Window::FullSky).iter().all(|&b| b));
        let cap = Window::cap(SkyCoord::new(1.0, 2.0).unwrap(), PI).unwrap();
        assert!(window_mask(&m, &cap).iter().all(|&b| b));
        assert!(Window::cap(SkyCoord::new(1.0, 2.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn cap_from_area_matches_solid_angle() {
        for area in [1.231, 0.4056, 0.0596, 0.0017] {
            let w = Window::cap_with_area(SkyCoord::new(1.0, 1.0).unwrap(), area).unwrap();
            assert_relative_eq!(w.area(), area, max_relative = 1e-10);
        }
    }

    #[test]
    fn cap_inclusion_is_conservative_and_converges() {
        // area 0.0596 sr; the included measure undershoots by at most the
        // boundary band (perimeter x cell diameter), never overshoots.
        let center = SkyCoord::new(1.2, 0.7).unwrap();
        let w = Window::cap_with_area(center, 0.0596).unwrap();
        let target = 0.0596 / (4.0 * PI);
        let radius = cap_radius_for_area(0.0596);
        let perimeter = TAU * radius.sin();
        let mut previous_gap = f64::INFINITY;
        for nside in [64u32, 128, 256] {
            let m = build_mesh(&PixelGrid::nested(nside).unwrap(), 3).unwrap();
            let mask = window_mask(&m, &w);
            let included = mask.iter().filter(|&&b| b).count() as f64 * m.cell_measure().value();
            let cell_diameter = 2.0 * (4.0 * PI * m.cell_measure().value()).sqrt();
            assert!(included <= target + 1e-15);
            let gap = target - included;
            assert!(gap <= perimeter * cell_diameter / (4.0 * PI), "nside {nside}: gap {gap}");
            assert!(gap < previous_gap);
            previous_gap = gap;
        }
    }

    #[test]
    fn nested_windows_give_nested_masks() {
        let m = build_mesh(&PixelGrid::nested(32).unwrap(), 2).unwrap();
        let c = SkyCoord::new(2.0, 4.0).unwrap();
        let small = window_mask(&m, &Window::cap(c, 0.4).unwrap());
        let large = window_mask(&m, &Window::cap(c, 0.9).unwrap());
        assert!(small.iter().any(|&b| b));
        for (s, l) in small.iter().zip(&large) {
            assert!(!s || *l);
        }
    }

    fn coord() -> impl Strategy<Value = SkyCoord> {
        (0.0..=PI, 0.0..TAU).prop_map(|(t, p)| SkyCoord::new(t, p).unwrap())
    }

    proptest! {
        #[test]
        fn scale_coord_stays_in_range(x in coord(), factor in 1e-3f64..1e6) {
            let y = scale_coord(&x, factor);
            prop_assert!(SkyCoord::new(y.theta(), y.phi()).is_ok());
        }

        #[test]
        fn chordal_triangle_inequality(a in coord(), b in coord(), c in coord()) {
            let ab = chordal_distance(&a, &b);
            let bc = chordal_distance(&b, &c);
            let ac = chordal_distance(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!((0.0..=2.0 + 1e-15).contains(&ab));
        }

        #[test]
        fn chordal_matches_angle(a in coord(), b in coord()) {
            let [x1, y1, z1] = a.to_unit_vector();
            let [x2, y2, z2] = b.to_unit_vector();
            let angle = (x1 * x2 + y1 * y2 + z1 * z2).clamp(-1.0, 1.0).acos();
            prop_assert!((chordal_distance(&a, &b) - 2.0 * (angle / 2.0).sin()).abs() < 1e-7);
        }
    }
}
