//! Estimates the Rényi function and spectrum of a simulated map, on the full
//! sky and inside a cap.

use std::f64::consts::PI;

use sphere_renyi::cascade::{simulate_cascade, CascadeConfig, CovarianceSpec};
use sphere_renyi::estimator::{cell_masses, empirical_T, empirical_spectrum, preprocess_shift_in_window};
use sphere_renyi::models::{renyi_T, ModelSpec};
use sphere_renyi::sphere::{build_mesh, Ordering, PixelGrid, SkyCoord, Window};

fn main() -> sphere_renyi::Result<()> {
    let spec = ModelSpec::log_normal(3.0, 1.0)?;
    let config = CascadeConfig {
        mother: spec,
        covariance: CovarianceSpec::new(1.0, 1.0)?,
        levels: 8,
        grid: PixelGrid::new(16, Ordering::Nested)?,
        seed: 3,
    };
    let map = simulate_cascade(&config)?;
    let mesh = build_mesh(map.grid(), 2)?;
    let q: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let windows = [
        ("full sky", Window::FullSky),
        ("cap r=pi/3", Window::cap(SkyCoord::new(PI / 2.0, PI)?, PI / 3.0)?),
    ];
    for (label, window) in windows {
        let shifted = preprocess_shift_in_window(&map, &mesh, &window)?;
        let masses = cell_masses(&shifted, &mesh, &window)?;
        let t = empirical_T(&masses, &q)?;
        let s = empirical_spectrum(&masses, &q)?;
        println!("{label}: {} cells", masses.included_count());
        for i in 0..q.len() {
            println!(
                "  q {:4.2}  T^ {:8.4}  T {:8.4}  alpha^ {:7.4}  f^ {:7.4}",
                q[i],
                t.t[i],
                renyi_T(&spec, q[i])?,
                s.alpha[i],
                s.f[i]
            );
        }
    }
    Ok(())
}
