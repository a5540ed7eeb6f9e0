//! Writes a map and a result document to disk and reads both back.

use sphere_renyi::estimator::{cell_masses, empirical_T, SphericalMap};
use sphere_renyi::io::{read_map_file, write_map_file, ResultDocument, RunProvenance};
use sphere_renyi::sphere::{build_mesh, Ordering, PixelGrid, Window};

fn main() -> sphere_renyi::Result<()> {
    let grid = PixelGrid::new(4, Ordering::Ring)?;
    let values: Vec<f64> = (0..grid.pixel_count()).map(|i| 1.0 + (i % 7) as f64).collect();
    let map = SphericalMap::new(grid, values)?;

    let dir = std::env::temp_dir().join(format!("sphere-renyi-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("map.srfm");
    write_map_file(&path, &map)?;
    let back = read_map_file(&path)?;
    println!("{} bytes, identical = {}", std::fs::metadata(&path)?.len(), back == map);

    let mesh = build_mesh(back.grid(), 1)?;
    let masses = cell_masses(&back, &mesh, &Window::FullSky)?;
    let curve = empirical_T(&masses, &[0.5, 1.0, 2.0])?;
    let doc = ResultDocument::new(&curve, None, RunProvenance::new("example", None, &"map.srfm")?);
    let json = doc.to_json()?;
    std::fs::write(dir.join("result.json"), &json)?;
    let read = ResultDocument::from_json(&std::fs::read_to_string(dir.join("result.json"))?)?;
    println!("{json}");
    println!("document round trip identical = {}", read == doc);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
