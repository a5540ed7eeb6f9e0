//! Pixel counts, index conversions and dyadic meshes of the equal-area grid.

use sphere_renyi::sphere::{build_mesh, nested_to_ring, pixel_center, ring_to_nested, Ordering, PixelGrid};

fn main() -> sphere_renyi::Result<()> {
    for nside in [1u32, 16, 1024] {
        let grid = PixelGrid::new(nside, Ordering::Ring)?;
        println!("nside {nside:5}: {:9} pixels of {:.3e} sr", grid.pixel_count(), grid.pixel_area());
    }
    let grid = PixelGrid::new(1024, Ordering::Nested)?;
    let mesh = build_mesh(&grid, 3)?;
    println!("group order 3: {} cells of {} pixels", mesh.cell_count(), mesh.pixels_per_cell());

    let small = PixelGrid::new(2, Ordering::Nested)?;
    for nested in 0..8 {
        let ring = nested_to_ring(2, nested)?;
        let c = pixel_center(&small, nested)?;
        println!("nested {nested} -> ring {ring} -> nested {}  center ({:.4}, {:.4})", ring_to_nested(2, ring)?, c.theta(), c.phi());
    }
    Ok(())
}
