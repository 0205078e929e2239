//! The exact NURBS quarter annulus and the field meshes built on it.
//!
//! Usage: `cargo run --example annulus_geometry -- [level]`

use plate_iga::benchmarks::{three_step_spaces, MeshRecipe, LAYER_FRACTION};
use plate_iga::geometry::GeometryMap;
use plate_iga::norms::physical_mesh_size;

fn main() -> plate_iga::Result<()> {
    let level: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let g = GeometryMap::quarter_annulus(1.0, 2.5)?;
    println!("control net (degree, knots, x y weight):\n{}", g.to_control_net());

    // u runs along the arcs, v runs outward
    let mut worst = 0.0f64;
    for i in 0..=20 {
        for j in 0..=4 {
            let (u, v) = (i as f64 / 20.0, j as f64 / 4.0);
            let x = g.evaluate([u, v])?.physical_point;
            worst = worst.max((x[0].hypot(x[1]) - (1.0 + 1.5 * v)).abs());
        }
    }
    println!("largest radius error on a 21 x 5 lattice: {worst:.1e}");

    let refined = g.refined(&[0.25, 0.5, 0.75], &[0.5])?.elevated(3, 3)?;
    let a = g.evaluate([0.3, 0.6])?;
    let b = refined.evaluate([0.3, 0.6])?;
    println!(
        "refined and elevated map: {} control points, F(0.3, 0.6) moves by {:.1e}, det DF = {:.6}",
        refined.control_points().len(),
        (a.physical_point[0] - b.physical_point[0]).hypot(a.physical_point[1] - b.physical_point[1]),
        a.det
    );

    for (name, recipe) in [
        ("uniform", MeshRecipe::Uniform),
        ("layer-adapted", MeshRecipe::LayerAdapted { layer: LAYER_FRACTION }),
    ] {
        let spaces = three_step_spaces(&g, 3, 2, &recipe.mesh(level)?)?;
        let bv = spaces.mesh.breakpoints_v();
        println!(
            "{name:>13} level {level}: {} x {} elements, h = {:.4}, first radial element {:.4}, unknowns {}",
            spaces.mesh.n_elements_u(),
            spaces.mesh.n_elements_v(),
            physical_mesh_size(&g, &spaces.mesh)?,
            1.5 * bv[1],
            spaces.total_ndof()
        );
    }
    Ok(())
}
