//! Classifies the 40 mm Kelvin foam cube and reports its dual geometry.

use phfoam::dual::{build_dual, compute_geometry};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::primal::{build_primal, FacetBcs};

fn main() -> phfoam::Result<()> {
    let spec = LatticeSpec::kelvin([40.0; 3], 12.0, 0.5)
        .with_azimuth(30.0)
        .with_bcs(FacetBcs::top_bottom_dirichlet());
    let primal = build_primal(&generate(&spec)?)?;
    let dual = build_dual(&primal)?;
    let geo = compute_geometry(&primal, &dual)?;

    let k = primal.kind_counts();
    println!("counts [n0, n1, n2, n3]: {:?}", primal.skeleton.counts());
    println!("nodes inner/border/additional: {:?}", k.nodes);
    println!("state dimension: {} (two phases of {} inner nodes)", 2 * k.nodes[0], k.nodes[0]);

    let solid = geo.total_solid_volume();
    let total = geo.total_volume();
    println!("dual volumes sum to {total:.6} mm^3 (box {:.1})", primal.domain.volume());
    println!("porosity {:.4}", 1.0 - solid / total);
    println!("contact area {:.2} mm^2", geo.contact_area.iter().sum::<f64>());
    Ok(())
}
