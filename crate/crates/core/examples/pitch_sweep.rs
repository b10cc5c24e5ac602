//! Sweeps the Kelvin cell pitch in the 40 mm cube and lists the resulting
//! state dimensions.

use phfoam::lattice::{generate, LatticeSpec};
use phfoam::primal::{build_primal, CellKind, FacetBcs};

fn main() -> phfoam::Result<()> {
    for step in 0..=12 {
        let pitch = 11.0 + 0.25 * f64::from(step);
        let spec = LatticeSpec::kelvin([40.0; 3], pitch, 0.5)
            .with_azimuth(30.0)
            .with_bcs(FacetBcs::top_bottom_dirichlet());
        let primal = build_primal(&generate(&spec)?)?;
        let inner = primal.node_kinds.iter().filter(|&&k| k == CellKind::Inner).count();
        println!("pitch {pitch:5.2} mm: {inner:4} inner nodes, state dimension {}", 2 * inner);
    }
    Ok(())
}
