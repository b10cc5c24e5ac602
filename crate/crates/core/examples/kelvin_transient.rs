//! Heats the lid of the Kelvin foam cube and follows four probes on the
//! vertical centre line.

use phfoam::dual::{build_dual, compute_geometry};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::phassembly::{build_model, MaterialParams};
use phfoam::primal::{build_primal, Facet, FacetBcs};
use phfoam::simulate::{run, SimConfig};

fn main() -> phfoam::Result<()> {
    let spec = LatticeSpec::kelvin([40.0; 3], 12.0, 0.5)
        .with_azimuth(30.0)
        .with_bcs(FacetBcs::top_bottom_dirichlet());
    let primal = build_primal(&generate(&spec)?)?;
    let geo = compute_geometry(&primal, &build_dual(&primal)?)?;
    let model = build_model(&primal, &geo, &MaterialParams::default())?;

    let probes: Vec<String> = [8.0, 16.0, 24.0, 32.0]
        .iter()
        .map(|&z| {
            let d = |p: &[f64; 3]| (p[0] - 20.0).powi(2) + (p[1] - 20.0).powi(2) + 4.0 * (p[2] - z).powi(2);
            let best = model
                .layout
                .inner_nodes
                .iter()
                .min_by(|a, b| d(&a.position).total_cmp(&d(&b.position)))
                .expect("inner nodes");
            best.id.clone()
        })
        .collect();

    let cfg = SimConfig::new(0.5, 60.0, 300.0)
        .with_dirichlet(Facet::ZMin, &[(0.0, 300.0)])
        .with_dirichlet(Facet::ZMax, &[(0.0, 400.0)])
        .with_probes(&probes);
    let trace = run(&model, &cfg)?;

    println!("{:>6} {}", "t [s]", probes.iter().map(|p| format!("{p:>10}")).collect::<String>());
    for k in (0..trace.time.len()).step_by(12) {
        let temps: String = trace.probe_series.iter().map(|s| format!("{:>10.3}", s[k])).collect();
        println!("{:>6.1} {temps}", trace.time[k]);
    }
    println!("largest energy audit residual: {:e} J", trace.max_audit_residual());
    Ok(())
}
