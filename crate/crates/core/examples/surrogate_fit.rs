//! Fits the effective diffusivity of a one-dimensional slab to the probe
//! series of a lattice simulation.

use phfoam::dual::{build_dual, compute_geometry};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::phassembly::{build_model, MaterialParams};
use phfoam::primal::{build_primal, Facet, FacetBcs};
use phfoam::simulate::{analytic_1d, fit_trace, run, FitRequest, SimConfig};

fn main() -> phfoam::Result<()> {
    let spec = LatticeSpec::cubic([10; 3], 4.0, 0.5).with_bcs(FacetBcs::top_bottom_dirichlet());
    let primal = build_primal(&generate(&spec)?)?;
    let geo = compute_geometry(&primal, &build_dual(&primal)?)?;
    let model = build_model(&primal, &geo, &MaterialParams::default())?;

    let probes: Vec<String> = [8.0, 16.0, 24.0, 32.0]
        .iter()
        .filter_map(|&z| {
            model
                .layout
                .inner_nodes
                .iter()
                .find(|n| n.position == [20.0, 20.0, z])
                .map(|n| n.id.clone())
        })
        .collect();
    let mut cfg = SimConfig::new(0.1, 30.0, 300.0)
        .with_dirichlet(Facet::ZMin, &[(0.0, 300.0)])
        .with_dirichlet(Facet::ZMax, &[(0.0, 400.0)])
        .with_probes(&probes);
    cfg.fit = Some(FitRequest { t_bottom: 300.0, t_top: 400.0, t_initial: 300.0, order: 200 });

    let trace = run(&model, &cfg)?;
    let fit = fit_trace(&model, &cfg, &trace)?.expect("fit requested");
    println!("a_eff = {:.3} mm^2/s, rms misfit {:.3} K", fit.a_eff, fit.rms);

    let mid = analytic_1d(fit.a_eff, 40.0, 300.0, 400.0, 300.0, 20.0, 5.0, fit.order);
    println!("slab mid-plane temperature at t = 5 s: {mid:.3} K");
    Ok(())
}
