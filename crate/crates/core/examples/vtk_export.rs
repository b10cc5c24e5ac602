//! Writes legacy VTK frames of a transient run for external viewers.

use std::fs::File;
use std::io::BufWriter;

use phfoam::dual::{build_dual, compute_geometry};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::phassembly::{build_model, MaterialParams};
use phfoam::primal::{build_primal, Facet, FacetBcs};
use phfoam::shell::vtk::write_frame;
use phfoam::simulate::{run, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = LatticeSpec::kelvin([16.0; 3], 8.0, 0.3)
        .with_origin([1.0, 2.0, 0.5])
        .with_azimuth(15.0)
        .with_bcs(FacetBcs::top_bottom_dirichlet());
    let primal = build_primal(&generate(&spec)?)?;
    let geo = compute_geometry(&primal, &build_dual(&primal)?)?;
    let model = build_model(&primal, &geo, &MaterialParams::default())?;

    let mut cfg = SimConfig::new(0.1, 2.0, 300.0)
        .with_dirichlet(Facet::ZMin, &[(0.0, 300.0)])
        .with_dirichlet(Facet::ZMax, &[(0.0, 400.0)]);
    cfg.frame_every = 5;
    let trace = run(&model, &cfg)?;

    let dir = std::env::temp_dir().join("phfoam-vtk-example");
    std::fs::create_dir_all(&dir)?;
    for (k, frame) in trace.frames.iter().enumerate() {
        let path = dir.join(format!("frame_{k:05}.vtk"));
        write_frame(BufWriter::new(File::create(&path)?), &model, frame)?;
        println!("t = {:4.1} s -> {}", frame.t, path.display());
    }
    Ok(())
}
