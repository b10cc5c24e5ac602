//! Assembles the two-phase state-space model, checks its structure and writes
//! it as a matrix bundle.

use phfoam::dual::{build_dual, compute_geometry};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::phassembly::{assemble_interconnection, build_model, MaterialParams};
use phfoam::primal::{build_primal, split_incidence, BcKind, FacetBcs};

fn main() -> phfoam::Result<()> {
    let spec = LatticeSpec::cubic([3; 3], 1.0, 0.1)
        .with_origin([0.5; 3])
        .with_bcs(FacetBcs::all(BcKind::Nbc));
    let primal = build_primal(&generate(&spec)?)?;
    let geo = compute_geometry(&primal, &build_dual(&primal)?)?;

    let blocks = split_incidence(&primal)?;
    let ic = assemble_interconnection(&blocks)?;
    println!("J is {}x{}, max |J + J^T| = {}", ic.j.nrows(), ic.j.ncols(), ic.skew_defect());

    let model = build_model(&primal, &geo, &MaterialParams::default())?;
    println!("state dimension {}, inputs {}", model.state_dim(), model.input_dim());

    let mut eig = model.eigenvalues();
    eig.sort_by(|a, b| b.total_cmp(a));
    println!("largest eigenvalues of A: {:?}", &eig[..3]);

    let dir = std::env::temp_dir().join("phfoam-assemble-example");
    let files = model.write_bundle(&dir)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
