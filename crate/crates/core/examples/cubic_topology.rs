//! Builds the primal complex of a small cubic lattice and checks the chain
//! identities on it.

use phfoam::chains::{boundary, validate_complex, Chain};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::primal::{build_primal, FacetBcs};

fn main() -> phfoam::Result<()> {
    let spec = LatticeSpec::cubic([2; 3], 1.0, 0.1)
        .with_origin([0.5; 3])
        .with_bcs(FacetBcs::top_bottom_dirichlet());
    let graph = generate(&spec)?;
    println!(
        "graph: {} nodes, {} struts, {} windows, {} cells",
        graph.nodes.len(),
        graph.struts.len(),
        graph.windows.len(),
        graph.cells.len()
    );

    let primal = build_primal(&graph)?;
    let sk = &primal.skeleton;
    println!("complex counts [n0, n1, n2, n3] = {:?}", sk.counts());
    let k = primal.kind_counts();
    println!("nodes   inner/border/additional = {:?}", k.nodes);
    println!("edges   inner/border/additional = {:?}", k.edges);
    println!("faces   inner/border/additional = {:?}", k.faces);
    println!("volumes inner/border            = {:?}", k.volumes);

    let report = validate_complex(sk);
    println!("validation: {} violations", report.violation_count());

    let d1d2 = sk.boundary_matrix(1).matrix.matmul(&sk.boundary_matrix(2).matrix)?;
    let d2d3 = sk.boundary_matrix(2).matrix.matmul(&sk.boundary_matrix(3).matrix)?;
    println!("boundary of boundary vanishes: {} / {}", d1d2.is_zero(), d2d3.is_zero());

    let volume = Chain::from_terms(3, [(0, 1)]);
    let faces = boundary(&volume, sk)?;
    println!(
        "volume 0 is bounded by {} faces; their boundary has {} terms",
        faces.len(),
        boundary(&faces, sk)?.len()
    );
    Ok(())
}
