#![allow(dead_code)]

use phfoam::dual::{build_dual, compute_geometry, DualComplex, GeometryTables};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::phassembly::{build_model, MaterialParams, StateSpaceModel};
use phfoam::primal::{build_primal, FacetBcs, PrimalComplex};

pub struct Built {
    pub primal: PrimalComplex,
    pub dual: DualComplex,
    pub geo: GeometryTables,
    pub model: StateSpaceModel,
}

pub fn build(spec: &LatticeSpec, mat: &MaterialParams) -> Built {
    try_build(spec, mat).expect("model")
}

pub fn try_build(spec: &LatticeSpec, mat: &MaterialParams) -> phfoam::Result<Built> {
    let graph = generate(spec)?;
    let primal = build_primal(&graph)?;
    let dual = build_dual(&primal)?;
    let geo = compute_geometry(&primal, &dual)?;
    let model = build_model(&primal, &geo, mat)?;
    Ok(Built { primal, dual, geo, model })
}

/// Cubic lattice whose nodes sit at cell centres, so every facet is crossed.
pub fn cubic_centred(n: usize, bcs: FacetBcs) -> LatticeSpec {
    LatticeSpec::cubic([n; 3], 1.0, 0.1).with_origin([0.5; 3]).with_bcs(bcs)
}

/// The 40 mm Kelvin cube with 424 inner nodes.
pub fn kelvin_cube() -> LatticeSpec {
    LatticeSpec::kelvin([40.0; 3], 12.0, 0.5)
        .with_azimuth(30.0)
        .with_bcs(FacetBcs::top_bottom_dirichlet())
}

/// Inner nodes nearest the vertical centre line at four heights.
pub fn axis_probes(model: &StateSpaceModel) -> Vec<(String, f64)> {
    [8.0, 16.0, 24.0, 32.0]
        .iter()
        .map(|&zt| {
            let dist = |p: &[f64; 3]| (p[0] - 20.0).powi(2) + (p[1] - 20.0).powi(2) + 4.0 * (p[2] - zt).powi(2);
            let best = model
                .layout
                .inner_nodes
                .iter()
                .min_by(|a, b| dist(&a.position).total_cmp(&dist(&b.position)))
                .unwrap();
            (best.id.clone(), best.position[2])
        })
        .collect()
}
