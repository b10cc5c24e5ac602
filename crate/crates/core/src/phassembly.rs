//! Two-phase heat model: skew-symmetric interconnection, diagonal
//! constitutive laws and the resulting linear state-space model.
//!
//! Units are mm, g, s, J, W and K throughout. The state is
//! `x = [Ûˢ_i; Ûᶠ_i]` (J), the input `u = [Tˢ_b; Tᶠ_b; Φ̂ˢ_b; Φ̂ᶠ_b]` with
//! Dirichlet node temperatures (K) and border-edge heat flow rates (W).

use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dual::GeometryTables;
use crate::error::{Error, Result};
use crate::geom::arr;
use crate::primal::{Domain, Facet, IncidenceBlocks, NodeOrigin, PrimalComplex, SNAP_TOL};
use crate::sparse::SparseMatrix;

/// Capacities below this are treated as singular [J/K].
pub const MIN_CAPACITY: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    /// Solid density [g/mm³].
    pub rho_s: f64,
    /// Fluid density [g/mm³].
    pub rho_f: f64,
    /// Solid specific heat [J/(g·K)].
    pub c_s: f64,
    /// Fluid specific heat [J/(g·K)].
    pub c_f: f64,
    /// Solid conductivity [W/(mm·K)].
    pub lambda_s: f64,
    /// Fluid conductivity [W/(mm·K)].
    pub lambda_f: f64,
    /// Interphase heat transfer coefficient [W/(mm²·K)].
    pub alpha: f64,
}

impl Default for MaterialParams {
    /// Aluminium struts in air.
    fn default() -> Self {
        MaterialParams {
            rho_s: 2.7e-3,
            rho_f: 1.204e-6,
            c_s: 0.897,
            c_f: 1.005,
            lambda_s: 0.2,
            lambda_f: 2.6e-5,
            alpha: 1.0e-4,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho_s", self.rho_s),
            ("rho_f", self.rho_f),
            ("c_s", self.c_s),
            ("c_f", self.c_f),
            ("lambda_s", self.lambda_s),
            ("lambda_f", self.lambda_f),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMaterial(format!("{name} must be positive and finite, got {v}")));
            }
        }
        // Zero decouples the phases.
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidMaterial(format!("alpha must be non-negative and finite, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let m: MaterialParams = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "material parameters".into(),
            source,
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            e => e,
        })
    }
}

/// Port ordering of `J`: efforts `[Tˢ_i; Tᶠ_i; Φ̂ˢ_i; Φ̂ᶠ_i; Φ̂ˢᶠ_i]` are mapped
/// to flows `[Û̇ˢ_i; Û̇ᶠ_i; Fˢ_i; Fᶠ_i; Fˢᶠ_i]`; `G` maps the boundary ports
/// `[Tˢ_b; Tᶠ_b; Φ̂ˢ_b; Φ̂ᶠ_b]` into the same flows.
#[derive(Clone, Debug)]
pub struct Interconnection {
    pub j: SparseMatrix<i32>,
    pub g: SparseMatrix<i32>,
    pub blocks: IncidenceBlocks,
}

impl Interconnection {
    pub fn n_inner(&self) -> usize {
        self.blocks.d1_ii.ncols()
    }

    pub fn m_inner(&self) -> usize {
        self.blocks.d1_ii.nrows()
    }

    pub fn n_border(&self) -> usize {
        self.blocks.d1_ib.ncols()
    }

    pub fn m_border(&self) -> usize {
        self.blocks.d1_bi.nrows()
    }

    /// `max |J + Jᵀ|`, computed in integers.
    pub fn skew_defect(&self) -> i32 {
        let jt = self.j.transpose();
        self.j.add(&jt).map(|s| s.iter().map(|(_, _, v)| v.abs()).max().unwrap_or(0)).unwrap_or(i32::MAX)
    }
}

pub fn assemble_interconnection(blocks: &IncidenceBlocks) -> Result<Interconnection> {
    let (m, n) = blocks.d1_ii.shape();
    let (mi, nb) = blocks.d1_ib.shape();
    let (mb, ni) = blocks.d1_bi.shape();
    if mi != m || ni != n {
        return Err(Error::Shape(format!(
            "d1_ii is {m}x{n}, d1_ib is {mi}x{nb}, d1_bi is {mb}x{ni}"
        )));
    }
    for (name, len, want) in [
        ("inner_nodes", blocks.inner_nodes.len(), n),
        ("inner_edges", blocks.inner_edges.len(), m),
        ("border_nodes", blocks.border_nodes.len(), nb),
        ("border_edges", blocks.border_edges.len(), mb),
    ] {
        if len != want {
            return Err(Error::Shape(format!("{name} has {len} entries, expected {want}")));
        }
    }

    let d = &blocks.d1_ii;
    let dt_neg = d.transpose().neg();
    let eye = SparseMatrix::<i32>::identity(n);
    let eye_neg = eye.neg();
    // Row and column offsets of the five port groups.
    let (us, uf, fs, ff, fsf) = (0, n, 2 * n, 2 * n + m, 2 * n + 2 * m);
    let (ts, tf, ps, pf, psf) = (us, uf, fs, ff, fsf);
    let size = 3 * n + 2 * m;
    let j = SparseMatrix::from_blocks(
        size,
        size,
        &[
            (us, ps, &dt_neg),
            (us, psf, &eye),
            (uf, pf, &dt_neg),
            (uf, psf, &eye_neg),
            (fs, ts, d),
            (ff, tf, d),
            (fsf, ts, &eye_neg),
            (fsf, tf, &eye),
        ],
    );

    let bt_neg = blocks.d1_bi.transpose().neg();
    let g = SparseMatrix::from_blocks(
        size,
        2 * nb + 2 * mb,
        &[
            (us, 2 * nb, &bt_neg),
            (uf, 2 * nb + mb, &bt_neg),
            (fs, 0, &blocks.d1_ib),
            (ff, nb, &blocks.d1_ib),
        ],
    );
    Ok(Interconnection {
        j,
        g,
        blocks: blocks.clone(),
    })
}

/// Diagonal constitutive laws, indexed by primal node or primal edge.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConstitutiveClosure {
    /// Cˢ = Vˢ ρˢ cˢ per node [J/K].
    pub cap_s: Vec<f64>,
    /// Cᶠ = Vᶠ ρᶠ cᶠ per node [J/K].
    pub cap_f: Vec<f64>,
    /// Λˢ = λˢ Aˢ / L per edge [W/K].
    pub cond_s: Vec<f64>,
    /// Λᶠ = λᶠ Aᶠ / L per edge [W/K].
    pub cond_f: Vec<f64>,
    /// H = α Aˢᶠ per node [W/K].
    pub h: Vec<f64>,
}

pub fn assemble_constitutive(geo: &GeometryTables, mat: &MaterialParams) -> Result<ConstitutiveClosure> {
    mat.validate()?;
    let mut cc = ConstitutiveClosure::default();
    for k in 0..geo.volume_full.len() {
        cc.cap_s.push(geo.volume_solid[k] * mat.rho_s * mat.c_s);
        cc.cap_f.push(geo.volume_fluid[k] * mat.rho_f * mat.c_f);
        cc.h.push(mat.alpha * geo.contact_area[k]);
    }
    for e in 0..geo.edge_length.len() {
        let len = geo.edge_length[e];
        if !(len > 0.0) {
            return Err(Error::DegenerateEdge(e));
        }
        cc.cond_s.push(mat.lambda_s * geo.area_solid[e] / len);
        cc.cond_f.push(mat.lambda_f * geo.area_fluid[e] / len);
    }
    Ok(cc)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    /// Primal node index.
    pub index: usize,
    pub id: String,
    pub position: [f64; 3],
    /// Box facets the node lies on.
    pub facets: Vec<Facet>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BorderEdgeEntry {
    /// Primal edge index.
    pub index: usize,
    /// Node ids of the endpoints, inside first.
    pub nodes: [String; 2],
    /// Facet crossed by the edge.
    pub facet: Option<Facet>,
    /// Solid part of the dual face [mm²].
    pub area_solid: f64,
    /// Fluid part of the dual face [mm²].
    pub area_fluid: f64,
}

/// Index maps between model rows and primal cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelLayout {
    pub domain: Option<Domain>,
    pub inner_nodes: Vec<NodeEntry>,
    pub border_nodes: Vec<NodeEntry>,
    pub inner_edges: Vec<usize>,
    pub border_edges: Vec<BorderEdgeEntry>,
}

impl ModelLayout {
    fn from_blocks(b: &IncidenceBlocks) -> Self {
        let node = |&index: &usize| NodeEntry {
            index,
            id: format!("n{index}"),
            ..Default::default()
        };
        ModelLayout {
            domain: None,
            inner_nodes: b.inner_nodes.iter().map(node).collect(),
            border_nodes: b.border_nodes.iter().map(node).collect(),
            inner_edges: b.inner_edges.clone(),
            border_edges: b
                .border_edges
                .iter()
                .map(|&index| BorderEdgeEntry {
                    index,
                    ..Default::default()
                })
                .collect(),
        }
    }

    /// Fills ids, positions, facets and border areas from the complex.
    fn describe(&mut self, p: &PrimalComplex, geo: &GeometryTables) {
        let facets = |k: usize| match p.node_origin[k] {
            NodeOrigin::Crossing { facet, .. } => vec![facet],
            _ => p.domain.facets_at(&p.positions[k], SNAP_TOL),
        };
        self.domain = Some(p.domain);
        for n in self.inner_nodes.iter_mut().chain(self.border_nodes.iter_mut()) {
            n.id = p.node_ids[n.index].clone();
            n.position = arr(&p.positions[n.index]);
            n.facets = facets(n.index);
        }
        for e in &mut self.border_edges {
            let [a, b] = p.skeleton.edge(e.index);
            e.nodes = [p.node_ids[a].clone(), p.node_ids[b].clone()];
            e.facet = facets(b).first().copied();
            e.area_solid = geo.area_solid[e.index];
            e.area_fluid = geo.area_fluid[e.index];
        }
    }
}

/// `ẋ = A x + B u` with `x = [Ûˢ_i; Ûᶠ_i]`.
#[derive(Clone, Debug)]
pub struct StateSpaceModel {
    pub layout: ModelLayout,
    pub d1_ii: SparseMatrix<i32>,
    pub d1_ib: SparseMatrix<i32>,
    pub d1_bi: SparseMatrix<i32>,
    /// `[Cˢ_i; Cᶠ_i]` [J/K].
    pub capacity: Vec<f64>,
    /// Λˢ on inner edges [W/K].
    pub cond_s: Vec<f64>,
    /// Λᶠ on inner edges [W/K].
    pub cond_f: Vec<f64>,
    /// H on inner nodes [W/K].
    pub h: Vec<f64>,
    /// Conductance form `M` with `A = M·C⁻¹` [W/K].
    pub conductance: SparseMatrix<f64>,
    /// [1/s]
    pub a: SparseMatrix<f64>,
    /// Temperature columns in W/K, flux columns dimensionless.
    pub b: SparseMatrix<f64>,
}

pub fn close_state_space(ic: &Interconnection, cc: &ConstitutiveClosure) -> Result<StateSpaceModel> {
    let blocks = &ic.blocks;
    let (n, m, nb, mb) = (ic.n_inner(), ic.m_inner(), ic.n_border(), ic.m_border());
    let max_node = blocks.inner_nodes.iter().chain(&blocks.border_nodes).max().map_or(0, |&k| k + 1);
    let max_edge = blocks.inner_edges.iter().chain(&blocks.border_edges).max().map_or(0, |&k| k + 1);
    if cc.cap_s.len() < max_node || cc.cap_f.len() < max_node || cc.h.len() < max_node {
        return Err(Error::Shape(format!("closure covers {} nodes, model needs {max_node}", cc.cap_s.len())));
    }
    if cc.cond_s.len() < max_edge || cc.cond_f.len() < max_edge {
        return Err(Error::Shape(format!("closure covers {} edges, model needs {max_edge}", cc.cond_s.len())));
    }

    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&k| v[k]).collect::<Vec<f64>>();
    let cond_s = pick(&cc.cond_s, &blocks.inner_edges);
    let cond_f = pick(&cc.cond_f, &blocks.inner_edges);
    let h = pick(&cc.h, &blocks.inner_nodes);
    let mut capacity = pick(&cc.cap_s, &blocks.inner_nodes);
    capacity.extend(pick(&cc.cap_f, &blocks.inner_nodes));
    if let Some((index, &value)) = capacity.iter().enumerate().find(|(_, &c)| !(c >= MIN_CAPACITY)) {
        return Err(Error::SingularCapacity { index, value });
    }

    // Eliminate F = J_FT·T + G_FT·T_b, Φ̂ = R·F, leaving Û̇ = (J_UΦ R J_FT) T + ...
    let range = |a: usize, len: usize| (a..a + len).collect::<Vec<usize>>();
    let (rows_u, rows_f) = (range(0, 2 * n), range(2 * n, 3 * n + 2 * m - 2 * n));
    let cols_t = range(0, 2 * n);
    let cols_phi = range(2 * n, 2 * m + n);
    let j = ic.j.to_f64();
    let g = ic.g.to_f64();
    let j_up = j.select(&rows_u, &cols_phi);
    let j_ft = j.select(&rows_f, &cols_t);
    let mut resistance_inv = cond_s.clone();
    resistance_inv.extend(&cond_f);
    resistance_inv.extend(&h);
    let coupled = j_up.scale_cols(&resistance_inv);
    let conductance = coupled.matmul(&j_ft)?;
    let g_ft = g.select(&rows_f, &range(0, 2 * nb + 2 * mb));
    let g_u = g.select(&rows_u, &range(0, 2 * nb + 2 * mb));
    let b = coupled.matmul(&g_ft)?.add(&g_u)?;
    let inv_c: Vec<f64> = capacity.iter().map(|c| 1.0 / c).collect();
    let a = conductance.scale_cols(&inv_c);

    Ok(StateSpaceModel {
        layout: ModelLayout::from_blocks(blocks),
        d1_ii: blocks.d1_ii.clone(),
        d1_ib: blocks.d1_ib.clone(),
        d1_bi: blocks.d1_bi.clone(),
        capacity,
        cond_s,
        cond_f,
        h,
        conductance,
        a,
        b,
    })
}

/// Full pipeline from a classified complex and its geometry.
pub fn build_model(p: &PrimalComplex, geo: &GeometryTables, mat: &MaterialParams) -> Result<StateSpaceModel> {
    let blocks = crate::primal::split_incidence(p)?;
    let ic = assemble_interconnection(&blocks)?;
    let cc = assemble_constitutive(geo, mat)?;
    let mut model = close_state_space(&ic, &cc)?;
    model.layout.describe(p, geo);
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    state_dim: usize,
    input_dim: usize,
    inner_nodes: usize,
    inner_edges: usize,
    border_nodes: usize,
    border_edges: usize,
    state_layout: String,
    input_layout: String,
    units: Units,
    capacity: Vec<f64>,
    cond_s: Vec<f64>,
    cond_f: Vec<f64>,
    h: Vec<f64>,
    layout: ModelLayout,
}

#[derive(Serialize, Deserialize)]
struct Units {
    a: String,
    b: String,
    capacity: String,
    conductance: String,
    h: String,
    length: String,
}

const BUNDLE_FORMAT: &str = "phfoam-model-1";

impl StateSpaceModel {
    pub fn n_inner(&self) -> usize {
        self.d1_ii.ncols()
    }

    pub fn n_border_nodes(&self) -> usize {
        self.d1_ib.ncols()
    }

    pub fn n_border_edges(&self) -> usize {
        self.d1_bi.nrows()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n_inner()
    }

    pub fn input_dim(&self) -> usize {
        2 * self.n_border_nodes() + 2 * self.n_border_edges()
    }

    /// `ẋ = A x + B u`.
    pub fn derivative(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut dx = self.a.mul_vec(x);
        for (d, bu) in dx.iter_mut().zip(self.b.mul_vec(u)) {
            *d += bu;
        }
        dx
    }

    pub fn temperatures(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.capacity).map(|(u, c)| u / c).collect()
    }

    pub fn energies(&self, t: &[f64]) -> Vec<f64> {
        t.iter().zip(&self.capacity).map(|(t, c)| t * c).collect()
    }

    /// Net heat flow into the inner nodes through the boundary [W]:
    /// conduction along edges to Dirichlet nodes plus border-edge inputs.
    pub fn boundary_power(&self, t: &[f64], u: &[f64]) -> f64 {
        let n = self.n_inner();
        let (nb, mb) = (self.n_border_nodes(), self.n_border_edges());
        let (ts_b, tf_b) = (&u[..nb], &u[nb..2 * nb]);
        let (phi_s, phi_f) = (&u[2 * nb..2 * nb + mb], &u[2 * nb + mb..]);
        let mut power = 0.0;
        for e in 0..self.d1_ib.nrows() {
            let inner_sum: i32 = self.d1_ii.row(e).map(|(_, v)| v).sum();
            if inner_sum == 0 {
                continue;
            }
            let mut fs = 0.0;
            let mut ff = 0.0;
            for (k, v) in self.d1_ii.row(e) {
                fs += v as f64 * t[k];
                ff += v as f64 * t[n + k];
            }
            for (k, v) in self.d1_ib.row(e) {
                fs += v as f64 * ts_b[k];
                ff += v as f64 * tf_b[k];
            }
            // Heat flow along the edge times the net sign seen by inner nodes.
            power -= inner_sum as f64 * (self.cond_s[e] * fs + self.cond_f[e] * ff);
        }
        for e in 0..mb {
            let inner_sum: i32 = self.d1_bi.row(e).map(|(_, v)| v).sum();
            power -= inner_sum as f64 * (phi_s[e] + phi_f[e]);
        }
        power
    }

    /// Eigenvalues of `A` [1/s], ascending. `A` is similar to the symmetric
    /// `C^{-1/2} M C^{-1/2}`, so the spectrum is real.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let s: Vec<f64> = self.capacity.iter().map(|c| 1.0 / c.sqrt()).collect();
        let sym = self.conductance.scale_rows(&s).scale_cols(&s).to_nalgebra();
        let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Writes the matrices as triplet files next to a `model.json` manifest.
    pub fn write_bundle(&self, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.display().to_string(),
            source,
        })?;
        let mut written = Vec::new();
        let mut put = |name: &str, text: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|source| Error::File {
                path: path.display().to_string(),
                source,
            })?;
            written.push(path);
            Ok(())
        };
        let diag = |v: &[f64]| SparseMatrix::from_diagonal(v).to_triplet_string();
        let n = self.n_inner();
        put("A.txt", self.a.to_triplet_string())?;
        put("B.txt", self.b.to_triplet_string())?;
        put("C_s.txt", diag(&self.capacity[..n]))?;
        put("C_f.txt", diag(&self.capacity[n..]))?;
        put("Lambda_s.txt", diag(&self.cond_s))?;
        put("Lambda_f.txt", diag(&self.cond_f))?;
        put("H.txt", diag(&self.h))?;
        put("d1_ii.txt", self.d1_ii.to_triplet_string())?;
        put("d1_ib.txt", self.d1_ib.to_triplet_string())?;
        put("d1_bi.txt", self.d1_bi.to_triplet_string())?;
        let manifest = Manifest {
            format: BUNDLE_FORMAT.into(),
            state_dim: self.state_dim(),
            input_dim: self.input_dim(),
            inner_nodes: n,
            inner_edges: self.d1_ii.nrows(),
            border_nodes: self.n_border_nodes(),
            border_edges: self.n_border_edges(),
            state_layout: "[U_s(inner nodes); U_f(inner nodes)]".into(),
            input_layout: "[T_s(border nodes); T_f(border nodes); Phi_s(border edges); Phi_f(border edges)]".into(),
            units: Units {
                a: "1/s".into(),
                b: "W/K (temperature columns), 1 (flux columns)".into(),
                capacity: "J/K".into(),
                conductance: "W/K".into(),
                h: "W/K".into(),
                length: "mm".into(),
            },
            capacity: self.capacity.clone(),
            cond_s: self.cond_s.clone(),
            cond_f: self.cond_f.clone(),
            h: self.h.clone(),
            layout: self.layout.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        put("model.json", json)?;
        Ok(written)
    }

    /// Rebuilds a model from a bundle directory. The closed matrices are
    /// recomputed from the stored incidence blocks and closures.
    pub fn read_bundle(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let open = |name: &str| {
            let path = dir.join(name);
            fs::File::open(&path)
                .map(BufReader::new)
                .map_err(|source| Error::File {
                    path: path.display().to_string(),
                    source,
                })
        };
        let path = dir.join("model.json");
        let manifest: Manifest = serde_json::from_reader(open("model.json")?).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        if manifest.format != BUNDLE_FORMAT {
            return Err(Error::Parse(format!("unknown bundle format '{}'", manifest.format)));
        }
        let d1_ii = SparseMatrix::<i32>::read_triplets(open("d1_ii.txt")?)?;
        let d1_ib = SparseMatrix::<i32>::read_triplets(open("d1_ib.txt")?)?;
        let d1_bi = SparseMatrix::<i32>::read_triplets(open("d1_bi.txt")?)?;
        let n = d1_ii.ncols();
        let m = d1_ii.nrows();
        if manifest.capacity.len() != 2 * n || manifest.cond_s.len() != m || manifest.h.len() != n {
            return Err(Error::Shape("bundle vectors do not match incidence blocks".into()));
        }
        // Blocks and closures indexed locally.
        let blocks = IncidenceBlocks {
            inner_nodes: (0..n).collect(),
            border_nodes: (n..n + d1_ib.ncols()).collect(),
            inner_edges: (0..m).collect(),
            border_edges: (m..m + d1_bi.nrows()).collect(),
            d1_ii,
            d1_ib,
            d1_bi,
        };
        let total_nodes = n + blocks.border_nodes.len();
        let total_edges = m + blocks.border_edges.len();
        let pad = |v: &[f64], len: usize| {
            let mut out = v.to_vec();
            out.resize(len, 0.0);
            out
        };
        let cc = ConstitutiveClosure {
            cap_s: pad(&manifest.capacity[..n], total_nodes),
            cap_f: pad(&manifest.capacity[n..], total_nodes),
            cond_s: pad(&manifest.cond_s, total_edges),
            cond_f: pad(&manifest.cond_f, total_edges),
            h: pad(&manifest.h, total_nodes),
        };
        let ic = assemble_interconnection(&blocks)?;
        let mut model = close_state_space(&ic, &cc)?;
        model.layout = manifest.layout;
        Ok(model)
    }
}
