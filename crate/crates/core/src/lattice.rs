//! Synthetic foam graphs: a cubic strut lattice and a body-centred lattice of
//! Kelvin cells (truncated octahedra), both clipped to an axis-aligned box.
//!
//! Lattice vertices are handled as integer keys so that shared vertices,
//! struts and windows of neighbouring cells are identified exactly. The
//! lattice may be shifted by `origin` and rotated about the z axis by
//! `azimuth_deg`; with the defaults the lattice is aligned with the box.
//!
//! Struts that cross a Dirichlet facet, or pass through the box with both
//! ends outside, are split at the facet so that every generated strut
//! leaves the box at most once and never through a Dirichlet facet.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{area_vector, arr, clip_halfspace, vertex_mean, Vec3};
use crate::primal::graph::{FluidCell, GraphNode, Strut, Window};
use crate::primal::{Domain, Facet, FacetBcs, FoamGraph, SNAP_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Cubic,
    Kelvin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    /// Box edge lengths l × w × h [mm]; the box spans `[0, extents]`.
    pub extents: [f64; 3],
    /// Cube edge for the cubic lattice, cubic period of the body-centred
    /// lattice for Kelvin cells [mm].
    pub pitch: f64,
    /// [mm]
    pub strut_radius: f64,
    #[serde(default)]
    pub boundary_conditions: FacetBcs,
    /// Position of the lattice origin relative to the box minimum [mm].
    #[serde(default)]
    pub origin: [f64; 3],
    /// Lattice rotation about the z axis through the lattice origin [deg].
    #[serde(default)]
    pub azimuth_deg: f64,
}

impl LatticeSpec {
    pub fn cubic(cells: [usize; 3], pitch: f64, strut_radius: f64) -> Self {
        Self {
            kind: LatticeKind::Cubic,
            extents: cells.map(|n| n as f64 * pitch),
            pitch,
            strut_radius,
            boundary_conditions: FacetBcs::default(),
            origin: [0.0; 3],
            azimuth_deg: 0.0,
        }
    }

    pub fn kelvin(extents: [f64; 3], pitch: f64, strut_radius: f64) -> Self {
        Self {
            kind: LatticeKind::Kelvin,
            extents,
            pitch,
            strut_radius,
            boundary_conditions: FacetBcs::default(),
            origin: [0.0; 3],
            azimuth_deg: 0.0,
        }
    }

    pub fn with_bcs(mut self, bcs: FacetBcs) -> Self {
        self.boundary_conditions = bcs;
        self
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_azimuth(mut self, deg: f64) -> Self {
        self.azimuth_deg = deg;
        self
    }

    pub fn domain(&self) -> Domain {
        Domain {
            min: [0.0; 3],
            max: self.extents,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad(format!("extents {:?} must be positive", self.extents));
        }
        if !(self.pitch.is_finite() && self.pitch > 0.0) {
            return bad(format!("pitch {} must be positive", self.pitch));
        }
        if !(self.strut_radius.is_finite() && self.strut_radius >= 0.0) {
            return bad(format!("strut radius {} must be non-negative", self.strut_radius));
        }
        if self.origin.iter().any(|o| !o.is_finite()) || !self.azimuth_deg.is_finite() {
            return bad("origin and azimuth must be finite".into());
        }
        match self.kind {
            LatticeKind::Cubic => {
                for e in self.extents {
                    let n = e / self.pitch;
                    if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
                        return bad(format!("pitch {} does not divide extent {e}", self.pitch));
                    }
                }
            }
            LatticeKind::Kelvin => {
                let smallest = self.extents.iter().copied().fold(f64::INFINITY, f64::min);
                if self.pitch > smallest {
                    return bad(format!(
                        "pitch {} is larger than the box ({smallest} mm)",
                        self.pitch
                    ));
                }
            }
        }
        Ok(())
    }
}

type Key = [i64; 3];

/// One cell of a lattice in integer key space: vertices and outward faces
/// as vertex-index loops.
struct CellTemplate {
    vertices: Vec<Key>,
    faces: Vec<Vec<usize>>,
}

fn add(a: Key, b: Key) -> Key {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Unit cube with corner at `base`.
fn cube_cell(base: Key) -> CellTemplate {
    let mut vertices = Vec::with_capacity(8);
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                vertices.push(add(base, [x, y, z]));
            }
        }
    }
    let v = |x: usize, y: usize, z: usize| x + 2 * y + 4 * z;
    let faces = vec![
        vec![v(0, 0, 0), v(0, 1, 0), v(1, 1, 0), v(1, 0, 0)],
        vec![v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)],
        vec![v(0, 0, 0), v(1, 0, 0), v(1, 0, 1), v(0, 0, 1)],
        vec![v(0, 1, 0), v(0, 1, 1), v(1, 1, 1), v(1, 1, 0)],
        vec![v(0, 0, 0), v(0, 0, 1), v(0, 1, 1), v(0, 1, 0)],
        vec![v(1, 0, 0), v(1, 1, 0), v(1, 1, 1), v(1, 0, 1)],
    ];
    CellTemplate { vertices, faces }
}

/// Vertex offsets of a truncated octahedron: all permutations of (0, ±1, ±2).
fn kelvin_offsets() -> Vec<Key> {
    let mut out = Vec::with_capacity(24);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for p in perms {
        for s1 in [1, -1] {
            for s2 in [1, -1] {
                let base = [0i64, s1, 2 * s2];
                out.push([base[p[0]], base[p[1]], base[p[2]]]);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Orders the vertices of a planar face counter-clockwise about `normal`.
fn order_ccw(points: &[Key], normal: Vec3) -> Vec<usize> {
    let pts: Vec<Vec3> = points.iter().map(|k| Vec3::new(k[0] as f64, k[1] as f64, k[2] as f64)).collect();
    let c = vertex_mean(&pts);
    let u = (pts[0] - c).normalize();
    let w = normal.normalize().cross(&u);
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let angle = |i: usize| {
        let d = pts[i] - c;
        d.dot(&w).atan2(d.dot(&u))
    };
    idx.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    idx
}

/// Truncated octahedron centred at `center`, in units of a quarter period.
fn kelvin_cell_keys(center: Key) -> CellTemplate {
    let offsets = kelvin_offsets();
    let mut faces = Vec::with_capacity(14);
    let mut normals: Vec<Key> = Vec::new();
    for axis in 0..3 {
        for s in [1, -1] {
            let mut n = [0; 3];
            n[axis] = s;
            normals.push(n);
        }
    }
    for sx in [1, -1] {
        for sy in [1, -1] {
            for sz in [1, -1] {
                normals.push([sx, sy, sz]);
            }
        }
    }
    for n in normals {
        let level = if n.iter().filter(|&&c| c != 0).count() == 1 { 2 } else { 3 };
        let members: Vec<usize> = (0..offsets.len())
            .filter(|&i| (0..3).map(|k| offsets[i][k] * n[k]).sum::<i64>() == level)
            .collect();
        let keys: Vec<Key> = members.iter().map(|&i| offsets[i]).collect();
        let order = order_ccw(&keys, Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64));
        faces.push(order.into_iter().map(|k| members[k]).collect());
    }
    CellTemplate {
        vertices: offsets.into_iter().map(|o| add(center, o)).collect(),
        faces,
    }
}

/// Geometry of one unclipped Kelvin cell of cubic period `pitch`, centred at
/// `center`: vertices, edges and faces (outward vertex loops).
pub fn kelvin_cell(center: [f64; 3], pitch: f64) -> (Vec<Vec3>, Vec<[usize; 2]>, Vec<Vec<usize>>) {
    let t = kelvin_cell_keys([0, 0, 0]);
    let q = pitch / 4.0;
    let vertices = t
        .vertices
        .iter()
        .map(|k| Vec3::new(center[0] + k[0] as f64 * q, center[1] + k[1] as f64 * q, center[2] + k[2] as f64 * q))
        .collect();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    for f in &t.faces {
        for i in 0..f.len() {
            let (a, b) = (f[i], f[(i + 1) % f.len()]);
            let e = [a.min(b), a.max(b)];
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    edges.sort_unstable();
    (vertices, edges, t.faces)
}

/// Maps integer keys to world coordinates.
struct Placement {
    unit: f64,
    origin: Vec3,
    cos: f64,
    sin: f64,
}

impl Placement {
    fn new(spec: &LatticeSpec, unit: f64) -> Self {
        let th = spec.azimuth_deg.to_radians();
        Self {
            unit,
            origin: Vec3::new(spec.origin[0], spec.origin[1], spec.origin[2]),
            cos: th.cos(),
            sin: th.sin(),
        }
    }

    fn world(&self, k: Key) -> Vec3 {
        let (x, y, z) = (k[0] as f64 * self.unit, k[1] as f64 * self.unit, k[2] as f64 * self.unit);
        self.origin + Vec3::new(self.cos * x - self.sin * y, self.sin * x + self.cos * y, z)
    }

    /// Key-space bounding box of the domain.
    fn local_bounds(&self, domain: &Domain) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for corner in 0..8 {
            let p = Vec3::new(
                if corner & 1 == 0 { domain.min[0] } else { domain.max[0] },
                if corner & 2 == 0 { domain.min[1] } else { domain.max[1] },
                if corner & 4 == 0 { domain.min[2] } else { domain.max[2] },
            ) - self.origin;
            let l = [
                (self.cos * p.x + self.sin * p.y) / self.unit,
                (-self.sin * p.x + self.cos * p.y) / self.unit,
                p.z / self.unit,
            ];
            for k in 0..3 {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(l[k]);
            }
        }
        (lo, hi)
    }
}

/// True if some face of the cell has a positive-area part inside the box
/// that does not lie in a facet plane.
fn cell_meets_box(points: &[Vec3], faces: &[Vec<usize>], domain: &Domain) -> bool {
    if domain.strictly_contains(&vertex_mean(points), SNAP_TOL) {
        return true;
    }
    faces.iter().any(|f| {
        let mut poly: Vec<Vec3> = f.iter().map(|&i| points[i]).collect();
        for facet in Facet::ALL {
            if poly.len() < 3 {
                return false;
            }
            let n = facet.outward_normal();
            let d = if facet.is_max() { domain.plane(facet) } else { -domain.plane(facet) };
            poly = clip_halfspace(&poly, &n, d);
        }
        if poly.len() < 3 || area_vector(&poly).norm() <= 1e-12 {
            return false;
        }
        !Facet::ALL
            .iter()
            .any(|&fc| poly.iter().all(|p| domain.inside_distance(fc, p).abs() <= SNAP_TOL))
    })
}

struct RawGraph {
    positions: Vec<Vec3>,
    struts: Vec<[usize; 2]>,
    /// Windows as (node loop, strut loop).
    windows: Vec<(Vec<usize>, Vec<usize>)>,
    cells: Vec<Vec<usize>>,
}

fn assemble(cells: Vec<CellTemplate>, place: &Placement, domain: &Domain) -> RawGraph {
    let mut kept: Vec<CellTemplate> = Vec::new();
    for cell in cells {
        let pts: Vec<Vec3> = cell.vertices.iter().map(|&k| place.world(k)).collect();
        if cell_meets_box(&pts, &cell.faces, domain) {
            kept.push(cell);
        }
    }

    // Nodes in key order (z-major).
    let mut node_keys: Vec<Key> = kept.iter().flat_map(|c| c.vertices.iter().copied()).collect();
    node_keys.sort_unstable_by_key(|k| [k[2], k[1], k[0]]);
    node_keys.dedup();
    let node_of: HashMap<Key, usize> = node_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    let mut strut_set: BTreeMap<[usize; 2], ()> = BTreeMap::new();
    let mut window_map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut cell_faces: Vec<(Key, Vec<Vec<usize>>)> = Vec::new();
    for cell in &kept {
        let mut faces = Vec::new();
        for f in &cell.faces {
            let loop_nodes: Vec<usize> = f.iter().map(|&i| node_of[&cell.vertices[i]]).collect();
            for i in 0..loop_nodes.len() {
                let (a, b) = (loop_nodes[i], loop_nodes[(i + 1) % loop_nodes.len()]);
                strut_set.insert([a.min(b), a.max(b)], ());
            }
            let mut sorted = loop_nodes.clone();
            sorted.sort_unstable();
            window_map.entry(sorted.clone()).or_insert(loop_nodes);
            faces.push(sorted);
        }
        let mut center = [0i64; 3];
        for v in &cell.vertices {
            center = add(center, *v);
        }
        cell_faces.push(([center[2], center[1], center[0]], faces));
    }
    let struts: Vec<[usize; 2]> = strut_set.into_keys().collect();
    let strut_of: HashMap<[usize; 2], usize> = struts.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut window_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut windows = Vec::new();
    for (sorted, loop_nodes) in window_map {
        let n = loop_nodes.len();
        let loop_struts = (0..n)
            .map(|i| {
                let (a, b) = (loop_nodes[i], loop_nodes[(i + 1) % n]);
                strut_of[&[a.min(b), a.max(b)]]
            })
            .collect();
        window_index.insert(sorted, windows.len());
        windows.push((loop_nodes, loop_struts));
    }
    cell_faces.sort_by_key(|a| a.0);
    let cells = cell_faces
        .into_iter()
        .map(|(_, faces)| faces.iter().map(|f| window_index[f]).collect())
        .collect();

    RawGraph {
        positions: node_keys.iter().map(|&k| place.world(k)).collect(),
        struts,
        windows,
        cells,
    }
}

/// Splits struts at the box boundary where the primal complex could not
/// represent them: at every crossing of a Dirichlet facet, and at the entry
/// point of struts that pass through the box with both ends outside.
fn split_boundary_crossings(raw: &mut RawGraph, domain: &Domain, bcs: &FacetBcs) {
    let n_struts = raw.struts.len();
    for s in 0..n_struts {
        let [a, b] = raw.struts[s];
        let (pa, pb) = (raw.positions[a], raw.positions[b]);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let (mut f0, mut f1) = (None, None);
        let mut empty = false;
        for f in Facet::ALL {
            let (da, db) = (domain.inside_distance(f, &pa), domain.inside_distance(f, &pb));
            if da < -SNAP_TOL && db < -SNAP_TOL {
                empty = true;
            } else if da < -SNAP_TOL {
                let t = da / (da - db);
                if t > t0 {
                    t0 = t;
                    f0 = Some(f);
                }
            } else if db < -SNAP_TOL {
                let t = da.max(0.0) / (da.max(0.0) - db);
                if t < t1 {
                    t1 = t;
                    f1 = Some(f);
                }
            }
        }
        if empty || (t1 - t0) * (pb - pa).norm() <= SNAP_TOL {
            continue;
        }
        // Crossing points with every facet they touch, which may include a
        // Dirichlet facet the segment runs along.
        let at = |t: f64, f: Facet| {
            let mut x = pa + (pb - pa) * t;
            x[f.axis()] = domain.plane(f);
            let facets = domain.facets_at(&x, SNAP_TOL);
            for g in &facets {
                x[g.axis()] = domain.plane(*g);
            }
            let dirichlet = facets.iter().any(|&g| bcs.is_dirichlet(g));
            (x, dirichlet)
        };
        let mut cuts: Vec<Vec3> = Vec::new();
        if let Some(f) = f0 {
            let (x, dirichlet) = at(t0, f);
            if dirichlet || f1.is_some() {
                cuts.push(x);
            }
        }
        if let Some(f) = f1 {
            let (x, dirichlet) = at(t1, f);
            if dirichlet {
                cuts.push(x);
            }
        }
        if cuts.is_empty() {
            continue;
        }
        let mut chain = vec![a];
        for x in cuts {
            chain.push(raw.positions.len());
            raw.positions.push(x);
        }
        chain.push(b);
        let mut pieces = vec![s];
        raw.struts[s] = [chain[0], chain[1]];
        for w in chain.windows(2).skip(1) {
            pieces.push(raw.struts.len());
            raw.struts.push([w[0], w[1]]);
        }
        let inner_nodes = &chain[1..chain.len() - 1];
        for (nodes, struts) in raw.windows.iter_mut() {
            let Some(k) = struts.iter().position(|&t| t == s) else { continue };
            let forward = nodes[k] == a;
            let (mut ps, mut ns) = (pieces.clone(), inner_nodes.to_vec());
            if !forward {
                ps.reverse();
                ns.reverse();
            }
            struts.splice(k..=k, ps);
            nodes.splice(k + 1..k + 1, ns);
        }
    }
}

fn to_graph(raw: RawGraph, spec: &LatticeSpec) -> FoamGraph {
    let nodes = raw
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| GraphNode {
            id: format!("n{i}"),
            position: arr(p),
            radius: None,
        })
        .collect();
    let struts = raw
        .struts
        .iter()
        .enumerate()
        .map(|(i, [a, b])| Strut {
            id: format!("s{i}"),
            nodes: [format!("n{a}"), format!("n{b}")],
            radius: Some(spec.strut_radius),
        })
        .collect();
    let windows = raw
        .windows
        .iter()
        .enumerate()
        .map(|(i, (_, ss))| Window {
            id: format!("w{i}"),
            struts: ss.iter().map(|s| format!("s{s}")).collect(),
        })
        .collect();
    let cells = raw
        .cells
        .iter()
        .enumerate()
        .map(|(i, ws)| FluidCell {
            id: format!("c{i}"),
            windows: ws.iter().map(|w| format!("w{w}")).collect(),
        })
        .collect();
    FoamGraph {
        nodes,
        struts,
        windows,
        cells,
        domain: spec.domain(),
        boundary_conditions: spec.boundary_conditions,
    }
}

fn cell_range(lo: f64, hi: f64, period: f64) -> std::ops::RangeInclusive<i64> {
    ((lo / period).floor() as i64 - 1)..=((hi / period).ceil() as i64 + 1)
}

/// Cubic lattice: nodes on grid points, struts along the axes, square
/// windows and cube cells.
pub fn generate_cubic(spec: &LatticeSpec) -> Result<FoamGraph> {
    spec.validate()?;
    if spec.kind != LatticeKind::Cubic {
        return Err(Error::InvalidSpec("generate_cubic needs kind 'cubic'".into()));
    }
    let domain = spec.domain();
    let place = Placement::new(spec, spec.pitch);
    let (lo, hi) = place.local_bounds(&domain);
    let mut cells = Vec::new();
    for k in cell_range(lo[2], hi[2], 1.0) {
        for j in cell_range(lo[1], hi[1], 1.0) {
            for i in cell_range(lo[0], hi[0], 1.0) {
                cells.push(cube_cell([i, j, k]));
            }
        }
    }
    let mut raw = assemble(cells, &place, &domain);
    split_boundary_crossings(&mut raw, &domain, &spec.boundary_conditions);
    Ok(to_graph(raw, spec))
}

/// Body-centred Kelvin foam: truncated octahedra centred on the points of a
/// BCC lattice with cubic period `pitch`, square and hexagonal windows.
pub fn generate_kelvin(spec: &LatticeSpec) -> Result<FoamGraph> {
    spec.validate()?;
    if spec.kind != LatticeKind::Kelvin {
        return Err(Error::InvalidSpec("generate_kelvin needs kind 'kelvin'".into()));
    }
    let domain = spec.domain();
    let place = Placement::new(spec, spec.pitch / 4.0);
    let (lo, hi) = place.local_bounds(&domain);
    let mut cells = Vec::new();
    for k in cell_range(lo[2], hi[2], 4.0) {
        for j in cell_range(lo[1], hi[1], 4.0) {
            for i in cell_range(lo[0], hi[0], 4.0) {
                for o in [0, 2] {
                    cells.push(kelvin_cell_keys([4 * i + o, 4 * j + o, 4 * k + o]));
                }
            }
        }
    }
    let mut raw = assemble(cells, &place, &domain);
    split_boundary_crossings(&mut raw, &domain, &spec.boundary_conditions);
    Ok(to_graph(raw, spec))
}

pub fn generate(spec: &LatticeSpec) -> Result<FoamGraph> {
    match spec.kind {
        LatticeKind::Cubic => generate_cubic(spec),
        LatticeKind::Kelvin => generate_kelvin(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube() {
        let g = generate_cubic(&LatticeSpec::cubic([1, 1, 1], 1.0, 0.1)).unwrap();
        assert_eq!(
            (g.nodes.len(), g.struts.len(), g.windows.len(), g.cells.len()),
            (8, 12, 6, 1)
        );
    }

    #[test]
    fn cubic_counts_match_formulas() {
        for n in 1..=4usize {
            let g = generate_cubic(&LatticeSpec::cubic([n; 3], 2.5, 0.1)).unwrap();
            assert_eq!(g.nodes.len(), (n + 1).pow(3));
            assert_eq!(g.struts.len(), 3 * n * (n + 1).pow(2));
            assert_eq!(g.windows.len(), 3 * n * n * (n + 1));
            assert_eq!(g.cells.len(), n.pow(3));
        }
    }

    #[test]
    fn kelvin_cell_combinatorics() {
        let (v, e, f) = kelvin_cell([0.0; 3], 4.0);
        assert_eq!((v.len(), e.len(), f.len()), (24, 36, 14));
        assert_eq!(f.iter().filter(|l| l.len() == 4).count(), 6);
        assert_eq!(f.iter().filter(|l| l.len() == 6).count(), 8);
        assert_eq!(v.len() as i64 - e.len() as i64 + f.len() as i64, 2);
        // All edges have length pitch·√2/4.
        for [a, b] in e {
            assert!(((v[a] - v[b]).norm() - 2f64.sqrt()).abs() < 1e-12);
        }
        // Faces are outward.
        for l in &f {
            let pts: Vec<Vec3> = l.iter().map(|&i| v[i]).collect();
            assert!(area_vector(&pts).dot(&vertex_mean(&pts)) > 0.0);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = LatticeSpec::cubic([2, 2, 2], 1.0, 0.1);
        s.pitch = 0.7;
        assert!(matches!(generate_cubic(&s), Err(Error::InvalidSpec(_))));
        let k = LatticeSpec::kelvin([10.0, 10.0, 10.0], 12.0, 0.1);
        assert!(matches!(generate_kelvin(&k), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let s = LatticeSpec::kelvin([10.0, 10.0, 10.0], 4.0, 0.2)
            .with_origin([0.3, 0.7, 1.1])
            .with_bcs(FacetBcs::top_bottom_dirichlet());
        let a = generate_kelvin(&s).unwrap().to_json_string();
        let b = generate_kelvin(&s).unwrap().to_json_string();
        assert_eq!(a, b);
    }

    #[test]
    fn dirichlet_splits_leave_no_crossing() {
        let s = LatticeSpec::kelvin([10.0, 10.0, 10.0], 4.0, 0.2)
            .with_origin([0.3, 0.7, 1.1])
            .with_bcs(FacetBcs::top_bottom_dirichlet());
        let g = generate_kelvin(&s).unwrap();
        let d = g.domain;
        let pos: HashMap<&str, Vec3> = g
            .nodes
            .iter()
            .map(|n| (n.id.as_str(), crate::geom::v3(n.position)))
            .collect();
        for st in &g.struts {
            let (a, b) = (pos[st.nodes[0].as_str()], pos[st.nodes[1].as_str()]);
            let za = d.inside_distance(Facet::ZMin, &a).min(d.inside_distance(Facet::ZMax, &a));
            let zb = d.inside_distance(Facet::ZMin, &b).min(d.inside_distance(Facet::ZMax, &b));
            let inside_xy = |p: &Vec3| p.x > 0.0 && p.x < 10.0 && p.y > 0.0 && p.y < 10.0;
            if inside_xy(&a) && inside_xy(&b) {
                assert!(!(za > 1e-9 && zb < -1e-9) && !(zb > 1e-9 && za < -1e-9));
            }
        }
    }
}
