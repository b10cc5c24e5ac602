//! The classified primal 3-complex.
//!
//! Nodes and edges come from the solid graph, faces from the windows and
//! volumes from the fluid cells. Everything is clipped to the domain box:
//! struts leaving through a Neumann facet end in an additional border node,
//! and clipped cells are closed with additional border faces lying in the
//! facet planes.

mod clip;
pub mod graph;

use std::collections::{BTreeMap, HashMap, HashSet};

use log::debug;
use serde::Serialize;

use crate::chains::{coboundary_matrix, ComplexSkeleton, SignedLoop};
use crate::error::{Error, Result};
use crate::geom::{area_centroid, area_vector, clip_halfspace, point_segment_distance, vertex_mean, Vec3};
use crate::sparse::SparseMatrix;
use clip::{clip_to_box, merge_coincident, CVert, ETag, VTag};
pub use graph::{BcKind, Domain, Facet, FacetBcs, FoamGraph, IndexedGraph};

/// Nodes closer than this to a facet plane are moved onto it [mm].
pub const SNAP_TOL: f64 = 1e-9;
/// Tolerance for matching recomputed cap geometry to existing cells [mm].
const MATCH_TOL: f64 = 1e-7;
/// Windows with a smaller clipped area are dropped [mm²].
const AREA_TOL: f64 = 1e-12;
/// Clipped windows below this fraction of their full area count as slivers.
const SLIVER: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CellKind {
    Inner,
    Border,
    AdditionalBorder,
}

pub type NodeKind = CellKind;
pub type EdgeKind = CellKind;
pub type FaceKind = CellKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum VolumeKind {
    Inner,
    Border,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeOrigin {
    Graph(usize),
    /// Exit point of a strut through a Neumann facet.
    Crossing { strut: usize, facet: Facet },
    /// Point on a box edge where a window's boundary cut needs an anchor.
    Corner { window: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeOrigin {
    /// A strut; `clipped` if only its inside part is kept.
    Strut { strut: usize, clipped: bool },
    /// Intersection of a window with the box boundary.
    Cut { window: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FaceOrigin {
    Window(usize),
    /// Closure of a clipped cell on the box boundary.
    Cap { cell: usize },
}

/// Planar part of a face. `segments[k]` is the edge containing the side from
/// `polygon[k]` to `polygon[k+1]`, or `None` for a seam along a box edge
/// between two pieces of the same face.
#[derive(Clone, Debug, PartialEq)]
pub struct FacePiece {
    pub polygon: Vec<Vec3>,
    pub segments: Vec<Option<usize>>,
    pub facet: Option<Facet>,
}

#[derive(Clone, Debug)]
pub struct PrimalComplex {
    pub skeleton: ComplexSkeleton,
    pub domain: Domain,
    pub bcs: FacetBcs,
    pub node_ids: Vec<String>,
    pub positions: Vec<Vec3>,
    pub node_kinds: Vec<NodeKind>,
    pub node_origin: Vec<NodeOrigin>,
    pub edge_kinds: Vec<EdgeKind>,
    pub edge_origin: Vec<EdgeOrigin>,
    /// Edge geometry from start to end node; more than two points only for
    /// cut edges that bend around a box edge.
    pub edge_paths: Vec<Vec<Vec3>>,
    /// Strut radius [mm]; zero for cut edges, `None` where the graph has none.
    pub edge_radius: Vec<Option<f64>>,
    pub face_kinds: Vec<FaceKind>,
    pub face_origin: Vec<FaceOrigin>,
    /// Planar pieces oriented along the face's edge loop.
    pub face_pieces: Vec<Vec<FacePiece>>,
    pub volume_kinds: Vec<VolumeKind>,
    /// Index of the fluid cell in the graph.
    pub volume_cell: Vec<usize>,
}

/// Count of cells per kind, per dimension.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub nodes: [usize; 3],
    pub edges: [usize; 3],
    pub faces: [usize; 3],
    pub volumes: [usize; 2],
}

fn kind_slot(k: CellKind) -> usize {
    match k {
        CellKind::Inner => 0,
        CellKind::Border => 1,
        CellKind::AdditionalBorder => 2,
    }
}

impl PrimalComplex {
    pub fn kind_counts(&self) -> KindCounts {
        let mut c = KindCounts::default();
        for &k in &self.node_kinds {
            c.nodes[kind_slot(k)] += 1;
        }
        for &k in &self.edge_kinds {
            c.edges[kind_slot(k)] += 1;
        }
        for &k in &self.face_kinds {
            c.faces[kind_slot(k)] += 1;
        }
        for &k in &self.volume_kinds {
            c.volumes[if k == VolumeKind::Inner { 0 } else { 1 }] += 1;
        }
        c
    }

    pub fn inner_node_count(&self) -> usize {
        self.node_kinds.iter().filter(|&&k| k == CellKind::Inner).count()
    }

    pub fn is_classified(&self) -> bool {
        let [n0, n1, n2, n3] = self.skeleton.counts();
        self.node_kinds.len() == n0
            && self.edge_kinds.len() == n1
            && self.face_kinds.len() == n2
            && self.volume_kinds.len() == n3
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }
}

/// Co-incidence blocks of `d¹` split by classification.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceBlocks {
    /// Inner edges × inner nodes.
    pub d1_ii: SparseMatrix<i32>,
    /// Inner edges × border (Dirichlet) nodes.
    pub d1_ib: SparseMatrix<i32>,
    /// Border edges × inner nodes.
    pub d1_bi: SparseMatrix<i32>,
    pub inner_nodes: Vec<usize>,
    pub border_nodes: Vec<usize>,
    pub inner_edges: Vec<usize>,
    pub border_edges: Vec<usize>,
}

pub fn split_incidence(p: &PrimalComplex) -> Result<IncidenceBlocks> {
    if !p.is_classified() {
        return Err(Error::Unclassified);
    }
    let select = |kinds: &[CellKind], k: CellKind| -> Vec<usize> {
        (0..kinds.len()).filter(|&i| kinds[i] == k).collect()
    };
    let inner_nodes = select(&p.node_kinds, CellKind::Inner);
    let border_nodes = select(&p.node_kinds, CellKind::Border);
    let inner_edges = select(&p.edge_kinds, CellKind::Inner);
    let border_edges = select(&p.edge_kinds, CellKind::Border);
    let d1 = coboundary_matrix(&p.skeleton, 1)?;
    Ok(IncidenceBlocks {
        d1_ii: d1.select(&inner_edges, &inner_nodes),
        d1_ib: d1.select(&inner_edges, &border_nodes),
        d1_bi: d1.select(&border_edges, &inner_nodes),
        inner_nodes,
        border_nodes,
        inner_edges,
        border_edges,
    })
}

/// Kinks that must become nodes so every cut run joins two distinct nodes:
/// all of them when the clipped window has no node at all, otherwise those
/// on runs that would return to their starting node.
fn kinks_to_anchor(verts: &[CVert], node_at: &[Option<usize>]) -> Vec<usize> {
    let k = verts.len();
    let kinks = |range: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        range.filter(|&i| verts[i].tag == VTag::Kink).collect()
    };
    let Some(first) = node_at.iter().position(Option::is_some) else {
        return kinks(&mut (0..k));
    };
    let mut out = Vec::new();
    let mut i = first;
    loop {
        let mut j = (i + 1) % k;
        while node_at[j].is_none() {
            j = (j + 1) % k;
        }
        if node_at[i] == node_at[j] && verts[i].out == ETag::Cut {
            let mut run = (1..k).map(|d| (i + d) % k).take_while(|&m| m != j);
            out.extend(kinks(&mut run));
        }
        if j == first {
            break;
        }
        i = j;
    }
    out
}

enum StrutFate {
    Dropped,
    Inner,
    /// Kept from the inside endpoint to the exit point.
    Crossing { inside: usize, exit: Vec3, facet: Facet },
}

fn classify_strut(
    g: &FoamGraph,
    ix: &IndexedGraph,
    s: usize,
    pos: &[Vec3],
    in_box: &[bool],
) -> Result<StrutFate> {
    let domain = &g.domain;
    let [a, b] = ix.strut_nodes[s];
    let id = &g.struts[s].id;
    match (in_box[a], in_box[b]) {
        (true, true) => Ok(StrutFate::Inner),
        (false, false) => {
            // Liang-Barsky interval of the segment inside the closed box.
            let (pa, pb) = (pos[a], pos[b]);
            let (mut t0, mut t1) = (0.0f64, 1.0f64);
            for f in Facet::ALL {
                let (da, db) = (domain.inside_distance(f, &pa), domain.inside_distance(f, &pb));
                if da < 0.0 && db < 0.0 {
                    return Ok(StrutFate::Dropped);
                }
                if da < 0.0 {
                    t0 = t0.max(da / (da - db));
                } else if db < 0.0 {
                    t1 = t1.min(da / (da - db));
                }
            }
            if (t1 - t0) * (pb - pa).norm() > SNAP_TOL {
                Err(Error::ReentrantStrut(id.clone()))
            } else {
                Ok(StrutFate::Dropped)
            }
        }
        (ia, _) => {
            let (inside, outside) = if ia { (a, b) } else { (b, a) };
            let (pi, po) = (pos[inside], pos[outside]);
            let mut t_exit = 1.0f64;
            for f in Facet::ALL {
                let (di, dout) = (domain.inside_distance(f, &pi), domain.inside_distance(f, &po));
                if dout < 0.0 {
                    t_exit = t_exit.min(di.max(0.0) / (di.max(0.0) - dout));
                }
            }
            if t_exit * (po - pi).norm() <= SNAP_TOL {
                return Ok(StrutFate::Dropped);
            }
            let mut exit = pi + (po - pi) * t_exit;
            let facets = domain.facets_at(&exit, SNAP_TOL);
            if let Some(&f) = facets.iter().find(|&&f| g.boundary_conditions.is_dirichlet(f)) {
                return Err(Error::DirichletCrossing {
                    strut: id.clone(),
                    facet: f.name().into(),
                });
            }
            // On a box edge or corner the first facet carries the flux.
            let Some(&facet) = facets.first() else {
                return Err(Error::Clipping(format!("strut '{id}' exit point is off the box")));
            };
            for f in &facets {
                exit[f.axis()] = domain.plane(*f);
            }
            Ok(StrutFate::Crossing { inside, exit, facet })
        }
    }
}

struct WindowCut {
    vertices: Vec<CVert>,
    clipped: bool,
    facet: Option<Facet>,
}

/// Builds the classified primal complex of a foam graph clipped to its
/// domain box.
pub fn build_primal(g: &FoamGraph) -> Result<PrimalComplex> {
    let ix = g.index()?;
    let domain = g.domain;
    let bcs = g.boundary_conditions;

    // Snap near-facet nodes onto the facet.
    let mut pos = ix.positions.clone();
    for p in pos.iter_mut() {
        for f in domain.facets_at(p, SNAP_TOL) {
            p[f.axis()] = domain.plane(f);
        }
    }
    let in_box: Vec<bool> = pos.iter().map(|p| domain.contains(p, 0.0)).collect();

    // Nodes.
    let mut node_ids = Vec::new();
    let mut positions = Vec::new();
    let mut node_kinds = Vec::new();
    let mut node_origin = Vec::new();
    let mut node_of_graph = vec![usize::MAX; pos.len()];
    for (n, p) in pos.iter().enumerate() {
        if !in_box[n] {
            continue;
        }
        node_of_graph[n] = positions.len();
        let dirichlet = domain.facets_at(p, 0.0).iter().any(|&f| bcs.is_dirichlet(f));
        node_ids.push(g.nodes[n].id.clone());
        positions.push(*p);
        node_kinds.push(if dirichlet { CellKind::Border } else { CellKind::Inner });
        node_origin.push(NodeOrigin::Graph(n));
    }

    // Struts.
    let mut fates = Vec::with_capacity(ix.strut_nodes.len());
    for s in 0..ix.strut_nodes.len() {
        fates.push(classify_strut(g, &ix, s, &pos, &in_box)?);
    }
    let mut crossing_node = vec![usize::MAX; fates.len()];
    for (s, fate) in fates.iter().enumerate() {
        if let StrutFate::Crossing { exit, facet, .. } = fate {
            crossing_node[s] = positions.len();
            node_ids.push(format!("ab:{}", g.struts[s].id));
            positions.push(*exit);
            node_kinds.push(CellKind::AdditionalBorder);
            node_origin.push(NodeOrigin::Crossing {
                strut: s,
                facet: *facet,
            });
        }
    }

    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut edge_kinds = Vec::new();
    let mut edge_origin = Vec::new();
    let mut edge_paths = Vec::new();
    let mut edge_radius = Vec::new();
    let mut edge_of_strut = vec![usize::MAX; fates.len()];
    for (s, fate) in fates.iter().enumerate() {
        let [a, b] = ix.strut_nodes[s];
        match fate {
            StrutFate::Dropped => continue,
            StrutFate::Inner => {
                edge_of_strut[s] = edges.len();
                edges.push([node_of_graph[a], node_of_graph[b]]);
                edge_kinds.push(CellKind::Inner);
                edge_origin.push(EdgeOrigin::Strut {
                    strut: s,
                    clipped: false,
                });
                edge_paths.push(vec![pos[a], pos[b]]);
            }
            StrutFate::Crossing { inside, exit, .. } => {
                edge_of_strut[s] = edges.len();
                edges.push([node_of_graph[*inside], crossing_node[s]]);
                edge_kinds.push(CellKind::Border);
                edge_origin.push(EdgeOrigin::Strut {
                    strut: s,
                    clipped: true,
                });
                edge_paths.push(vec![pos[*inside], *exit]);
            }
        }
        edge_radius.push(ix.strut_radius[s]);
    }

    // Clip every window.
    let mut cuts: Vec<Option<WindowCut>> = Vec::with_capacity(ix.window_nodes.len());
    for (w, loop_nodes) in ix.window_nodes.iter().enumerate() {
        let poly: Vec<CVert> = loop_nodes
            .iter()
            .zip(&ix.window_struts[w])
            .map(|(&n, &s)| CVert {
                p: pos[n],
                tag: VTag::Node(n),
                out: ETag::Strut(s),
            })
            .collect();
        let original_len = poly.len();
        let mut clipped = clip_to_box(poly, &domain, SNAP_TOL);
        // A strut that only touches the box leaves a plain boundary point.
        for v in clipped.iter_mut() {
            if let VTag::Cross(s) = v.tag {
                if crossing_node[s] == usize::MAX {
                    v.tag = VTag::Kink;
                }
            }
        }
        let pts: Vec<Vec3> = clipped.iter().map(|v| v.p).collect();
        if clipped.len() < 3 || area_vector(&pts).norm() <= AREA_TOL {
            cuts.push(None);
            continue;
        }
        let was_clipped = clipped.len() != original_len
            || clipped
                .iter()
                .any(|v| v.out == ETag::Cut || !matches!(v.tag, VTag::Node(_)));
        let facet = Facet::ALL.into_iter().find(|&f| {
            pts.iter()
                .all(|p| domain.inside_distance(f, p).abs() <= SNAP_TOL)
        });
        cuts.push(Some(WindowCut {
            vertices: clipped,
            clipped: was_clipped,
            facet,
        }));
    }

    // Outward orientation of each window with respect to each of its cells,
    // and which cells survive.
    let window_area: Vec<Vec3> = ix
        .window_nodes
        .iter()
        .map(|l| area_vector(&l.iter().map(|&n| pos[n]).collect::<Vec<_>>()))
        .collect();
    let window_center: Vec<Vec3> = ix
        .window_nodes
        .iter()
        .map(|l| vertex_mean(&l.iter().map(|&n| pos[n]).collect::<Vec<_>>()))
        .collect();
    // A window cut down to a patch around a box corner, bounded only by cut
    // segments or a negligible sliver of the original, is removed and its two
    // cells are merged into one volume.
    let mut window_cells: Vec<Vec<usize>> = vec![Vec::new(); cuts.len()];
    for (c, ws) in ix.cell_windows.iter().enumerate() {
        for &w in ws {
            window_cells[w].push(c);
        }
    }
    let sliver: Vec<bool> = (0..cuts.len())
        .map(|w| {
            matches!(&cuts[w], Some(cut) if {
                let pts: Vec<Vec3> = cut.vertices.iter().map(|v| v.p).collect();
                area_vector(&pts).norm() <= SLIVER * window_area[w].norm()
            })
        })
        .collect();
    // Cells reaching into the box through a single sliver only.
    let marginal: Vec<bool> = ix
        .cell_windows
        .iter()
        .map(|ws| {
            let live: Vec<usize> = ws.iter().copied().filter(|&w| cuts[w].is_some()).collect();
            live.len() == 1 && sliver[live[0]]
        })
        .collect();
    let corner_window: Vec<bool> = (0..cuts.len())
        .map(|w| {
            matches!(&cuts[w], Some(cut) if cut.facet.is_none()
                && (cut.vertices.iter().all(|v| v.tag == VTag::Kink)
                    || (sliver[w] && window_cells[w].iter().any(|&c| marginal[c]))))
                && window_cells[w].len() == 2
        })
        .collect();
    let mut group: Vec<usize> = (0..ix.cell_windows.len()).collect();
    fn root(group: &mut [usize], mut c: usize) -> usize {
        while group[c] != c {
            group[c] = group[group[c]];
            c = group[c];
        }
        c
    }
    for w in 0..cuts.len() {
        if corner_window[w] {
            let (a, b) = (root(&mut group, window_cells[w][0]), root(&mut group, window_cells[w][1]));
            group[a.max(b)] = a.min(b);
        }
    }

    let mut alive = vec![false; ix.cell_windows.len()];
    let mut cell_signs: Vec<Vec<i32>> = Vec::with_capacity(ix.cell_windows.len());
    for (c, ws) in ix.cell_windows.iter().enumerate() {
        let mut nodes: Vec<usize> = ws.iter().flat_map(|&w| ix.window_nodes[w].iter().copied()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let center = vertex_mean(&nodes.iter().map(|&n| pos[n]).collect::<Vec<_>>());
        let signs = ws
            .iter()
            .map(|&w| {
                if window_area[w].dot(&(window_center[w] - center)) >= 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        cell_signs.push(signs);
        alive[c] = domain.strictly_contains(&center, SNAP_TOL)
            || ws
                .iter()
                .any(|&w| !corner_window[w] && matches!(&cuts[w], Some(cut) if cut.facet.is_none()));
    }
    for w in 0..cuts.len() {
        if corner_window[w] {
            cuts[w] = None;
        }
    }
    // Kept volumes as groups of merged cells, in order of their first cell.
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..ix.cell_windows.len() {
        let r = root(&mut group, c);
        members.entry(r).or_default().push(c);
    }
    let kept_groups: Vec<Vec<usize>> = members
        .into_values()
        .filter(|m| m.iter().any(|&c| alive[c]))
        .collect();
    let kept_cells: Vec<usize> = kept_groups.iter().flatten().copied().collect();
    let mut window_used = vec![false; cuts.len()];
    for &c in &kept_cells {
        for &w in &ix.cell_windows[c] {
            window_used[w] = true;
        }
    }

    // Window faces; cut runs become additional border edges.
    let mut faces: Vec<SignedLoop> = Vec::new();
    let mut face_kinds = Vec::new();
    let mut face_origin = Vec::new();
    let mut face_pieces: Vec<Vec<FacePiece>> = Vec::new();
    let mut face_of_window = vec![usize::MAX; cuts.len()];

    let vertex_node = |v: &CVert| -> Result<Option<usize>> {
        match v.tag {
            VTag::Node(n) => {
                if node_of_graph[n] == usize::MAX {
                    return Err(Error::Clipping(format!("node '{}' outside the box in a window", g.nodes[n].id)));
                }
                Ok(Some(node_of_graph[n]))
            }
            VTag::Cross(s) => {
                if crossing_node[s] == usize::MAX {
                    return Err(Error::Clipping(format!(
                        "window crosses the box boundary along strut '{}' that has no exit node",
                        g.struts[s].id
                    )));
                }
                Ok(Some(crossing_node[s]))
            }
            VTag::Kink => Ok(None),
        }
    };

    for w in 0..cuts.len() {
        let Some(cut) = &cuts[w] else { continue };
        if cut.facet.is_some() && !window_used[w] {
            continue;
        }
        let mut verts = cut.vertices.clone();
        let node_at: Vec<Option<usize>> = verts.iter().map(&vertex_node).collect::<Result<_>>()?;
        let mut node_at = node_at;
        for k in kinks_to_anchor(&verts, &node_at) {
            node_at[k] = Some(positions.len());
            node_ids.push(format!("ab:{}:{}", g.windows[w].id, k));
            positions.push(verts[k].p);
            node_kinds.push(CellKind::AdditionalBorder);
            node_origin.push(NodeOrigin::Corner { window: w });
        }
        let start = node_at.iter().position(Option::is_some).expect("anchored window");
        verts.rotate_left(start);
        node_at.rotate_left(start);
        for (v, n) in verts.iter_mut().zip(&node_at) {
            if let Some(n) = n {
                v.p = positions[*n];
            }
        }
        let k = verts.len();
        let mut lp: SignedLoop = Vec::new();
        let mut segments = vec![None; k];
        let mut i = 0;
        while i < k {
            let from = node_at[i].expect("run starts at a node");
            match verts[i].out {
                ETag::Strut(s) => {
                    let j = (i + 1) % k;
                    let to = node_at[j].ok_or_else(|| {
                        Error::Clipping(format!("strut segment ends at a kink in window '{}'", g.windows[w].id))
                    })?;
                    let e = edge_of_strut[s];
                    if e == usize::MAX {
                        return Err(Error::Clipping(format!(
                            "window '{}' uses dropped strut '{}'",
                            g.windows[w].id, g.struts[s].id
                        )));
                    }
                    let sign = if edges[e] == [from, to] {
                        1
                    } else if edges[e] == [to, from] {
                        -1
                    } else {
                        return Err(Error::Clipping(format!(
                            "window '{}' segment does not match strut '{}'",
                            g.windows[w].id, g.struts[s].id
                        )));
                    };
                    lp.push((e, sign));
                    segments[i] = Some(e);
                    i += 1;
                }
                ETag::Cut => {
                    let mut path = vec![verts[i].p];
                    let mut j = i;
                    loop {
                        j += 1;
                        let jj = j % k;
                        path.push(verts[jj].p);
                        if node_at[jj].is_some() {
                            break;
                        }
                        if verts[jj].out != ETag::Cut {
                            return Err(Error::Clipping(format!("broken cut run in window '{}'", g.windows[w].id)));
                        }
                    }
                    let to = node_at[j % k].expect("run ends at a node");
                    if to == from {
                        return Err(Error::Clipping(format!("window '{}' cut run closes on itself", g.windows[w].id)));
                    }
                    let e = edges.len();
                    edges.push([from, to]);
                    edge_kinds.push(CellKind::AdditionalBorder);
                    edge_origin.push(EdgeOrigin::Cut { window: w });
                    edge_paths.push(path);
                    edge_radius.push(Some(0.0));
                    lp.push((e, 1));
                    for seg in segments.iter_mut().take(j).skip(i) {
                        *seg = Some(e);
                    }
                    i = j;
                }
            }
        }
        face_of_window[w] = faces.len();
        faces.push(lp);
        face_kinds.push(if cut.clipped || cut.facet.is_some() {
            CellKind::Border
        } else {
            CellKind::Inner
        });
        face_origin.push(FaceOrigin::Window(w));
        face_pieces.push(vec![FacePiece {
            polygon: verts.iter().map(|v| v.p).collect(),
            segments,
            facet: cut.facet,
        }]);
    }

    // Volumes, closed with caps where clipped.
    let mut volumes: Vec<SignedLoop> = Vec::new();
    let mut volume_kinds = Vec::new();
    let mut volume_cell = Vec::new();
    for cells in &kept_groups {
        let c = cells[0];
        let mut vol: SignedLoop = Vec::new();
        let mut residual: BTreeMap<usize, i32> = BTreeMap::new();
        let mut in_plane: Vec<Facet> = Vec::new();
        let signed_windows = cells
            .iter()
            .flat_map(|&c| ix.cell_windows[c].iter().copied().zip(cell_signs[c].iter().copied()));
        for (w, s) in signed_windows {
            let f = face_of_window[w];
            if f == usize::MAX {
                continue;
            }
            vol.push((f, s));
            for &(e, es) in &faces[f] {
                *residual.entry(e).or_insert(0) += s * es;
            }
            if let Some(facet) = face_pieces[f][0].facet {
                in_plane.push(facet);
            }
        }
        residual.retain(|_, v| *v != 0);
        let cycles = directed_cycles(&residual, &edges)
            .map_err(|m| Error::Clipping(format!("cell '{}': {m}", g.cells[c].id)))?;

        let mut border = in_plane.iter().any(|&f| !bcs.is_dirichlet(f));
        if !cycles.is_empty() {
            let caps: Vec<(Facet, Vec<Vec3>)> = cells
                .iter()
                .flat_map(|&m| cap_pieces(&ix, &pos, &ix.cell_windows[m], &cell_signs[m], &domain, &in_plane))
                .collect();
            let mut assigned: Vec<Vec<FacePiece>> = vec![Vec::new(); cycles.len()];
            for (facet, poly) in caps {
                let best = cycles
                    .iter()
                    .enumerate()
                    .map(|(ci, cy)| {
                        let len: f64 = cy
                            .iter()
                            .flat_map(|&(e, _)| edge_paths[e].windows(2))
                            .filter(|seg| {
                                seg.iter()
                                    .all(|p| domain.inside_distance(facet, p).abs() <= MATCH_TOL)
                            })
                            .map(|seg| (seg[1] - seg[0]).norm())
                            .sum();
                        (ci, len)
                    })
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .filter(|&(_, len)| len > MATCH_TOL);
                let Some((ci, _)) = best else {
                    // Negligible caps may only graze the facet.
                    if area_centroid(&poly).0 <= MATCH_TOL {
                        continue;
                    }
                    return Err(Error::Clipping(format!(
                        "cell '{}': cap piece on {facet} has no boundary loop",
                        g.cells[c].id
                    )));
                };
                assigned[ci].push(subdivide_piece(poly, facet, &cycles[ci], &edge_paths, &edges, &positions));
            }
            for (cycle, pieces) in cycles.into_iter().zip(assigned) {
                if pieces.is_empty() {
                    return Err(Error::Clipping(format!(
                        "cell '{}': boundary loop without cap geometry",
                        g.cells[c].id
                    )));
                }
                border |= pieces
                    .iter()
                    .any(|p| p.facet.is_some_and(|f| !bcs.is_dirichlet(f)));
                vol.push((faces.len(), 1));
                faces.push(cycle);
                face_kinds.push(CellKind::AdditionalBorder);
                face_origin.push(FaceOrigin::Cap { cell: c });
                face_pieces.push(pieces);
            }
        }

        // Euler characteristic of the closed cell surface.
        let mut vs = HashSet::new();
        let mut es = HashSet::new();
        for &(f, _) in &vol {
            for &(e, _) in &faces[f] {
                es.insert(e);
                vs.insert(edges[e][0]);
                vs.insert(edges[e][1]);
            }
        }
        let chi = vs.len() as i64 - es.len() as i64 + vol.len() as i64;
        if chi != 2 {
            return Err(Error::Clipping(format!(
                "cell '{}' has Euler characteristic {chi} after clipping",
                g.cells[c].id
            )));
        }

        volumes.push(vol);
        volume_kinds.push(if border { VolumeKind::Border } else { VolumeKind::Inner });
        volume_cell.push(c);
    }

    let skeleton = ComplexSkeleton::from_cells(positions.len(), edges, faces, volumes)?;
    debug!("primal complex counts {:?}", skeleton.counts());
    Ok(PrimalComplex {
        skeleton,
        domain,
        bcs,
        node_ids,
        positions,
        node_kinds,
        node_origin,
        edge_kinds,
        edge_origin,
        edge_paths,
        edge_radius,
        face_kinds,
        face_origin,
        face_pieces,
        volume_kinds,
        volume_cell,
    })
}

/// Splits an edge chain into directed simple cycles, in ascending edge order.
fn directed_cycles(
    residual: &BTreeMap<usize, i32>,
    edges: &[[usize; 2]],
) -> std::result::Result<Vec<SignedLoop>, String> {
    // The caps carry the negative of the windows' boundary.
    let mut outgoing: HashMap<usize, Vec<(usize, i32)>> = HashMap::new();
    for (&e, &c) in residual {
        let sign = -c;
        if sign.abs() != 1 {
            return Err(format!("edge {e} appears with multiplicity {c}"));
        }
        let tail = if sign > 0 { edges[e][0] } else { edges[e][1] };
        outgoing.entry(tail).or_default().push((e, sign));
    }
    if let Some((n, _)) = outgoing.iter().find(|(_, v)| v.len() > 1) {
        return Err(format!("boundary loop pinched at node {n}"));
    }
    let mut used: HashSet<usize> = HashSet::new();
    let mut cycles = Vec::new();
    for (&e0, &c0) in residual {
        if used.contains(&e0) {
            continue;
        }
        let start = if -c0 > 0 { edges[e0][0] } else { edges[e0][1] };
        let mut cycle = Vec::new();
        let mut node = start;
        loop {
            let Some(&[(e, s)]) = outgoing.get(&node).map(Vec::as_slice) else {
                return Err(format!("boundary loop is open at node {node}"));
            };
            if !used.insert(e) {
                return Err(format!("boundary loop revisits edge {e}"));
            }
            cycle.push((e, s));
            node = if s > 0 { edges[e][1] } else { edges[e][0] };
            if node == start {
                break;
            }
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Intersections of the (convex) cell with the facet rectangles, oriented
/// outward. Facets that already hold a window of the cell are skipped.
fn cap_pieces(
    ix: &IndexedGraph,
    pos: &[Vec3],
    windows: &[usize],
    signs: &[i32],
    domain: &Domain,
    in_plane: &[Facet],
) -> Vec<(Facet, Vec<Vec3>)> {
    let planes: Vec<(Vec3, f64)> = windows
        .iter()
        .zip(signs)
        .filter_map(|(&w, &s)| {
            let pts: Vec<Vec3> = ix.window_nodes[w].iter().map(|&n| pos[n]).collect();
            let a = area_vector(&pts);
            let norm = a.norm();
            (norm > 0.0).then(|| {
                let n = a * (f64::from(s) / norm);
                (n, n.dot(&vertex_mean(&pts)))
            })
        })
        .collect();
    let mut out = Vec::new();
    for facet in Facet::ALL {
        if in_plane.contains(&facet) {
            continue;
        }
        let mut poly = domain.facet_polygon(facet);
        for (n, d) in &planes {
            if poly.len() < 3 {
                break;
            }
            poly = clip_halfspace(&poly, n, *d);
        }
        if poly.len() < 3 {
            continue;
        }
        let (area, _) = area_centroid(&poly);
        if area > AREA_TOL {
            out.push((facet, poly));
        }
    }
    out
}

/// Snaps a cap piece onto the loop geometry, inserts loop points lying on
/// its sides and labels every side with the loop edge containing it.
fn subdivide_piece(
    poly: Vec<Vec3>,
    facet: Facet,
    cycle: &[(usize, i32)],
    edge_paths: &[Vec<Vec3>],
    edges: &[[usize; 2]],
    positions: &[Vec3],
) -> FacePiece {
    let mut loop_points: Vec<Vec3> = Vec::new();
    for &(e, _) in cycle {
        loop_points.extend(edge_paths[e].iter().copied());
        loop_points.push(positions[edges[e][0]]);
        loop_points.push(positions[edges[e][1]]);
    }
    let snapped: Vec<Vec3> = poly
        .iter()
        .map(|p| {
            loop_points
                .iter()
                .find(|q| (*q - p).norm() <= MATCH_TOL)
                .copied()
                .unwrap_or(*p)
        })
        .collect();
    let n = snapped.len();
    let mut refined: Vec<Vec3> = Vec::new();
    for i in 0..n {
        let (a, b) = (snapped[i], snapped[(i + 1) % n]);
        refined.push(a);
        let ab = b - a;
        let len2 = ab.norm_squared();
        let mut inner: Vec<(f64, Vec3)> = loop_points
            .iter()
            .filter(|q| point_segment_distance(q, &a, &b) <= MATCH_TOL)
            .map(|q| ((q - a).dot(&ab) / len2, *q))
            .filter(|&(t, q)| (q - a).norm() > MATCH_TOL && (q - b).norm() > MATCH_TOL && t > 0.0 && t < 1.0)
            .collect();
        inner.sort_by(|x, y| x.0.total_cmp(&y.0));
        inner.dedup_by(|x, y| (x.1 - y.1).norm() <= MATCH_TOL);
        refined.extend(inner.into_iter().map(|(_, q)| q));
    }
    let refined: Vec<Vec3> = merge_coincident(
        refined
            .into_iter()
            .map(|p| CVert {
                p,
                tag: VTag::Kink,
                out: ETag::Cut,
            })
            .collect(),
        MATCH_TOL,
    )
    .into_iter()
    .map(|v| v.p)
    .collect();
    let m = refined.len();
    let segments = (0..m)
        .map(|i| {
            let mid = (refined[i] + refined[(i + 1) % m]) * 0.5;
            cycle
                .iter()
                .map(|&(e, _)| e)
                .find(|&e| {
                    edge_paths[e]
                        .windows(2)
                        .any(|s| point_segment_distance(&mid, &s[0], &s[1]) <= MATCH_TOL)
                })
        })
        .collect();
    FacePiece {
        polygon: refined,
        segments,
        facet: Some(facet),
    }
}
