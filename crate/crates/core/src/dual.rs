//! Barycentric dual complex and the geometric measures used by the
//! constitutive laws.
//!
//! Dual j-cell `k` is the dual of primal (3-j)-cell `k`; the dual boundary
//! matrices are the signed transposes `∂̂₁ = -∂₃ᵀ`, `∂̂₂ = ∂₂ᵀ`, `∂̂₃ = -∂₁ᵀ`,
//! so that `d̂³ = -(d¹)ᵀ` holds entry for entry.

use std::f64::consts::PI;
use std::io::{self, Write};

use log::warn;
use serde::Serialize;

use crate::chains::ComplexSkeleton;
use crate::error::{Error, Result};
use crate::geom::{
    area_centroid, polyline_arc, polyline_length, polyline_point, tet_centroid, tet_volume, triangle_area,
    vertex_mean, Vec3,
};
use crate::primal::{CellKind, FacePiece, PrimalComplex};
use crate::sparse::SparseMatrix;

/// Primal volumes smaller than this are rejected [mm³].
const VOLUME_TOL: f64 = 1e-18;

#[derive(Clone, Debug)]
pub struct DualComplex {
    /// Counts are `[n3, n2, n1, n0]` of the primal.
    pub skeleton: ComplexSkeleton,
    /// Dual nodes: barycentres of the primal volumes.
    pub node_positions: Vec<Vec3>,
    /// Measures of the primal volumes [mm³].
    pub volume_measures: Vec<f64>,
    /// Area centroids of the primal faces, where the dual edges cross them.
    pub face_barycenters: Vec<Vec3>,
    /// Areas of the primal faces [mm²].
    pub face_areas: Vec<f64>,
    /// Arc-length midpoints of the primal edges.
    pub edge_midpoints: Vec<Vec3>,
}

impl DualComplex {
    /// `d̂³`: dual volumes (primal nodes) × dual faces (primal edges).
    pub fn d3_hat(&self) -> SparseMatrix<i32> {
        self.skeleton.boundary_matrix(3).matrix.transpose()
    }

    /// `d̂³` restricted to the given dual volume rows and dual face columns.
    pub fn d3_hat_block(&self, nodes: &[usize], edges: &[usize]) -> SparseMatrix<i32> {
        self.d3_hat().select(nodes, edges)
    }
}

/// Outward piece polygon: the stored orientation follows the face loop, the
/// volume's face sign flips it when needed.
fn oriented(piece: &FacePiece, sign: i32) -> (Vec<Vec3>, Vec<Option<usize>>) {
    if sign > 0 {
        (piece.polygon.clone(), piece.segments.clone())
    } else {
        let mut poly = piece.polygon.clone();
        poly.reverse();
        // Side k of the reversed polygon is side n-2-k of the original.
        let n = piece.segments.len();
        let segs = (0..n).map(|k| piece.segments[(2 * n - 2 - k) % n]).collect();
        (poly, segs)
    }
}

fn face_centroid(pieces: &[FacePiece]) -> (f64, Vec3) {
    let mut area = 0.0;
    let mut weighted = Vec3::zeros();
    for p in pieces {
        let (a, c) = area_centroid(&p.polygon);
        area += a;
        weighted += c * a;
    }
    if area > 0.0 {
        (area, weighted / area)
    } else {
        let pts: Vec<Vec3> = pieces.iter().flat_map(|p| p.polygon.iter().copied()).collect();
        (0.0, vertex_mean(&pts))
    }
}

pub fn build_dual(p: &PrimalComplex) -> Result<DualComplex> {
    let sk = &p.skeleton;
    let [n0, n1, n2, n3] = sk.counts();
    let d1 = &sk.boundary_matrix(1).matrix;
    let d2 = &sk.boundary_matrix(2).matrix;
    let d3 = &sk.boundary_matrix(3).matrix;
    let skeleton = ComplexSkeleton::from_matrices(
        [n3, n2, n1, n0],
        d3.transpose().neg(),
        d2.transpose(),
        d1.transpose().neg(),
    );

    let (face_areas, face_barycenters): (Vec<f64>, Vec<Vec3>) =
        p.face_pieces.iter().map(|pieces| face_centroid(pieces)).unzip();
    let edge_midpoints = p
        .edge_paths
        .iter()
        .map(|path| polyline_point(path, polyline_length(path) / 2.0))
        .collect();

    let mut node_positions = Vec::with_capacity(n3);
    let mut volume_measures = Vec::with_capacity(n3);
    for v in 0..n3 {
        let mut tris: Vec<(Vec3, Vec3, Vec3)> = Vec::new();
        for &(f, s) in sk.volume_faces(v) {
            for piece in &p.face_pieces[f] {
                let (poly, _) = oriented(piece, s);
                let (_, c) = area_centroid(&poly);
                for k in 0..poly.len() {
                    tris.push((c, poly[k], poly[(k + 1) % poly.len()]));
                }
            }
        }
        let pts: Vec<Vec3> = tris.iter().map(|t| t.1).collect();
        let reference = vertex_mean(&pts);
        let mut vol = 0.0;
        let mut weighted = Vec3::zeros();
        for (c, a, b) in &tris {
            let t = tet_volume(&reference, c, a, b);
            vol += t;
            weighted += tet_centroid(&reference, c, a, b) * t;
        }
        if vol <= VOLUME_TOL {
            return Err(Error::DegenerateVolume(v));
        }
        node_positions.push(weighted / vol);
        volume_measures.push(vol);
    }

    Ok(DualComplex {
        skeleton,
        node_positions,
        volume_measures,
        face_barycenters,
        face_areas,
        edge_midpoints,
    })
}

/// Per-edge and per-node measures, indexed like the primal cells.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GeometryTables {
    /// Edge length |r₂ - r₁| (arc length for bent cut edges) [mm].
    pub edge_length: Vec<f64>,
    /// [mm]
    pub edge_radius: Vec<f64>,
    /// Full area of the dual face [mm²].
    pub area_full: Vec<f64>,
    /// Solid part Aˢ [mm²].
    pub area_solid: Vec<f64>,
    /// Fluid part Aᶠ [mm²].
    pub area_fluid: Vec<f64>,
    /// Primal node positions [mm].
    pub node_position: Vec<[f64; 3]>,
    /// Full dual volume [mm³].
    pub volume_full: Vec<f64>,
    /// Solid part Vˢ [mm³].
    pub volume_solid: Vec<f64>,
    /// Fluid part Vᶠ [mm³].
    pub volume_fluid: Vec<f64>,
    /// Solid-fluid contact area Aˢᶠ [mm²].
    pub contact_area: Vec<f64>,
}

impl GeometryTables {
    pub fn total_volume(&self) -> f64 {
        self.volume_full.iter().sum()
    }

    pub fn total_solid_volume(&self) -> f64 {
        self.volume_solid.iter().sum()
    }

    pub fn write_edge_csv<W: Write>(&self, p: &PrimalComplex, mut out: W) -> io::Result<()> {
        writeln!(out, "edge,kind,start,end,length,radius,area_full,area_solid,area_fluid")?;
        for e in 0..self.edge_length.len() {
            let [a, b] = p.skeleton.edge(e);
            writeln!(
                out,
                "{},{:?},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                e,
                p.edge_kinds[e],
                p.node_ids[a],
                p.node_ids[b],
                self.edge_length[e],
                self.edge_radius[e],
                self.area_full[e],
                self.area_solid[e],
                self.area_fluid[e]
            )?;
        }
        Ok(())
    }

    pub fn write_node_csv<W: Write>(&self, p: &PrimalComplex, mut out: W) -> io::Result<()> {
        writeln!(out, "node,id,kind,x,y,z,volume_full,volume_solid,volume_fluid,contact_area")?;
        for k in 0..self.volume_full.len() {
            let [x, y, z] = self.node_position[k];
            writeln!(
                out,
                "{},{},{:?},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                k,
                p.node_ids[k],
                p.node_kinds[k],
                x,
                y,
                z,
                self.volume_full[k],
                self.volume_solid[k],
                self.volume_fluid[k],
                self.contact_area[k]
            )?;
        }
        Ok(())
    }
}

/// Nearest loop node of a face to a point.
fn nearest_face_node(p: &PrimalComplex, face: usize, x: &Vec3) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for &(e, _) in p.skeleton.face_loop(face) {
        for n in p.skeleton.edge(e) {
            let d = (p.positions[n] - x).norm();
            if d < best.0 {
                best = (d, n);
            }
        }
    }
    best.1
}

pub fn compute_geometry(p: &PrimalComplex, d: &DualComplex) -> Result<GeometryTables> {
    let sk = &p.skeleton;
    let [n0, n1, n2, n3] = sk.counts();

    let mut edge_length = Vec::with_capacity(n1);
    let mut edge_radius = Vec::with_capacity(n1);
    for e in 0..n1 {
        let len = polyline_length(&p.edge_paths[e]);
        if len <= 0.0 {
            return Err(Error::DegenerateEdge(e));
        }
        edge_length.push(len);
        let r = match (p.edge_radius[e], p.edge_kinds[e]) {
            (Some(r), _) => r,
            (None, CellKind::AdditionalBorder) => 0.0,
            (None, _) => return Err(Error::MissingRadius(e)),
        };
        edge_radius.push(r);
    }

    // Volumes containing each face.
    let mut face_volumes: Vec<Vec<usize>> = vec![Vec::new(); n2];
    for v in 0..n3 {
        for &(f, _) in sk.volume_faces(v) {
            face_volumes[f].push(v);
        }
    }

    // Dual face areas: triangles (edge midpoint, face barycentre, volume barycentre).
    let mut area_full = vec![0.0; n1];
    for f in 0..n2 {
        for &(e, _) in sk.face_loop(f) {
            for &v in &face_volumes[f] {
                area_full[e] += triangle_area(&d.edge_midpoints[e], &d.face_barycenters[f], &d.node_positions[v]);
            }
        }
    }

    // Dual volumes from flag tetrahedra.
    let mut volume_full = vec![0.0; n0];
    for v in 0..n3 {
        let bv = d.node_positions[v];
        for &(f, s) in sk.volume_faces(v) {
            for piece in &p.face_pieces[f] {
                let (poly, segs) = oriented(piece, s);
                let (_, c) = area_centroid(&poly);
                let m = poly.len();
                for k in 0..m {
                    let (a, b) = (poly[k], poly[(k + 1) % m]);
                    match segs[k] {
                        Some(e) => {
                            let path = &p.edge_paths[e];
                            let half = edge_length[e] / 2.0;
                            let [start, end] = sk.edge(e);
                            let (sa, sb) = (polyline_arc(path, &a), polyline_arc(path, &b));
                            let side = |t: f64| if t < half { start } else { end };
                            if (sa - half) * (sb - half) >= 0.0 {
                                let mid = 0.5 * (sa + sb);
                                volume_full[side(mid)] += tet_volume(&bv, &c, &a, &b);
                            } else {
                                let mpt = d.edge_midpoints[e];
                                volume_full[side(sa)] += tet_volume(&bv, &c, &a, &mpt);
                                volume_full[side(sb)] += tet_volume(&bv, &c, &mpt, &b);
                            }
                        }
                        None => {
                            let mid = (a + b) * 0.5;
                            let na = nearest_face_node(p, f, &((a + mid) * 0.5));
                            let nb = nearest_face_node(p, f, &((mid + b) * 0.5));
                            volume_full[na] += tet_volume(&bv, &c, &a, &mid);
                            volume_full[nb] += tet_volume(&bv, &c, &mid, &b);
                        }
                    }
                }
            }
        }
    }

    let mut volume_solid = vec![0.0; n0];
    let mut contact_area = vec![0.0; n0];
    for e in 0..n1 {
        let (r, half) = (edge_radius[e], edge_length[e] / 2.0);
        for n in sk.edge(e) {
            volume_solid[n] += PI * r * r * half;
            contact_area[n] += 2.0 * PI * r * half;
        }
    }
    let mut volume_fluid = vec![0.0; n0];
    for k in 0..n0 {
        if volume_full[k] < 0.0 {
            warn!("node {} has negative dual volume {:e}, clamped to zero", p.node_ids[k], volume_full[k]);
            volume_full[k] = 0.0;
        }
        if volume_solid[k] > volume_full[k] {
            volume_solid[k] = volume_full[k];
        }
        volume_fluid[k] = volume_full[k] - volume_solid[k];
    }

    let mut area_solid = vec![0.0; n1];
    let mut area_fluid = vec![0.0; n1];
    for e in 0..n1 {
        area_solid[e] = (PI * edge_radius[e] * edge_radius[e]).min(area_full[e]);
        area_fluid[e] = area_full[e] - area_solid[e];
    }

    Ok(GeometryTables {
        edge_length,
        edge_radius,
        area_full,
        area_solid,
        area_fluid,
        node_position: p.positions.iter().map(crate::geom::arr).collect(),
        volume_full,
        volume_solid,
        volume_fluid,
        contact_area,
    })
}
