//! The foam graph exchange format.
//!
//! ```json
//! {
//!   "nodes":   [{ "id": "n0", "position": [0.0, 0.0, 0.0] }],
//!   "struts":  [{ "id": "s0", "nodes": ["n0", "n1"], "radius": 0.5 }],
//!   "windows": [{ "id": "w0", "struts": ["s0", "s1", "s2", "s3"] }],
//!   "cells":   [{ "id": "c0", "windows": ["w0", "w1", "w2", "w3", "w4", "w5"] }],
//!   "domain":  { "min": [0.0, 0.0, 0.0], "max": [40.0, 40.0, 40.0] },
//!   "boundary_conditions": { "z_min": "dbc", "z_max": "dbc" }
//! }
//! ```
//!
//! Lengths are in mm. A window lists its struts as a closed loop in
//! traversal order. Facets missing from `boundary_conditions` are Neumann.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{v3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Facet {
    pub const ALL: [Facet; 6] = [
        Facet::XMin,
        Facet::XMax,
        Facet::YMin,
        Facet::YMax,
        Facet::ZMin,
        Facet::ZMax,
    ];

    pub fn axis(self) -> usize {
        self as usize / 2
    }

    pub fn is_max(self) -> bool {
        self as usize % 2 == 1
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["x_min", "x_max", "y_min", "y_max", "z_min", "z_max"][self as usize]
    }

    pub fn outward_normal(self) -> Vec3 {
        let mut n = Vec3::zeros();
        n[self.axis()] = if self.is_max() { 1.0 } else { -1.0 };
        n
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Boundary condition type of a box facet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    /// Prescribed temperature.
    Dbc,
    /// Prescribed heat flux.
    #[default]
    Nbc,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetBcs {
    #[serde(default)]
    pub x_min: BcKind,
    #[serde(default)]
    pub x_max: BcKind,
    #[serde(default)]
    pub y_min: BcKind,
    #[serde(default)]
    pub y_max: BcKind,
    #[serde(default)]
    pub z_min: BcKind,
    #[serde(default)]
    pub z_max: BcKind,
}

impl FacetBcs {
    pub fn all(kind: BcKind) -> Self {
        Self {
            x_min: kind,
            x_max: kind,
            y_min: kind,
            y_max: kind,
            z_min: kind,
            z_max: kind,
        }
    }

    /// Dirichlet on the z facets, Neumann on the sides.
    pub fn top_bottom_dirichlet() -> Self {
        Self {
            z_min: BcKind::Dbc,
            z_max: BcKind::Dbc,
            ..Self::all(BcKind::Nbc)
        }
    }

    pub fn get(&self, facet: Facet) -> BcKind {
        match facet {
            Facet::XMin => self.x_min,
            Facet::XMax => self.x_max,
            Facet::YMin => self.y_min,
            Facet::YMax => self.y_max,
            Facet::ZMin => self.z_min,
            Facet::ZMax => self.z_max,
        }
    }

    pub fn is_dirichlet(&self, facet: Facet) -> bool {
        self.get(facet) == BcKind::Dbc
    }
}

/// Axis-aligned domain box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Domain {
    pub fn cube(edge: f64) -> Self {
        Self {
            min: [0.0; 3],
            max: [edge; 3],
        }
    }

    pub fn extents(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Coordinate of the facet plane along its axis.
    pub fn plane(&self, facet: Facet) -> f64 {
        if facet.is_max() {
            self.max[facet.axis()]
        } else {
            self.min[facet.axis()]
        }
    }

    /// Signed distance of `p` to the facet plane, positive inside the box.
    pub fn inside_distance(&self, facet: Facet, p: &Vec3) -> f64 {
        let x = p[facet.axis()];
        if facet.is_max() {
            self.max[facet.axis()] - x
        } else {
            x - self.min[facet.axis()]
        }
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        Facet::ALL.iter().all(|&f| self.inside_distance(f, p) >= -tol)
    }

    pub fn strictly_contains(&self, p: &Vec3, tol: f64) -> bool {
        Facet::ALL.iter().all(|&f| self.inside_distance(f, p) > tol)
    }

    /// Facets whose plane passes within `tol` of `p`.
    pub fn facets_at(&self, p: &Vec3, tol: f64) -> Vec<Facet> {
        Facet::ALL
            .iter()
            .copied()
            .filter(|&f| self.inside_distance(f, p).abs() <= tol)
            .collect()
    }

    /// The facet rectangle, counter-clockwise about the outward normal.
    pub fn facet_polygon(&self, facet: Facet) -> Vec<Vec3> {
        let a = facet.axis();
        let (u, w) = ((a + 1) % 3, (a + 2) % 3);
        let corner = |cu: f64, cw: f64| {
            let mut p = Vec3::zeros();
            p[a] = self.plane(facet);
            p[u] = cu;
            p[w] = cw;
            p
        };
        let (u0, u1, w0, w1) = (self.min[u], self.max[u], self.min[w], self.max[w]);
        let mut poly = vec![corner(u0, w0), corner(u1, w0), corner(u1, w1), corner(u0, w1)];
        if !facet.is_max() {
            poly.reverse();
        }
        poly
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|k| {
            self.min[k].is_finite() && self.max[k].is_finite() && self.max[k] > self.min[k]
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphNode {
    pub id: String,
    /// Position in mm.
    pub position: [f64; 3],
    /// Node-ball radius in mm; carried through but not used by the measures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strut {
    pub id: String,
    pub nodes: [String; 2],
    /// Strut radius in mm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub id: String,
    pub struts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidCell {
    pub id: String,
    pub windows: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoamGraph {
    #[serde(default)]
    pub nodes: Vec<GraphNode>,
    #[serde(default)]
    pub struts: Vec<Strut>,
    #[serde(default)]
    pub windows: Vec<Window>,
    #[serde(default)]
    pub cells: Vec<FluidCell>,
    pub domain: Domain,
    #[serde(default)]
    pub boundary_conditions: FacetBcs,
}

/// A validated graph with string references resolved to dense indices.
#[derive(Clone, Debug)]
pub struct IndexedGraph {
    pub positions: Vec<Vec3>,
    pub strut_nodes: Vec<[usize; 2]>,
    pub strut_radius: Vec<Option<f64>>,
    /// Window loops as node sequences; segment `k` runs from node `k` to
    /// node `k+1` along strut `window_struts[w][k]`.
    pub window_nodes: Vec<Vec<usize>>,
    pub window_struts: Vec<Vec<usize>>,
    pub cell_windows: Vec<Vec<usize>>,
}

impl FoamGraph {
    pub fn empty(domain: Domain) -> Self {
        Self {
            nodes: Vec::new(),
            struts: Vec::new(),
            windows: Vec::new(),
            cells: Vec::new(),
            domain,
            boundary_conditions: FacetBcs::default(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "foam graph".into(),
            source,
        })
    }

    /// Pretty-printed JSON with a trailing newline. Field and element order
    /// follow the in-memory order, so output is reproducible.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph serializes");
        s.push('\n');
        s
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

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })
    }

    /// Checks references, loop closure and the closed-surface property of
    /// every cell, and resolves ids to indices.
    pub fn index(&self) -> Result<IndexedGraph> {
        let bad = |msg: String| Error::InvalidGraph(msg);
        if !self.domain.is_valid() {
            return Err(bad(format!("domain box {:?} is empty or not finite", self.domain)));
        }
        fn lookup<'a>(
            items: impl Iterator<Item = &'a str>,
            what: &str,
        ) -> Result<HashMap<&'a str, usize>> {
            let mut map = HashMap::new();
            for (i, id) in items.enumerate() {
                if map.insert(id, i).is_some() {
                    return Err(Error::InvalidGraph(format!("duplicate {what} id '{id}'")));
                }
            }
            Ok(map)
        }
        let node_ix = lookup(self.nodes.iter().map(|n| n.id.as_str()), "node")?;
        let strut_ix = lookup(self.struts.iter().map(|s| s.id.as_str()), "strut")?;
        let window_ix = lookup(self.windows.iter().map(|w| w.id.as_str()), "window")?;
        lookup(self.cells.iter().map(|c| c.id.as_str()), "cell")?;

        let mut positions = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            if n.position.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("node '{}' has a non-finite position", n.id)));
            }
            positions.push(v3(n.position));
        }

        let mut strut_nodes = Vec::with_capacity(self.struts.len());
        let mut strut_radius = Vec::with_capacity(self.struts.len());
        for s in &self.struts {
            let a = *node_ix
                .get(s.nodes[0].as_str())
                .ok_or_else(|| bad(format!("strut '{}' references unknown node '{}'", s.id, s.nodes[0])))?;
            let b = *node_ix
                .get(s.nodes[1].as_str())
                .ok_or_else(|| bad(format!("strut '{}' references unknown node '{}'", s.id, s.nodes[1])))?;
            if a == b {
                return Err(bad(format!("strut '{}' is a loop", s.id)));
            }
            if let Some(r) = s.radius {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(bad(format!("strut '{}' has invalid radius {r}", s.id)));
                }
            }
            strut_nodes.push([a, b]);
            strut_radius.push(s.radius);
        }

        let mut window_nodes = Vec::with_capacity(self.windows.len());
        let mut window_struts = Vec::with_capacity(self.windows.len());
        for w in &self.windows {
            let ss: Vec<usize> = w
                .struts
                .iter()
                .map(|id| {
                    strut_ix
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| bad(format!("window '{}' references unknown strut '{id}'", w.id)))
                })
                .collect::<Result<_>>()?;
            if ss.len() < 3 {
                return Err(bad(format!("window '{}' has fewer than 3 struts", w.id)));
            }
            let k = ss.len();
            let mut loop_nodes = Vec::with_capacity(k);
            for i in 0..k {
                let prev = strut_nodes[ss[(i + k - 1) % k]];
                let cur = strut_nodes[ss[i]];
                let shared: Vec<usize> = cur.iter().copied().filter(|n| prev.contains(n)).collect();
                if shared.len() != 1 {
                    return Err(bad(format!("window '{}' is not a closed strut loop", w.id)));
                }
                loop_nodes.push(shared[0]);
            }
            for i in 0..k {
                let [a, b] = strut_nodes[ss[i]];
                let (p, q) = (loop_nodes[i], loop_nodes[(i + 1) % k]);
                if !((a == p && b == q) || (a == q && b == p)) {
                    return Err(bad(format!("window '{}' is not a closed strut loop", w.id)));
                }
            }
            window_nodes.push(loop_nodes);
            window_struts.push(ss);
        }

        let mut uses = vec![0usize; self.windows.len()];
        let mut cell_windows = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let ws: Vec<usize> = c
                .windows
                .iter()
                .map(|id| {
                    window_ix
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| bad(format!("cell '{}' references unknown window '{id}'", c.id)))
                })
                .collect::<Result<_>>()?;
            let mut strut_count: HashMap<usize, usize> = HashMap::new();
            for &w in &ws {
                uses[w] += 1;
                for &s in &window_struts[w] {
                    *strut_count.entry(s).or_default() += 1;
                }
            }
            if ws.is_empty() || strut_count.values().any(|&n| n != 2) {
                return Err(Error::OpenCell(c.id.clone()));
            }
            cell_windows.push(ws);
        }
        if let Some(w) = uses.iter().position(|&n| n > 2) {
            return Err(bad(format!(
                "window '{}' is used by more than two cells",
                self.windows[w].id
            )));
        }

        Ok(IndexedGraph {
            positions,
            strut_nodes,
            strut_radius,
            window_nodes,
            window_struts,
            cell_windows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> FoamGraph {
        let node = |id: &str, p: [f64; 3]| GraphNode {
            id: id.into(),
            position: p,
            radius: None,
        };
        let strut = |id: &str, a: &str, b: &str| Strut {
            id: id.into(),
            nodes: [a.into(), b.into()],
            radius: Some(0.1),
        };
        FoamGraph {
            nodes: vec![
                node("a", [1.0, 1.0, 1.0]),
                node("b", [2.0, 1.0, 1.0]),
                node("c", [1.0, 2.0, 1.0]),
            ],
            struts: vec![strut("ab", "a", "b"), strut("bc", "b", "c"), strut("ca", "c", "a")],
            windows: vec![Window {
                id: "w".into(),
                struts: vec!["ab".into(), "bc".into(), "ca".into()],
            }],
            cells: vec![],
            domain: Domain::cube(3.0),
            boundary_conditions: FacetBcs::default(),
        }
    }

    #[test]
    fn window_loop_is_resolved_in_order() {
        let ix = triangle().index().unwrap();
        assert_eq!(ix.window_nodes[0], vec![0, 1, 2]);
    }

    #[test]
    fn broken_loop_is_rejected() {
        let mut g = triangle();
        g.windows[0].struts.swap(0, 1);
        g.windows[0].struts.push("ab".into());
        assert!(matches!(g.index(), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn open_cell_is_rejected() {
        let mut g = triangle();
        g.cells.push(FluidCell {
            id: "c".into(),
            windows: vec!["w".into()],
        });
        assert!(matches!(g.index(), Err(Error::OpenCell(_))));
    }

    #[test]
    fn unknown_reference_is_rejected() {
        let mut g = triangle();
        g.struts[0].nodes[1] = "zz".into();
        assert!(matches!(g.index(), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn json_round_trip_is_identical() {
        let g = triangle();
        let text = g.to_json_string();
        let back = FoamGraph::from_json_str(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn missing_facets_default_to_neumann() {
        let bcs: FacetBcs = serde_json::from_str(r#"{"z_min":"dbc"}"#).unwrap();
        assert_eq!(bcs.z_min, BcKind::Dbc);
        assert_eq!(bcs.x_max, BcKind::Nbc);
    }

    #[test]
    fn facet_polygon_faces_outward() {
        let d = Domain::cube(2.0);
        for f in Facet::ALL {
            let n = crate::geom::area_vector(&d.facet_polygon(f));
            assert!((n - f.outward_normal() * 4.0).norm() < 1e-12, "{f}");
        }
    }
}
