//! Sutherland-Hodgman clipping of window polygons against the domain box,
//! keeping track of where every vertex and segment came from.

use crate::geom::Vec3;
use crate::primal::graph::{Domain, Facet};

/// Origin of a clipped polygon vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum VTag {
    /// An original graph node.
    Node(usize),
    /// Where a strut leaves the box.
    Cross(usize),
    /// A point on a box edge, interior to a cut run.
    Kink,
}

/// Origin of the segment leaving a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ETag {
    Strut(usize),
    /// Segment lying in a facet plane, created by the cut.
    Cut,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CVert {
    pub p: Vec3,
    pub tag: VTag,
    pub out: ETag,
}

fn rank(tag: VTag) -> u8 {
    match tag {
        VTag::Node(_) => 2,
        VTag::Cross(_) => 1,
        VTag::Kink => 0,
    }
}

fn crossing_tag(edge: ETag) -> VTag {
    match edge {
        ETag::Strut(s) => VTag::Cross(s),
        ETag::Cut => VTag::Kink,
    }
}

/// Clips against one facet half-space.
fn clip_plane(poly: &[CVert], domain: &Domain, facet: Facet, tol: f64) -> Vec<CVert> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    let axis = facet.axis();
    let plane = domain.plane(facet);
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let sc = domain.inside_distance(facet, &cur.p);
        let sn = domain.inside_distance(facet, &nxt.p);
        let cur_in = sc >= -tol;
        let nxt_in = sn >= -tol;
        let intersect = || {
            let t = sc / (sc - sn);
            let mut p = cur.p + (nxt.p - cur.p) * t;
            p[axis] = plane;
            p
        };
        match (cur_in, nxt_in) {
            (true, true) => out.push(cur),
            (true, false) => {
                if sc.abs() <= tol {
                    out.push(CVert { out: ETag::Cut, ..cur });
                } else {
                    out.push(cur);
                    out.push(CVert {
                        p: intersect(),
                        tag: crossing_tag(cur.out),
                        out: ETag::Cut,
                    });
                }
            }
            (false, true) => {
                if sn.abs() > tol {
                    out.push(CVert {
                        p: intersect(),
                        tag: crossing_tag(cur.out),
                        out: cur.out,
                    });
                }
            }
            (false, false) => {}
        }
    }
    merge_coincident(out, tol)
}

/// Merges consecutive vertices closer than `tol`, keeping the more
/// meaningful tag and the outgoing segment of the later vertex.
pub(crate) fn merge_coincident(mut poly: Vec<CVert>, tol: f64) -> Vec<CVert> {
    let mut changed = true;
    while changed && poly.len() > 1 {
        changed = false;
        let n = poly.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if (poly[i].p - poly[j].p).norm() <= tol {
                let (a, b) = (poly[i], poly[j]);
                let keep = if rank(a.tag) >= rank(b.tag) { a } else { b };
                poly[i] = CVert {
                    p: keep.p,
                    tag: keep.tag,
                    out: b.out,
                };
                poly.remove(j);
                changed = true;
                break;
            }
        }
    }
    poly
}

/// Clips a window polygon to the closed domain box.
pub(crate) fn clip_to_box(poly: Vec<CVert>, domain: &Domain, tol: f64) -> Vec<CVert> {
    let mut cur = poly;
    for facet in Facet::ALL {
        if cur.len() < 3 {
            return Vec::new();
        }
        cur = clip_plane(&cur, domain, facet, tol);
    }
    if cur.len() < 3 {
        return Vec::new();
    }
    cur
}
