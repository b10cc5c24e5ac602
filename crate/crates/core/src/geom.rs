//! Small geometric helpers shared by the lattice generators, the primal
//! clipper and the dual measures. Lengths in mm.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

pub fn v3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

pub fn arr(p: &Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Area vector of a closed polygon (magnitude = area, direction = normal by
/// the right-hand rule over the vertex order).
pub fn area_vector(poly: &[Vec3]) -> Vec3 {
    let n = poly.len();
    let mut acc = Vec3::zeros();
    for i in 0..n {
        acc += poly[i].cross(&poly[(i + 1) % n]);
    }
    acc * 0.5
}

pub fn vertex_mean(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return Vec3::zeros();
    }
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Area and area centroid of a planar polygon, by fan triangulation about
/// the vertex mean.
pub fn area_centroid(poly: &[Vec3]) -> (f64, Vec3) {
    let m = vertex_mean(poly);
    let normal = area_vector(poly);
    let norm = normal.norm();
    if norm == 0.0 {
        return (0.0, m);
    }
    let unit = normal / norm;
    let mut area = 0.0;
    let mut weighted = Vec3::zeros();
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let t = 0.5 * (a - m).cross(&(b - m)).dot(&unit);
        area += t;
        weighted += t * (m + a + b) / 3.0;
    }
    if area.abs() < f64::MIN_POSITIVE {
        return (0.0, m);
    }
    (area, weighted / area)
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Signed tetrahedron volume `(b-a)·((c-a)×(d-a)) / 6`.
pub fn tet_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

pub fn tet_centroid(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Vec3 {
    (a + b + c + d) / 4.0
}

/// Clips a convex polygon to the half-space `n·x <= d`.
pub fn clip_halfspace(poly: &[Vec3], n: &Vec3, d: f64) -> Vec<Vec3> {
    let len = poly.len();
    let mut out = Vec::with_capacity(len + 1);
    for i in 0..len {
        let (cur, nxt) = (poly[i], poly[(i + 1) % len]);
        let (sc, sn) = (n.dot(&cur) - d, n.dot(&nxt) - d);
        if sc <= 0.0 {
            out.push(cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let t = sc / (sc - sn);
            out.push(cur + (nxt - cur) * t);
        }
    }
    out
}

/// Distance from `p` to the segment `ab`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

pub fn polyline_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// The point at arc length `s` along a polyline.
pub fn polyline_point(points: &[Vec3], s: f64) -> Vec3 {
    let mut acc = 0.0;
    for w in points.windows(2) {
        let l = (w[1] - w[0]).norm();
        if acc + l >= s && l > 0.0 {
            return w[0] + (w[1] - w[0]) * ((s - acc) / l);
        }
        acc += l;
    }
    *points.last().expect("non-empty polyline")
}

/// Arc-length coordinate of the projection of `p` onto a polyline.
pub fn polyline_arc(points: &[Vec3], p: &Vec3) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    let mut acc = 0.0;
    for w in points.windows(2) {
        let ab = w[1] - w[0];
        let l = ab.norm();
        let t = if l > 0.0 {
            ((p - w[0]).dot(&ab) / (l * l)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let d = (p - (w[0] + ab * t)).norm();
        if d < best.0 {
            best = (d, acc + t * l);
        }
        acc += l;
    }
    best.1
}
