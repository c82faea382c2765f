//! Planar geometry kernel: segments, convex polygons, distances and
//! penetration tests used by collision checking and placement sampling.

use serde::{Deserialize, Serialize};

pub type Point2 = [f64; 2];

pub fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point2, b: Point2) -> Point2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Point2, s: f64) -> Point2 {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// 2D cross product `a_x b_y - a_y b_x`.
pub fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Point2) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Point2, b: Point2) -> f64 {
    norm(sub(a, b))
}

/// Left-hand perpendicular (rotates +90 degrees).
pub fn perp(a: Point2) -> Point2 {
    [-a[1], a[0]]
}

pub fn normalize(a: Point2) -> Point2 {
    let n = norm(a);
    if n == 0.0 {
        [0.0, 0.0]
    } else {
        scale(a, 1.0 / n)
    }
}

/// Line segment between two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        dist(self.a, self.b)
    }

    pub fn direction(&self) -> Point2 {
        normalize(sub(self.b, self.a))
    }

    /// Unit normal on the left of the a->b direction.
    pub fn left_normal(&self) -> Point2 {
        normalize(perp(sub(self.b, self.a)))
    }

    pub fn point_at(&self, t: f64) -> Point2 {
        add(self.a, scale(sub(self.b, self.a), t))
    }
}

/// Distance from point `p` to the segment.
pub fn point_segment_distance(p: Point2, s: &Segment) -> f64 {
    let d = sub(s.b, s.a);
    let len2 = dot(d, d);
    if len2 == 0.0 {
        return dist(p, s.a);
    }
    let t = (dot(sub(p, s.a), d) / len2).clamp(0.0, 1.0);
    dist(p, s.point_at(t))
}

/// True when the open interiors or endpoints of the two segments meet.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> bool {
    segment_segment_distance(s1, s2) == 0.0
}

/// Minimum distance between two segments (zero when they intersect).
pub fn segment_segment_distance(s1: &Segment, s2: &Segment) -> f64 {
    let d1 = sub(s1.b, s1.a);
    let d2 = sub(s2.b, s2.a);
    let r = sub(s1.a, s2.a);
    let denom = cross(d1, d2);
    if denom != 0.0 {
        let t = cross(sub(s2.a, s1.a), d2) / denom;
        let u = cross(sub(s2.a, s1.a), d1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    } else {
        // parallel: overlapping collinear segments touch
        if cross(d1, r) == 0.0 {
            let len2 = dot(d1, d1);
            if len2 > 0.0 {
                let t0 = dot(sub(s2.a, s1.a), d1) / len2;
                let t1 = dot(sub(s2.b, s1.a), d1) / len2;
                let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
                if hi >= 0.0 && lo <= 1.0 {
                    return 0.0;
                }
            }
        }
    }
    point_segment_distance(s1.a, s2)
        .min(point_segment_distance(s1.b, s2))
        .min(point_segment_distance(s2.a, s1))
        .min(point_segment_distance(s2.b, s1))
}

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Validates convexity, counterclockwise winding and vertex count.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, String> {
        if vertices.len() < 3 {
            return Err("polygon needs at least 3 vertices".into());
        }
        let n = vertices.len();
        let mut area2 = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let turn = cross(sub(b, a), sub(c, b));
            if turn < -1e-12 {
                return Err("polygon is not convex/counterclockwise".into());
            }
            area2 += cross(a, b);
        }
        if area2 <= 0.0 {
            return Err("polygon has non-positive area".into());
        }
        Ok(ConvexPolygon { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Vertices transformed by a planar pose.
    pub fn transformed(&self, pose: &crate::pose::Pose) -> Vec<Point2> {
        self.vertices.iter().map(|v| pose.transform_point(*v)).collect()
    }
}

/// Signed interior depth of `p` in the convex polygon given by `verts`
/// (counterclockwise). Positive inside, negative outside; on an edge it is
/// zero. This is the minimum signed distance to the edge half-planes.
pub fn convex_depth(verts: &[Point2], p: Point2) -> f64 {
    let n = verts.len();
    let mut depth = f64::INFINITY;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let nrm = normalize(perp(sub(b, a)));
        depth = depth.min(dot(sub(p, a), nrm));
    }
    depth
}

/// Distance from a segment to the solid convex polygon (zero on contact or
/// overlap).
pub fn segment_polygon_distance(s: &Segment, verts: &[Point2]) -> f64 {
    if convex_depth(verts, s.a) >= 0.0 || convex_depth(verts, s.b) >= 0.0 {
        return 0.0;
    }
    let n = verts.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let edge = Segment::new(verts[i], verts[(i + 1) % n]);
        let d = segment_segment_distance(s, &edge);
        if d == 0.0 {
            return 0.0;
        }
        best = best.min(d);
    }
    best
}

/// How deep the segment penetrates the polygon interior.
///
/// Clips the segment against the convex polygon and reports the interior
/// depth at the middle of the clipped chord; 0 when the segment misses or
/// only grazes the boundary. Grasped links may touch the object boundary,
/// so collision tests on them require a strictly positive depth.
pub fn segment_polygon_penetration(s: &Segment, verts: &[Point2]) -> f64 {
    let d = sub(s.b, s.a);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let n = verts.len();
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let nrm = normalize(perp(sub(b, a)));
        let denom = dot(d, nrm);
        let num = dot(sub(s.a, a), nrm);
        // inside condition: num + t * denom >= 0
        if denom.abs() < 1e-15 {
            if num < 0.0 {
                return 0.0;
            }
        } else {
            let t = -num / denom;
            if denom > 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
        if t0 > t1 {
            return 0.0;
        }
    }
    let mid = s.point_at(0.5 * (t0 + t1));
    convex_depth(verts, mid).max(0.0)
}
