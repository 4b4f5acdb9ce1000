//! Plane vectors, 2×2 matrices and polygon predicates for closed curves.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Counterclockwise quarter turn: (x, y) -> (-y, x).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Clockwise quarter turn: (x, y) -> (y, -x).
    pub fn perp_cw(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalize(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Mat2 {
    pub a: f64, // (0,0)
    pub b: f64, // (0,1)
    pub c: f64, // (1,0)
    pub d: f64, // (1,1)
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        Mat2 { a, b, c, d }
    }

    /// Outer product u vᵀ.
    pub fn outer(u: Vec2, v: Vec2) -> Mat2 {
        Mat2::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn trace(self) -> f64 {
        self.a + self.d
    }

    pub fn sym(self) -> Mat2 {
        Mat2::new(
            self.a,
            0.5 * (self.b + self.c),
            0.5 * (self.b + self.c),
            self.d,
        )
    }

    pub fn antisym(self) -> Mat2 {
        let off = 0.5 * (self.b - self.c);
        Mat2::new(0.0, off, -off, 0.0)
    }

    /// Remove the trace: A - (tr A / 2) I.
    pub fn deviatoric(self) -> Mat2 {
        let t = 0.5 * self.trace();
        Mat2::new(self.a - t, self.b, self.c, self.d - t)
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn frobenius(self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }
}

/// Shoelace signed area of a closed polygon (positive for CCW).
pub fn signed_area(nodes: &[Vec2]) -> f64 {
    let n = nodes.len();
    let mut s = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        s += nodes[i].cross(nodes[j]);
    }
    0.5 * s
}

pub fn perimeter(nodes: &[Vec2]) -> f64 {
    let n = nodes.len();
    (0..n).map(|i| nodes[i].dist(nodes[(i + 1) % n])).sum()
}

pub fn centroid(nodes: &[Vec2]) -> Vec2 {
    // area centroid of the polygon
    let n = nodes.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut a = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let w = nodes[i].cross(nodes[j]);
        cx += (nodes[i].x + nodes[j].x) * w;
        cy += (nodes[i].y + nodes[j].y) * w;
        a += w;
    }
    Vec2::new(cx / (3.0 * a), cy / (3.0 * a))
}

/// Even-odd point-in-polygon test (crossing number).
pub fn point_in_polygon(p: Vec2, nodes: &[Vec2]) -> bool {
    let n = nodes.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (zi, zj) = (nodes[i], nodes[j]);
        if (zi.y > p.y) != (zj.y > p.y) {
            let x_cross = zi.x + (p.y - zi.y) / (zj.y - zi.y) * (zj.x - zi.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the segment [a, b] and the closest point.
pub fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, Vec2) {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
    let q = a + ab * t;
    (p.dist(q), q)
}

/// Projection of `p` onto the polygon boundary.
///
/// Returns (distance, nearest boundary point, ambiguous). `ambiguous` is set
/// when a second, non-adjacent segment achieves the minimum within 1e-9
/// relative; the reported point is then the one of lowest polar angle about
/// `p` (deterministic tie-break).
pub fn project_to_polygon(p: Vec2, nodes: &[Vec2]) -> (f64, Vec2, bool) {
    let n = nodes.len();
    let mut best = f64::INFINITY;
    let mut best_pt = nodes[0];
    let mut best_seg = 0usize;
    let mut ambiguous = false;
    for i in 0..n {
        let (d, q) = point_segment(p, nodes[i], nodes[(i + 1) % n]);
        if d < best * (1.0 - 1e-9) {
            best = d;
            best_pt = q;
            best_seg = i;
            ambiguous = false;
        } else if d <= best * (1.0 + 1e-9) {
            let adjacent =
                (i + n - best_seg) % n <= 1 || (best_seg + n - i) % n <= 1;
            if !adjacent {
                ambiguous = true;
                let ang_new = (q - p).y.atan2((q - p).x);
                let ang_old = (best_pt - p).y.atan2((best_pt - p).x);
                if ang_new < ang_old {
                    best = d;
                    best_pt = q;
                    best_seg = i;
                }
            }
        }
    }
    (best, best_pt, ambiguous)
}

/// Minimum distance between the boundaries of two polygons.
pub fn polygon_min_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for &p in a {
        let n = b.len();
        for i in 0..n {
            let (d, _) = point_segment(p, b[i], b[(i + 1) % n]);
            if d < best {
                best = d;
            }
        }
    }
    for &p in b {
        let n = a.len();
        for i in 0..n {
            let (d, _) = point_segment(p, a[i], a[(i + 1) % n]);
            if d < best {
                best = d;
            }
        }
    }
    best
}

fn segments_properly_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// True when any two non-adjacent edges of the closed polygon cross.
pub fn is_self_intersecting(nodes: &[Vec2]) -> bool {
    let n = nodes.len();
    for i in 0..n {
        let (a1, a2) = (nodes[i], nodes[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue; // adjacent around the seam
            }
            let (b1, b2) = (nodes[j], nodes[(j + 1) % n]);
            if segments_properly_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}
