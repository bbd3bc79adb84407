//! 2-D primitives and the intersection predicates used for occlusion and
//! collision.
//!
//! All predicates are inclusive at tangencies: a segment that touches a
//! polygon vertex or slides along an edge counts as crossing it. Orientation
//! tests use plain `f64` arithmetic with exact zero comparisons, so scenarios
//! authored on a decimal grid get exact tangency behaviour.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at `radians` from the +x axis.
    pub fn from_angle(radians: f64) -> Self {
        Vec2::new(radians.cos(), radians.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (other - self).length()
    }

    /// `None` for zero-length or non-finite vectors.
    pub fn normalized(self) -> Option<Vec2> {
        let len = self.length();
        if len > 0.0 && len.is_finite() {
            Some(Vec2::new(self.x / len, self.y / len))
        } else {
            None
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle, `min` inclusive to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
        )
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn is_proper(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.width() > 0.0 && self.height() > 0.0
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Parameter of `p` projected onto the line through `a` and `b`.
fn param_on(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let d = b - a;
    (p - a).dot(d) / d.dot(d)
}

/// Does the open segment `(a, b)` meet the closed segment `[c, d]`?
///
/// The endpoints `a` and `b` themselves are excluded, so a beacon standing on
/// a wall does not occlude itself. A degenerate `[c, d]` (a point) is handled.
pub fn open_segment_hits_segment(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    if a == b {
        return false;
    }
    let o1 = sign(orient(a, b, c));
    let o2 = sign(orient(a, b, d));

    if o1 == 0 && o2 == 0 {
        // Collinear: compare the parameter ranges along (a, b).
        let tc = param_on(a, b, c);
        let td = param_on(a, b, d);
        let lo = tc.min(td).max(0.0);
        let hi = tc.max(td).min(1.0);
        return lo <= hi && hi > 0.0 && lo < 1.0;
    }
    if o1 == o2 {
        return false;
    }
    let o3 = sign(orient(c, d, a));
    let o4 = sign(orient(c, d, b));
    if o3 != 0 && o3 == o4 {
        return false;
    }
    // The lines meet at a single point on [c, d]. If that point is `a` or `b`
    // the contact lies outside the open segment.
    o3 != 0 && o4 != 0
}

/// Convex polygon given by its vertices in either winding order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon<'a> {
    vertices: &'a [Vec2],
}

impl<'a> ConvexPolygon<'a> {
    pub fn new(vertices: &'a [Vec2]) -> Self {
        ConvexPolygon { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Twice the signed area; positive for counter-clockwise winding.
    pub fn doubled_area(&self) -> f64 {
        self.edges().map(|(p, q)| p.cross(q)).sum()
    }

    /// Non-degenerate means at least three vertices, positive area and
    /// convexity (no sign change among edge turns).
    pub fn is_valid(&self) -> bool {
        if self.vertices.len() < 3 || self.vertices.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if self.doubled_area() == 0.0 {
            return false;
        }
        let n = self.vertices.len();
        let mut seen = 0i8;
        for i in 0..n {
            let s = sign(orient(
                self.vertices[i],
                self.vertices[(i + 1) % n],
                self.vertices[(i + 2) % n],
            ));
            if s == 0 {
                continue;
            }
            if seen == 0 {
                seen = s;
            } else if s != seen {
                return false;
            }
        }
        true
    }

    fn winding(&self) -> i8 {
        sign(self.doubled_area())
    }

    /// Point inside or on the boundary.
    pub fn contains(&self, p: Vec2) -> bool {
        let w = self.winding();
        self.edges().all(|(a, b)| sign(orient(a, b, p)) * w >= 0)
    }

    /// Point strictly inside.
    pub fn contains_strict(&self, p: Vec2) -> bool {
        let w = self.winding();
        self.edges().all(|(a, b)| sign(orient(a, b, p)) * w > 0)
    }

    /// Does the open segment `(a, b)` touch the boundary or interior?
    pub fn hit_by_open_segment(&self, a: Vec2, b: Vec2) -> bool {
        if a == b {
            return false;
        }
        if self
            .edges()
            .any(|(c, d)| open_segment_hits_segment(a, b, c, d))
        {
            return true;
        }
        // No boundary contact: either entirely inside or entirely outside.
        self.contains(Vec2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0))
    }
}

/// Shortest distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

/// Does the disk of `radius` around `center` touch the segment `[a, b]`?
pub fn segment_hits_disk(a: Vec2, b: Vec2, center: Vec2, radius: f64) -> bool {
    point_segment_distance(center, a, b) <= radius
}
