//! Planar geometry helpers shared by box fitting, ray casting and IoU.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
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
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Counter-clockwise corners of a `length x width` rectangle whose length
/// axis points along `yaw`.
pub fn rect_corners(center: Vec2, length: f64, width: f64, yaw: f64) -> [Vec2; 4] {
    let (hl, hw) = (length / 2.0, width / 2.0);
    [
        Vec2::new(hl, -hw),
        Vec2::new(hl, hw),
        Vec2::new(-hl, hw),
        Vec2::new(-hl, -hw),
    ]
    .map(|v| center + v.rotate(yaw))
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        acc += poly[i].cross(poly[j]);
    }
    acc / 2.0
}

/// Sutherland-Hodgman clip of a convex polygon by a convex CCW polygon.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b - a;
        let inside = |p: Vec2| edge.cross(p - a) >= 0.0;
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (cin, pin) = (inside(cur), inside(prev));
            if cin {
                if !pin {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if pin {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

/// Intersection of segment `p0-p1` with the infinite line through `a-b`.
fn line_intersection(p0: Vec2, p1: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let edge = b - a;
    let d0 = edge.cross(p0 - a);
    let d1 = edge.cross(p1 - a);
    let t = d0 / (d0 - d1);
    p0 + (p1 - p0) * t
}

/// Parameter `t >= 0` at which the ray `origin + t * dir` meets segment
/// `a-b`, if it does.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Whether closed segments `p0-p1` and `q0-q1` intersect.
pub fn segments_intersect(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> bool {
    let d = p1 - p0;
    let e = q1 - q0;
    let o1 = d.cross(q0 - p0);
    let o2 = d.cross(q1 - p0);
    let o3 = e.cross(p0 - q0);
    let o4 = e.cross(p1 - q0);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, o: f64| {
        o == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    on(p0, p1, q0, o1) || on(p0, p1, q1, o2) || on(q0, q1, p0, o3) || on(q0, q1, p1, o4)
}

/// Whether a point lies inside (or on) a convex CCW polygon.
pub fn point_in_convex(poly: &[Vec2], p: Vec2) -> bool {
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        (b - a).cross(p - a) >= 0.0
    })
}

/// Whether two convex polygons overlap (separating-axis test, touching
/// counts as overlap).
pub fn convex_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    for poly in [a, b] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()] - poly[i];
            let axis = Vec2::new(-e.y, e.x);
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

fn project(poly: &[Vec2], axis: Vec2) -> (f64, f64) {
    poly.iter().map(|p| p.dot(axis)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_wrapping() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(normalize_angle(0.25), 0.25);
    }

    #[test]
    fn rect_area_and_orientation() {
        let r = rect_corners(Vec2::new(1.0, -2.0), 4.0, 2.0, 0.7);
        assert!((polygon_area(&r) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn clip_half_overlap() {
        let a = rect_corners(Vec2::new(0.0, 0.0), 2.0, 2.0, 0.0);
        let b = rect_corners(Vec2::new(1.0, 0.0), 2.0, 2.0, 0.0);
        let inter = clip_convex(&a, &b);
        assert!((polygon_area(&inter) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ray_hits_segment() {
        let t = ray_segment(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0));
        assert_eq!(t, Some(3.0));
        let miss = ray_segment(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(3.0, -1.0), Vec2::new(3.0, 1.0));
        assert_eq!(miss, None);
    }

    #[test]
    fn segment_and_overlap_tests() {
        let o = Vec2::new(0.0, 0.0);
        assert!(segments_intersect(o, Vec2::new(2.0, 2.0), Vec2::new(0.0, 2.0), Vec2::new(2.0, 0.0)));
        assert!(!segments_intersect(o, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)));
        let a = rect_corners(o, 2.0, 2.0, 0.0);
        let b = rect_corners(Vec2::new(3.0, 0.0), 2.0, 2.0, 0.3);
        assert!(!convex_overlap(&a, &b));
        assert!(convex_overlap(&a, &rect_corners(Vec2::new(1.5, 0.0), 2.0, 2.0, 0.3)));
        assert!(point_in_convex(&a, Vec2::new(0.5, -0.5)));
        assert!(!point_in_convex(&a, Vec2::new(1.5, 0.0)));
    }
}
