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

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
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

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
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

/// Wrap an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect {
            min: Vec2::new(x0.min(x1), y0.min(y1)),
            max: Vec2::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        self.clamp(p).distance(p)
    }

    /// Parameter interval `[t0, t1]` (t ≥ 0 part not enforced) over which the
    /// ray `origin + t·dir` lies inside the rectangle, or `None` if it misses.
    pub fn ray_interval(&self, origin: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for (o, d, lo, hi) in [
            (origin.x, dir.x, self.min.x, self.max.x),
            (origin.y, dir.y, self.min.y, self.max.y),
        ] {
            if d.abs() < 1e-12 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                t0 = t0.max(a);
                t1 = t1.min(b);
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// Distance along the ray until it first leaves the union of `rects`
/// (0 if the origin is outside all of them), capped at `cap`.
pub fn ray_exit_distance(rects: &[Rect], origin: Vec2, dir: Vec2, cap: f64) -> f64 {
    let mut spans: Vec<(f64, f64)> = rects
        .iter()
        .filter_map(|r| r.ray_interval(origin, dir))
        .filter(|&(_, t1)| t1 >= 0.0)
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = 0.0_f64;
    let mut inside = false;
    for (t0, t1) in spans {
        if t0 > reach + 1e-9 {
            break;
        }
        if t1 >= reach {
            inside = true;
            reach = t1;
        }
    }
    if !inside {
        return 0.0;
    }
    reach.min(cap)
}

/// Distance along the ray until it first enters any of `rects`, capped.
pub fn ray_entry_distance(rects: &[Rect], origin: Vec2, dir: Vec2, cap: f64) -> f64 {
    rects
        .iter()
        .filter_map(|r| r.ray_interval(origin, dir))
        .filter(|&(_, t1)| t1 >= 0.0)
        .map(|(t0, _)| t0.max(0.0))
        .fold(cap, f64::min)
}

/// Oriented bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    pub half: Vec2,
}

impl Obb {
    pub fn axes(&self) -> (Vec2, Vec2) {
        let f = Vec2::from_angle(self.heading);
        (f, f.perp())
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (f, l) = self.axes();
        let (a, b) = (f * self.half.x, l * self.half.y);
        [
            self.center + a + b,
            self.center + a - b,
            self.center - a - b,
            self.center - a + b,
        ]
    }

    fn projected_radius(&self, axis: Vec2) -> f64 {
        let (f, l) = self.axes();
        self.half.x * f.dot(axis).abs() + self.half.y * l.dot(axis).abs()
    }

    /// Separating-axis overlap test (touching counts as overlap).
    pub fn overlaps(&self, other: &Obb) -> bool {
        let (f1, l1) = self.axes();
        let (f2, l2) = other.axes();
        let d = other.center - self.center;
        [f1, l1, f2, l2]
            .iter()
            .all(|&ax| d.dot(ax).abs() <= self.projected_radius(ax) + other.projected_radius(ax))
    }

    /// Minimum distance between the two boxes; 0 when they overlap.
    pub fn distance(&self, other: &Obb) -> f64 {
        if self.overlaps(other) {
            return 0.0;
        }
        let a = self.corners();
        let b = other.corners();
        let mut best = f64::INFINITY;
        for (pts, poly) in [(&a, &b), (&b, &a)] {
            for &p in pts.iter() {
                for i in 0..4 {
                    best = best.min(point_segment_distance(p, poly[i], poly[(i + 1) % 4]));
                }
            }
        }
        best
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn obb_distance_axis_aligned() {
        let a = Obb {
            center: Vec2::ZERO,
            heading: 0.0,
            half: Vec2::new(2.0, 1.0),
        };
        let b = Obb {
            center: Vec2::new(6.5, 0.0),
            heading: 0.0,
            half: Vec2::new(0.5, 0.5),
        };
        assert!((a.distance(&b) - 4.0).abs() < 1e-12);
        let c = Obb {
            center: Vec2::new(2.4, 0.0),
            ..b
        };
        assert!(a.overlaps(&c));
        assert_eq!(a.distance(&c), 0.0);
    }

    #[test]
    fn obb_rotated_overlap() {
        let a = Obb {
            center: Vec2::ZERO,
            heading: 0.0,
            half: Vec2::new(1.0, 1.0),
        };
        let b = Obb {
            center: Vec2::new(2.6, 0.0),
            heading: std::f64::consts::FRAC_PI_4,
            half: Vec2::new(1.0, 1.0),
        };
        // rotated square reaches sqrt(2) ≈ 1.414 toward a, gap = 2.6 - 1 - 1.414
        assert!(!a.overlaps(&b));
        assert!((a.distance(&b) - (2.6 - 1.0 - 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn ray_exit_through_union() {
        let rects = [Rect::new(0.0, -1.0, 10.0, 1.0), Rect::new(10.0, -1.0, 15.0, 1.0)];
        let d = ray_exit_distance(&rects, Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), 100.0);
        assert!((d - 14.0).abs() < 1e-9);
        let side = ray_exit_distance(&rects, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 100.0);
        assert!((side - 1.0).abs() < 1e-9);
        let outside = ray_exit_distance(&rects, Vec2::new(1.0, 5.0), Vec2::new(1.0, 0.0), 100.0);
        assert_eq!(outside, 0.0);
    }

    #[test]
    fn ray_entry() {
        let rects = [Rect::new(5.0, -1.0, 6.0, 1.0)];
        let d = ray_entry_distance(&rects, Vec2::ZERO, Vec2::new(1.0, 0.0), 50.0);
        assert!((d - 5.0).abs() < 1e-12);
        let miss = ray_entry_distance(&rects, Vec2::ZERO, Vec2::new(-1.0, 0.0), 50.0);
        assert_eq!(miss, 50.0);
    }
}
