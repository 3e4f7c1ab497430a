//! Built-in road maps and the ego route.
//!
//! Maps are unions of axis-aligned lane rectangles and junction rectangles.
//! Traffic is right-hand: a lane heading +x lies on the -y side of its road.

use serde::{Deserialize, Serialize};

use super::geometry::{point_segment_distance, wrap_angle, Rect, Vec2};

pub const LANE_WIDTH: f64 = 3.5;
const ARM_START: f64 = 6.5;
const ARM_END: f64 = 150.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub rect: Rect,
    /// Unit travel direction.
    pub direction: Vec2,
    pub road: usize,
    /// Lane carries traffic against the ego route on a road the route uses.
    pub is_opposite: bool,
}

impl Lane {
    pub fn width(&self) -> f64 {
        if self.direction.x.abs() > 0.5 {
            self.rect.max.y - self.rect.min.y
        } else {
            self.rect.max.x - self.rect.min.x
        }
    }

    /// Start and end of the centerline in travel order.
    pub fn centerline(&self) -> [Vec2; 2] {
        let c = self.rect.center();
        let half_len = if self.direction.x.abs() > 0.5 {
            0.5 * (self.rect.max.x - self.rect.min.x)
        } else {
            0.5 * (self.rect.max.y - self.rect.min.y)
        };
        [c - self.direction * half_len, c + self.direction * half_len]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadMap {
    pub name: String,
    pub lanes: Vec<Lane>,
    pub junctions: Vec<Rect>,
    pub bounds: Rect,
    drivable: Vec<Rect>,
    opposite: Vec<Rect>,
}

/// Names of the maps [`RoadMap::builtin`] knows.
pub const BUILTIN_MAPS: [&str; 3] = ["straight_road", "t_junction", "crossing"];

fn two_way_x(road: usize, x0: f64, x1: f64, lanes_each: usize) -> Vec<Lane> {
    let mut out = Vec::new();
    for k in 0..lanes_each {
        let off = k as f64 * LANE_WIDTH;
        out.push(Lane {
            rect: Rect::new(x0, -off - LANE_WIDTH, x1, -off),
            direction: Vec2::new(1.0, 0.0),
            road,
            is_opposite: false,
        });
        out.push(Lane {
            rect: Rect::new(x0, off, x1, off + LANE_WIDTH),
            direction: Vec2::new(-1.0, 0.0),
            road,
            is_opposite: false,
        });
    }
    out
}

fn two_way_y(road: usize, y0: f64, y1: f64) -> Vec<Lane> {
    vec![
        Lane {
            rect: Rect::new(0.0, y0, LANE_WIDTH, y1),
            direction: Vec2::new(0.0, 1.0),
            road,
            is_opposite: false,
        },
        Lane {
            rect: Rect::new(-LANE_WIDTH, y0, 0.0, y1),
            direction: Vec2::new(0.0, -1.0),
            road,
            is_opposite: false,
        },
    ]
}

impl RoadMap {
    pub fn builtin(name: &str) -> Option<RoadMap> {
        let (lanes, junctions, bounds) = match name {
            "straight_road" => (
                two_way_x(0, -200.0, 200.0, 2),
                vec![],
                Rect::new(-220.0, -30.0, 220.0, 30.0),
            ),
            "t_junction" => {
                let mut lanes = two_way_x(0, -ARM_END, -ARM_START, 1);
                lanes.extend(two_way_x(1, ARM_START, ARM_END, 1));
                lanes.extend(two_way_y(2, -ARM_END, -ARM_START));
                (
                    lanes,
                    vec![Rect::new(-ARM_START, -ARM_START, ARM_START, LANE_WIDTH)],
                    Rect::new(-170.0, -170.0, 170.0, 40.0),
                )
            }
            "crossing" => {
                let mut lanes = two_way_x(0, -ARM_END, -ARM_START, 1);
                lanes.extend(two_way_x(1, ARM_START, ARM_END, 1));
                lanes.extend(two_way_y(2, -ARM_END, -ARM_START));
                lanes.extend(two_way_y(3, ARM_START, ARM_END));
                (
                    lanes,
                    vec![Rect::new(-ARM_START, -ARM_START, ARM_START, ARM_START)],
                    Rect::new(-170.0, -170.0, 170.0, 170.0),
                )
            }
            _ => return None,
        };
        let mut drivable: Vec<Rect> = lanes.iter().map(|l| l.rect).collect();
        drivable.extend(junctions.iter().copied());
        Some(RoadMap {
            name: name.to_string(),
            lanes,
            junctions,
            bounds,
            drivable,
            opposite: Vec::new(),
        })
    }

    /// Flag the lanes that oppose the ego's travel on each road the route uses.
    pub fn mark_opposite(&mut self, route: &Route) {
        let mut used: Vec<(usize, Vec2)> = Vec::new();
        for (p, t) in route.points.iter().zip(&route.tangents) {
            if self.junctions.iter().any(|j| j.contains(*p)) {
                continue;
            }
            if let Some(l) = self
                .lanes
                .iter()
                .find(|l| l.rect.contains(*p) && l.direction.dot(*t) > 0.5)
            {
                if !used.iter().any(|(r, d)| *r == l.road && *d == l.direction) {
                    used.push((l.road, l.direction));
                }
            }
        }
        for lane in &mut self.lanes {
            lane.is_opposite = used
                .iter()
                .any(|(r, d)| *r == lane.road && lane.direction.dot(*d) < -0.5);
        }
        self.opposite = self.lanes.iter().filter(|l| l.is_opposite).map(|l| l.rect).collect();
    }

    pub fn drivable_rects(&self) -> &[Rect] {
        &self.drivable
    }

    pub fn opposite_rects(&self) -> &[Rect] {
        &self.opposite
    }

    pub fn is_drivable(&self, p: Vec2) -> bool {
        self.drivable.iter().any(|r| r.contains(p))
    }

    pub fn in_opposite_lane(&self, p: Vec2) -> bool {
        self.opposite.iter().any(|r| r.contains(p))
    }

    pub fn lane_at(&self, p: Vec2) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.rect.contains(p))
    }

    pub fn in_junction(&self, p: Vec2) -> bool {
        self.junctions.iter().any(|j| j.contains(p))
    }

    pub fn nearest_drivable(&self, p: Vec2) -> Vec2 {
        self.drivable
            .iter()
            .map(|r| r.clamp(p))
            .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
            .unwrap_or(p)
    }
}

/// Densified ego route with arc-length parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub points: Vec<Vec2>,
    /// Unit tangent per point.
    pub tangents: Vec<Vec2>,
    /// Cumulative arc length per point.
    pub arc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteProjection {
    pub index: usize,
    /// Arc length of the projected point.
    pub s: f64,
    pub point: Vec2,
    /// Signed lateral offset, positive to the left of travel.
    pub lateral: f64,
    pub heading: f64,
}

pub const ROUTE_SPACING: f64 = 0.5;

impl Route {
    pub fn from_waypoints(waypoints: &[Vec2]) -> Route {
        let mut points = Vec::new();
        match waypoints {
            [] => points.push(Vec2::ZERO),
            [only] => points.push(*only),
            _ => {
                points.push(waypoints[0]);
                for w in waypoints.windows(2) {
                    let seg = w[1] - w[0];
                    let len = seg.norm();
                    let n = (len / ROUTE_SPACING).ceil().max(1.0) as usize;
                    for k in 1..=n {
                        points.push(w[0] + seg * (k as f64 / n as f64));
                    }
                }
                points.dedup_by(|a, b| a.distance(*b) < 1e-9);
            }
        }
        let mut arc = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += p.distance(points[i - 1]);
            }
            arc.push(acc);
        }
        let tangents = (0..points.len())
            .map(|i| {
                let a = points[i.saturating_sub(1)];
                let b = points[(i + 1).min(points.len() - 1)];
                let t = (b - a).normalized();
                if t == Vec2::ZERO {
                    Vec2::new(1.0, 0.0)
                } else {
                    t
                }
            })
            .collect();
        Route { points, tangents, arc }
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    pub fn index_at(&self, s: f64) -> usize {
        let s = s.clamp(0.0, self.length());
        match self.arc.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i.min(self.points.len() - 1),
        }
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = self.index_at(s);
        if i == 0 {
            return self.points[0];
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let span = self.arc[i] - self.arc[i - 1];
        if span <= 0.0 {
            return b;
        }
        a + (b - a) * ((s - self.arc[i - 1]) / span)
    }

    pub fn point_at_ratio(&self, r: f64) -> Vec2 {
        self.point_at(r.clamp(0.0, 1.0) * self.length())
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.tangents[self.index_at(s)].angle()
    }

    /// Project `p` onto the route, searching segment indices in `[lo, hi)`.
    pub fn project_window(&self, p: Vec2, lo: usize, hi: usize) -> RouteProjection {
        let n = self.points.len();
        if n == 1 {
            let t = self.tangents[0];
            return RouteProjection {
                index: 0,
                s: 0.0,
                point: self.points[0],
                lateral: t.cross(p - self.points[0]),
                heading: t.angle(),
            };
        }
        let hi = hi.min(n - 1).max(lo + 1).min(n - 1);
        let lo = lo.min(hi - 1);
        let mut best = (f64::INFINITY, lo, 0.0);
        for i in lo..hi {
            let d = point_segment_distance(p, self.points[i], self.points[i + 1]);
            if d < best.0 {
                let seg = self.points[i + 1] - self.points[i];
                let len2 = seg.dot(seg);
                let t = if len2 > 0.0 {
                    ((p - self.points[i]).dot(seg) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                best = (d, i, t);
            }
        }
        let (_, i, t) = best;
        let a = self.points[i];
        let seg = self.points[i + 1] - a;
        let point = a + seg * t;
        let tangent = seg.normalized();
        RouteProjection {
            index: i,
            s: self.arc[i] + seg.norm() * t,
            point,
            lateral: tangent.cross(p - point),
            heading: tangent.angle(),
        }
    }

    pub fn project(&self, p: Vec2) -> RouteProjection {
        self.project_window(p, 0, self.points.len())
    }

    /// Largest absolute curvature over `[s0, s1]`, estimated from tangent turn per meter.
    pub fn max_curvature(&self, s0: f64, s1: f64) -> f64 {
        let i0 = self.index_at(s0);
        let i1 = self.index_at(s1).max(i0);
        let mut best: f64 = 0.0;
        // 2 m baseline keeps the estimate smooth at polyline joints
        let step = (2.0 / ROUTE_SPACING) as usize;
        let mut i = i0;
        while i + step <= i1.min(self.points.len() - 1) {
            let dh = wrap_angle(self.tangents[i + step].angle() - self.tangents[i].angle()).abs();
            let ds = self.arc[i + step] - self.arc[i];
            if ds > 0.0 {
                best = best.max(dh / ds);
            }
            i += 1;
        }
        best
    }
}
