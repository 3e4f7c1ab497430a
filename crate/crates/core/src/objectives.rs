//! Objective values computed from a simulation trace, and the scalar fitness.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::sim::geometry::{ray_entry_distance, ray_exit_distance, wrap_angle, Vec2};
use crate::sim::{AgentState, RoadMap, SimulationOutcome, Violation};

/// Cap on directional road-region distances.
pub const REGION_DISTANCE_CAP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    OutOfRoad,
}

impl From<&Violation> for ViolationKind {
    fn from(v: &Violation) -> Self {
        match v {
            Violation::Collision { .. } => ViolationKind::Collision,
            Violation::OutOfRoad { .. } => ViolationKind::OutOfRoad,
        }
    }
}

/// Which objective triple drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationMode {
    #[default]
    Collision,
    OutOfRoad,
}

impl ViolationMode {
    pub fn kind(self) -> ViolationKind {
        match self {
            ViolationMode::Collision => ViolationKind::Collision,
            ViolationMode::OutOfRoad => ViolationKind::OutOfRoad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Ego speed at a counted collision, or -1.
    pub f_collision: f64,
    pub f_object: f64,
    pub f_view: f64,
    pub f_wronglane: f64,
    pub f_offroad: f64,
    pub f_deviation: f64,
    pub violation_kind: Option<ViolationKind>,
}

impl ObjectiveVector {
    /// The sign-folded triple for `mode`; lower means closer to a violation.
    pub fn folded(&self, mode: ViolationMode) -> [f64; 3] {
        match mode {
            ViolationMode::Collision => [-self.f_collision, self.f_object, self.f_view],
            ViolationMode::OutOfRoad => [self.f_wronglane, self.f_offroad, -self.f_deviation],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitnessWeights(pub [f64; 3]);

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights([1.0, 1.0, 1.0])
    }
}

impl FitnessWeights {
    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|w| w.is_finite()) && self.0.iter().any(|&w| w != 0.0)
    }
}

pub fn fitness(obj: &ObjectiveVector, weights: &FitnessWeights, mode: ViolationMode) -> f64 {
    obj.folded(mode).iter().zip(&weights.0).map(|(g, w)| g * w).sum()
}

fn nearest_other(ego: &AgentState, others: &[AgentState]) -> Option<(f64, Vec2)> {
    let eb = ego.obb();
    others
        .iter()
        .map(|o| (eb.distance(&o.obb()), o.position))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Evaluate all six objectives over the trace of `outcome`.
pub fn compute_objectives(outcome: &SimulationOutcome, map: &RoadMap) -> ObjectiveVector {
    let scene = &outcome.scene;
    let fov = scene.params.fov_half();
    let route = &scene.nominal_route;
    let drivable = map.drivable_rects();
    let opposite = map.opposite_rects();

    let mut f_object = f64::INFINITY;
    let mut f_view = fov;
    let mut f_wronglane = REGION_DISTANCE_CAP;
    let mut f_offroad = REGION_DISTANCE_CAP;
    let mut f_deviation: f64 = 0.0;
    let mut idx: usize = 0;

    for step in &outcome.trace {
        let (ego, others) = step.split_first().expect("trace steps contain the ego");
        if let Some((d, p)) = nearest_other(ego, others) {
            f_object = f_object.min(d);
            let bearing = wrap_angle((p - ego.position).angle() - ego.heading).abs();
            f_view = f_view.min(bearing.min(fov));
        }

        let proj = route.project_window(ego.position, idx.saturating_sub(10), idx + 40);
        idx = proj.index;
        let dirs = [
            ego.heading,
            ego.heading + FRAC_PI_2,
            ego.heading - FRAC_PI_2,
            proj.heading + FRAC_PI_2,
            proj.heading - FRAC_PI_2,
        ];
        for theta in dirs {
            let dir = Vec2::from_angle(theta);
            if !opposite.is_empty() {
                let d = if map.in_opposite_lane(ego.position) {
                    0.0
                } else {
                    ray_entry_distance(opposite, ego.position, dir, REGION_DISTANCE_CAP)
                };
                f_wronglane = f_wronglane.min(d);
            }
            f_offroad = f_offroad.min(ray_exit_distance(drivable, ego.position, dir, REGION_DISTANCE_CAP));
        }

        let theta = wrap_angle(ego.heading - proj.heading).abs();
        f_deviation = f_deviation.max(theta * proj.lateral.abs());
    }

    let (f_collision, violation_kind) = match &outcome.violation {
        Some(
            v @ Violation::Collision {
                ego_speed_at_impact, ..
            },
        ) => (*ego_speed_at_impact, Some(ViolationKind::from(v))),
        Some(v) => (-1.0, Some(ViolationKind::from(v))),
        None => (-1.0, None),
    };
    if !f_object.is_finite() {
        f_object = REGION_DISTANCE_CAP;
    }
    ObjectiveVector {
        f_collision,
        f_object,
        f_view,
        f_wronglane,
        f_offroad,
        f_deviation,
        violation_kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(f_collision: f64, f_object: f64, f_view: f64) -> ObjectiveVector {
        ObjectiveVector {
            f_collision,
            f_object,
            f_view,
            f_wronglane: 3.0,
            f_offroad: 2.0,
            f_deviation: 0.5,
            violation_kind: None,
        }
    }

    #[test]
    fn single_weight_projects() {
        let o = obj(-1.0, 4.2, 0.3);
        let w = FitnessWeights([0.0, 1.0, 0.0]);
        assert_eq!(fitness(&o, &w, ViolationMode::Collision), 4.2);
    }

    #[test]
    fn collision_fitness_hand_value() {
        let o = obj(5.0, 0.0, 0.0);
        assert_eq!(fitness(&o, &FitnessWeights::default(), ViolationMode::Collision), -5.0);
    }

    #[test]
    fn out_of_road_triple() {
        let o = obj(-1.0, 1.0, 1.0);
        let f = fitness(&o, &FitnessWeights::default(), ViolationMode::OutOfRoad);
        assert!((f - (3.0 + 2.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(!FitnessWeights([0.0; 3]).is_valid());
        assert!(!FitnessWeights([f64::NAN, 1.0, 1.0]).is_valid());
        assert!(FitnessWeights::default().is_valid());
    }
}
