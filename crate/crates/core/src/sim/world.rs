//! Agents, the ego controller, and the fixed-step world update.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Obb, Vec2};
use super::map::{RoadMap, Route};
use crate::grammar::{CenterTransform, ScenarioVector, SearchSpaceSchema};

/// Tunable constants of the simulator and the ego controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub dt: f64,
    pub max_steps: usize,
    pub fov_half_deg: f64,
    pub sensing_range: f64,
    pub reaction_delay: f64,
    pub ego_half_extents: [f64; 2],
    pub ego_initial_speed: f64,
    pub max_accel: f64,
    pub max_brake: f64,
    pub cruise_speed: f64,
    /// Deceleration the ego's following rule assumes it can achieve.
    pub assumed_decel: f64,
    pub standoff: f64,
    pub lateral_accel: f64,
    pub wheelbase: f64,
    pub max_steer_deg: f64,
    /// Standard deviation (m) of Gaussian noise on perceived positions.
    pub sensor_noise: f64,
    pub npc_accel: f64,
    pub npc_brake: f64,
    pub pedestrian_accel: f64,
    pub pedestrian_half_extent: f64,
    pub destination_tolerance: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.1,
            max_steps: 500,
            fov_half_deg: 60.0,
            sensing_range: 30.0,
            reaction_delay: 0.3,
            ego_half_extents: [2.4, 1.0],
            ego_initial_speed: 0.0,
            max_accel: 3.0,
            max_brake: 8.0,
            cruise_speed: 7.0,
            assumed_decel: 5.0,
            standoff: 1.0,
            lateral_accel: 2.5,
            wheelbase: 2.8,
            max_steer_deg: 35.0,
            sensor_noise: 0.0,
            npc_accel: 3.0,
            npc_brake: 6.0,
            pedestrian_accel: 3.0,
            pedestrian_half_extent: 0.4,
            destination_tolerance: 2.0,
        }
    }
}

impl SimParams {
    pub fn fov_half(&self) -> f64 {
        self.fov_half_deg.to_radians()
    }

    fn delay_steps(&self) -> usize {
        (self.reaction_delay / self.dt).round() as usize
    }
}

/// Friction multiplier for a weather index: 1.0 down to 0.6 over five wetness levels.
pub fn weather_friction(weather: f64) -> f64 {
    let w = weather.round().max(0.0) as i64;
    1.0 - 0.4 * ((w % 5) as f64 / 4.0)
}

/// Sensing-range multiplier for a weather index: 1.0 down to 0.7 over three visibility levels.
pub fn weather_visibility(weather: f64) -> f64 {
    let w = weather.round().max(0.0) as i64;
    1.0 - 0.3 * (((w / 5) % 3) as f64 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Ego,
    NpcVehicle,
    Pedestrian,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub kind: AgentKind,
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub half_extents: Vec2,
    pub triggered: bool,
    pub distance_traveled_since_trigger: f64,
}

impl AgentState {
    pub fn obb(&self) -> Obb {
        Obb {
            center: self.position,
            heading: self.heading,
            half: self.half_extents,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }
}

#[derive(Debug, Clone, PartialEq)]
struct VehicleBehavior {
    trigger_distance: f64,
    target_speed: f64,
    travel_distance: f64,
    waypoint_follower: bool,
    avoid_collision: bool,
    via: Vec2,
    target: Vec2,
    reached_via: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct PedestrianBehavior {
    trigger_distance: f64,
    target_speed: f64,
    travel_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Behavior {
    Ego,
    Vehicle(VehicleBehavior),
    Pedestrian(PedestrianBehavior),
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub label: String,
    pub state: AgentState,
    /// Spawn point was moved to keep the agent on the map.
    pub spawn_clamped: bool,
    behavior: Behavior,
}

/// Immutable per-run context shared by the world and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub map: RoadMap,
    /// Route as declared in the schema; objectives measure against it.
    pub nominal_route: Route,
    /// Route the controller actually follows (after perturbation fields).
    pub driven_route: Route,
    pub params: SimParams,
    pub friction: f64,
    pub sensing_range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRoadKind {
    Wronglane,
    Offroad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Violation {
    Collision {
        other_kind: AgentKind,
        other_index: usize,
        ego_speed_at_impact: f64,
        bearing_in_fov: bool,
    },
    OutOfRoad {
        sub_kind: OutOfRoadKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Violation,
    DestinationReached,
    Timeout,
}

/// Box contact between the ego and another agent at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub step: usize,
    pub other_index: usize,
    pub ego_speed: f64,
    pub counted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Perceived {
    position: Vec2,
    heading: f64,
    speed: f64,
    half: Vec2,
}

pub struct World {
    pub agents: Vec<Agent>,
    pub step_index: usize,
    pub scene: Arc<Scene>,
    pub events: Vec<ContactEvent>,
    pub violation: Option<Violation>,
    pub termination: Option<Termination>,
    pub warnings: Vec<String>,
    route_index: usize,
    perception: VecDeque<Vec<Perceived>>,
    last_in_fov: Vec<Option<usize>>,
    in_contact: Vec<bool>,
    rng: ChaCha8Rng,
}

struct FieldReader<'a> {
    schema: &'a SearchSpaceSchema,
    v: &'a ScenarioVector,
}

impl FieldReader<'_> {
    fn get(&self, prefix: &str, names: &[&str]) -> Option<f64> {
        names
            .iter()
            .find_map(|n| self.schema.field_index(&format!("{prefix}.{n}")).map(|i| self.v.0[i]))
    }

    fn get_or(&self, prefix: &str, names: &[&str], default: f64) -> f64 {
        self.get(prefix, names).unwrap_or(default)
    }

    fn has_group(&self, prefix: &str) -> bool {
        let p = format!("{prefix}.");
        self.schema.fields.iter().any(|f| f.name.starts_with(&p))
    }

    fn count(&self, field: &str, group: &str) -> usize {
        match self.get("agents", &[field]) {
            Some(n) => n.round().max(0.0) as usize,
            None => (0..64).take_while(|i| self.has_group(&format!("{group}_{i}"))).count(),
        }
    }
}

/// Half extents (length, width) by vehicle model index.
pub fn vehicle_half_extents(model: f64) -> Vec2 {
    let m = model.round().clamp(0.0, 10.0);
    Vec2::new(2.0 + 0.1 * m, 0.9 + 0.03 * m)
}

/// Half extents by static-object type: barrel, box, parked car, and larger.
pub fn static_half_extents(kind: f64) -> Vec2 {
    match kind.round().max(0.0) as i64 {
        0 => Vec2::new(0.4, 0.4),
        1 => Vec2::new(0.8, 0.8),
        2 => Vec2::new(2.3, 1.0),
        _ => Vec2::new(3.0, 1.25),
    }
}

fn anchor(schema: &SearchSpaceSchema, prefix: &str, route: &Route) -> Vec2 {
    match schema.center_for(prefix) {
        CenterTransform::WaypointRatio(r) => route.point_at_ratio(r),
        CenterTransform::Absolute { x, y } => Vec2::new(x, y),
    }
}

fn waypoints(schema: &SearchSpaceSchema) -> Vec<Vec2> {
    schema.ego_route.iter().map(|p| Vec2::new(p[0], p[1])).collect()
}

/// Instantiate the map, routes, and agents a scenario vector describes.
pub fn build_world(schema: &SearchSpaceSchema, v: &ScenarioVector, params: &SimParams, rng_seed: u64) -> World {
    let fields = FieldReader { schema, v };
    let mut warnings = Vec::new();
    let nominal_wp = waypoints(schema);
    let nominal_route = Route::from_waypoints(&nominal_wp);
    let mut driven_wp = nominal_wp.clone();
    for j in 0..driven_wp.len().saturating_sub(1) {
        let prefix = format!("ego.perturbation_{j}");
        let dx = fields.get_or(&prefix, &["x"], 0.0);
        let dy = fields.get_or(&prefix, &["y"], 0.0);
        driven_wp[j + 1] = driven_wp[j + 1] + Vec2::new(dx, dy);
    }
    let driven_route = Route::from_waypoints(&driven_wp);
    let mut map = RoadMap::builtin(&schema.map_id).unwrap_or_else(|| {
        warnings.push(format!("unknown map `{}`, using straight_road", schema.map_id));
        RoadMap::builtin("straight_road").expect("built-in map")
    });
    map.mark_opposite(&nominal_route);

    let road_friction = fields.get_or("background", &["road_friction"], 1.0);
    let weather = fields.get_or("background", &["weather"], 0.0);
    let friction = (road_friction * weather_friction(weather)).max(0.05);
    let sensing_range = params.sensing_range * weather_visibility(weather);

    let ego_heading = driven_route.tangents[0].angle();
    let mut agents = vec![Agent {
        label: "ego".into(),
        state: AgentState {
            kind: AgentKind::Ego,
            position: driven_route.start(),
            heading: ego_heading,
            speed: params.ego_initial_speed.max(0.0),
            half_extents: Vec2::new(params.ego_half_extents[0], params.ego_half_extents[1]),
            triggered: false,
            distance_traveled_since_trigger: 0.0,
        },
        spawn_clamped: false,
        behavior: Behavior::Ego,
    }];

    for i in 0..fields.count("num_pedestrians", "pedestrian") {
        let prefix = format!("pedestrian_{i}");
        let setup = format!("{prefix}.setup");
        let trig = format!("{prefix}.trigger_event");
        let center = anchor(schema, &prefix, &nominal_route);
        let raw = center
            + Vec2::new(
                fields.get_or(&setup, &["location.x"], 0.0),
                fields.get_or(&setup, &["location.y"], 0.0),
            );
        let position = map.bounds.clamp(raw);
        let clamped = position != raw;
        if clamped {
            warnings.push(format!("{prefix} spawn clamped to map bounds"));
        }
        let half = params.pedestrian_half_extent;
        agents.push(Agent {
            label: prefix.clone(),
            state: AgentState {
                kind: AgentKind::Pedestrian,
                position,
                heading: fields.get_or(&setup, &["yaw", "direction"], 0.0).to_radians(),
                speed: 0.0,
                half_extents: Vec2::new(half, half),
                triggered: false,
                distance_traveled_since_trigger: 0.0,
            },
            spawn_clamped: clamped,
            behavior: Behavior::Pedestrian(PedestrianBehavior {
                trigger_distance: fields.get_or(&trig, &["trigger_distance"], 0.0),
                target_speed: fields.get_or(&trig, &["target_speed"], 0.0).max(0.0),
                travel_distance: fields
                    .get_or(&trig, &["travel_distance", "distance_to_travel"], 0.0)
                    .max(0.0),
            }),
        });
    }

    for i in 0..fields.count("num_vehicles", "vehicle") {
        let prefix = format!("vehicle_{i}");
        let setup = format!("{prefix}.setup");
        let trig = format!("{prefix}.trigger_event");
        let center = anchor(schema, &prefix, &nominal_route);
        let raw = center
            + Vec2::new(
                fields.get_or(&setup, &["location.x"], 0.0),
                fields.get_or(&setup, &["location.y"], 0.0),
            );
        let clamped = !map.is_drivable(raw);
        let position = if clamped {
            warnings.push(format!("{prefix} spawn moved to nearest drivable point"));
            map.nearest_drivable(raw)
        } else {
            raw
        };
        let mut heading = fields.get_or(&setup, &["yaw", "direction"], 0.0).to_radians();
        if !map.in_junction(position) {
            if let Some(lane) = map.lane_at(position) {
                heading = lane.direction.angle();
            }
        }
        let target = center
            + Vec2::new(
                fields.get_or(&trig, &["target.x"], 0.0),
                fields.get_or(&trig, &["target.y"], 0.0),
            );
        let target_heading = fields.get_or(&trig, &["target.yaw", "target.direction"], 0.0);
        let via = target - Vec2::from_angle(target_heading.to_radians()) * 4.0;
        agents.push(Agent {
            label: prefix.clone(),
            state: AgentState {
                kind: AgentKind::NpcVehicle,
                position,
                heading,
                speed: fields.get_or(&setup, &["initial_speed"], 0.0).max(0.0),
                half_extents: vehicle_half_extents(fields.get_or(&setup, &["type", "model"], 0.0)),
                triggered: false,
                distance_traveled_since_trigger: 0.0,
            },
            spawn_clamped: clamped,
            behavior: Behavior::Vehicle(VehicleBehavior {
                trigger_distance: fields.get_or(&trig, &["trigger_distance"], 0.0),
                target_speed: fields.get_or(&trig, &["target_speed"], 0.0).max(0.0),
                travel_distance: fields
                    .get_or(&trig, &["travel_distance", "distance_to_travel"], 0.0)
                    .max(0.0),
                waypoint_follower: fields.get_or(&trig, &["waypoint_follower"], 0.0) >= 0.5,
                avoid_collision: fields.get_or(&trig, &["avoid_collision"], 0.0) >= 0.5,
                via,
                target,
                reached_via: false,
            }),
        });
    }

    for i in 0..fields.count("num_static", "static") {
        let prefix = format!("static_{i}");
        let setup = format!("{prefix}.setup");
        let center = anchor(schema, &prefix, &nominal_route);
        let raw = center
            + Vec2::new(
                fields.get_or(&setup, &["location.x"], 0.0),
                fields.get_or(&setup, &["location.y"], 0.0),
            );
        let position = map.bounds.clamp(raw);
        let clamped = position != raw;
        if clamped {
            warnings.push(format!("{prefix} spawn clamped to map bounds"));
        }
        agents.push(Agent {
            label: prefix.clone(),
            state: AgentState {
                kind: AgentKind::Static,
                position,
                heading: fields.get_or(&setup, &["yaw", "direction"], 0.0).to_radians(),
                speed: 0.0,
                half_extents: static_half_extents(fields.get_or(&setup, &["type"], 0.0)),
                triggered: false,
                distance_traveled_since_trigger: 0.0,
            },
            spawn_clamped: clamped,
            behavior: Behavior::Static,
        });
    }

    let n = agents.len();
    let scene = Scene {
        map,
        nominal_route,
        driven_route,
        params: params.clone(),
        friction,
        sensing_range,
    };
    World {
        agents,
        step_index: 0,
        scene: Arc::new(scene),
        events: Vec::new(),
        violation: None,
        termination: None,
        warnings,
        route_index: 0,
        perception: VecDeque::new(),
        last_in_fov: vec![None; n],
        in_contact: vec![false; n],
        rng: ChaCha8Rng::seed_from_u64(rng_seed),
    }
}

fn approach(current: f64, target: f64, up: f64, down: f64, dt: f64) -> f64 {
    if target > current {
        (current + up * dt).min(target)
    } else {
        (current - down * dt).max(target)
    }
}

impl World {
    pub fn ego(&self) -> &AgentState {
        &self.agents[0].state
    }

    pub fn states(&self) -> Vec<AgentState> {
        self.agents.iter().map(|a| a.state.clone()).collect()
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    fn bearing_offset(ego: &AgentState, p: Vec2) -> f64 {
        wrap_angle((p - ego.position).angle() - ego.heading).abs()
    }

    fn sense(&mut self) -> Vec<Perceived> {
        let scene = Arc::clone(&self.scene);
        let fov = scene.params.fov_half();
        let noise = scene.params.sensor_noise;
        let ego = self.agents[0].state.clone();
        let mut out = Vec::new();
        for a in &self.agents[1..] {
            let s = &a.state;
            if s.position.distance(ego.position) > scene.sensing_range || Self::bearing_offset(&ego, s.position) > fov {
                continue;
            }
            let mut position = s.position;
            if noise > 0.0 {
                let n = Normal::new(0.0, noise).expect("finite noise");
                position = position + Vec2::new(n.sample(&mut self.rng), n.sample(&mut self.rng));
            }
            out.push(Perceived {
                position,
                heading: s.heading,
                speed: s.speed,
                half: s.half_extents,
            });
        }
        out
    }

    /// Longitudinal acceleration and steering angle for the ego.
    fn ego_command(&mut self, perceived: &[Perceived]) -> (f64, f64) {
        let scene = Arc::clone(&self.scene);
        let p = &scene.params;
        let route = &scene.driven_route;
        let ego = self.agents[0].state.clone();
        let lo = self.route_index.saturating_sub(10);
        let proj = route.project_window(ego.position, lo, self.route_index + 40);
        self.route_index = proj.index;

        let max_brake = p.max_brake * scene.friction;
        let lookahead_s = proj.s + 3.0 + ego.speed * ego.speed / (2.0 * p.max_accel) + 12.0;
        let kappa = route.max_curvature(proj.s, lookahead_s);
        let mut v_target = p.cruise_speed;
        if kappa > 1e-6 {
            v_target = v_target.min((p.lateral_accel / kappa).sqrt());
        }
        // stop at the end of the route
        let remaining = (route.length() - proj.s).max(0.0);
        v_target = v_target.min((2.0 * p.assumed_decel * remaining).sqrt());

        let mut hazard = false;
        let horizon_idx = route.index_at(proj.s + scene.sensing_range + 5.0) + 1;
        for obj in perceived {
            let op = route.project_window(obj.position, proj.index, horizon_idx);
            if op.s <= proj.s {
                continue;
            }
            let rel = wrap_angle(obj.heading - op.heading);
            let obj_lat = obj.half.x * rel.sin().abs() + obj.half.y * rel.cos().abs();
            let obj_lon = obj.half.x * rel.cos().abs() + obj.half.y * rel.sin().abs();
            if op.lateral.abs() > ego.half_extents.y + obj_lat + 0.3 {
                continue;
            }
            let gap = op.s - proj.s - ego.half_extents.x - obj_lon - p.standoff;
            let along = (obj.speed * rel.cos()).max(0.0);
            let v_safe = (along * along + 2.0 * p.assumed_decel * gap.max(0.0)).sqrt();
            if gap <= 0.0 {
                v_target = 0.0;
                hazard = true;
            } else if v_safe < v_target {
                v_target = v_safe;
                hazard |= ego.speed > v_safe;
            }
        }

        let accel = if hazard {
            -max_brake
        } else {
            (1.5 * (v_target - ego.speed)).clamp(-max_brake, p.max_accel)
        };

        let ld = 3.0 + 0.4 * ego.speed;
        let goal = route.point_at(proj.s + ld);
        let alpha = wrap_angle((goal - ego.position).angle() - ego.heading);
        let max_steer = p.max_steer_deg.to_radians();
        let steer = (2.0 * p.wheelbase * alpha.sin() / ld)
            .atan()
            .clamp(-max_steer, max_steer);
        (accel, steer)
    }

    fn update_npcs(&mut self) {
        let scene = Arc::clone(&self.scene);
        let p = &scene.params;
        let dt = p.dt;
        let ego = self.agents[0].state.clone();
        for agent in self.agents.iter_mut().skip(1) {
            let state = &mut agent.state;
            match &mut agent.behavior {
                Behavior::Ego | Behavior::Static => {}
                Behavior::Pedestrian(b) => {
                    if !state.triggered && state.position.distance(ego.position) <= b.trigger_distance {
                        state.triggered = true;
                    }
                    let target = if state.triggered && state.distance_traveled_since_trigger < b.travel_distance {
                        b.target_speed
                    } else {
                        0.0
                    };
                    state.speed = approach(state.speed, target, p.pedestrian_accel, p.pedestrian_accel, dt);
                }
                Behavior::Vehicle(b) => {
                    if !state.triggered && state.position.distance(ego.position) <= b.trigger_distance {
                        state.triggered = true;
                    }
                    let mut target = state.speed;
                    if state.triggered {
                        target = if state.distance_traveled_since_trigger < b.travel_distance {
                            b.target_speed
                        } else {
                            0.0
                        };
                        if b.waypoint_follower {
                            if !b.reached_via && state.position.distance(b.via) < 1.0 {
                                b.reached_via = true;
                            }
                            let aim = if b.reached_via { b.target } else { b.via };
                            if b.reached_via && state.position.distance(b.target) < 1.0 {
                                target = 0.0;
                            } else {
                                let want = (aim - state.position).angle();
                                let max_turn = if state.speed > 0.0 {
                                    state.speed * (p.max_steer_deg.to_radians()).tan() / p.wheelbase * dt
                                } else {
                                    0.0
                                };
                                let d = wrap_angle(want - state.heading).clamp(-max_turn, max_turn);
                                state.heading = wrap_angle(state.heading + d);
                            }
                        }
                    }
                    if b.avoid_collision && predicts_overlap(state, &ego, 1.0, dt) {
                        target = 0.0;
                    }
                    state.speed = approach(state.speed, target, p.npc_accel, p.npc_brake, dt);
                }
            }
        }
    }

    /// Advance the world by one fixed step.
    pub fn step(&mut self) {
        if self.is_done() {
            return;
        }
        let scene = Arc::clone(&self.scene);
        let p = &scene.params;
        let dt = p.dt;

        let snapshot = self.sense();
        self.perception.push_back(snapshot);
        while self.perception.len() > p.delay_steps() + 1 {
            self.perception.pop_front();
        }
        let delayed = if self.perception.len() > p.delay_steps() {
            self.perception.front().cloned().unwrap_or_default()
        } else {
            Vec::new()
        };
        let (accel, steer) = self.ego_command(&delayed);
        self.update_npcs();

        {
            let ego = &mut self.agents[0].state;
            let v0 = ego.speed;
            ego.speed = (v0 + accel * dt).max(0.0);
            let v = 0.5 * (v0 + ego.speed);
            let mut kappa = steer.tan() / p.wheelbase;
            if v > 0.1 {
                let grip = scene.friction * 9.81 * 0.8 / (v * v);
                kappa = kappa.clamp(-grip, grip);
            }
            ego.heading = wrap_angle(ego.heading + v * kappa * dt);
            ego.position = ego.position + Vec2::from_angle(ego.heading) * (v * dt);
        }
        for agent in self.agents.iter_mut().skip(1) {
            let s = &mut agent.state;
            if s.kind == AgentKind::Static {
                continue;
            }
            let d = s.speed * dt;
            s.position = s.position + Vec2::from_angle(s.heading) * d;
            if s.triggered {
                s.distance_traveled_since_trigger += d;
            }
        }
        self.step_index += 1;
        self.judge();
    }

    fn judge(&mut self) {
        let scene = Arc::clone(&self.scene);
        let fov = scene.params.fov_half();
        let ego = self.agents[0].state.clone();
        let ego_box = ego.obb();
        for i in 1..self.agents.len() {
            let other = &self.agents[i].state;
            if Self::bearing_offset(&ego, other.position) <= fov {
                self.last_in_fov[i] = Some(self.step_index);
            }
            if !ego_box.overlaps(&other.obb()) {
                self.in_contact[i] = false;
                continue;
            }
            let recent_fov =
                self.last_in_fov[i].is_some_and(|s| self.step_index - s < (1.0 / scene.params.dt).round() as usize);
            let counted = !self.in_contact[i] && ego.speed > 0.05 && recent_fov && self.violation.is_none();
            self.events.push(ContactEvent {
                step: self.step_index,
                other_index: i,
                ego_speed: ego.speed,
                counted,
            });
            self.in_contact[i] = true;
            if counted {
                self.violation = Some(Violation::Collision {
                    other_kind: other.kind,
                    other_index: i,
                    ego_speed_at_impact: ego.speed,
                    bearing_in_fov: true,
                });
            }
        }
        if self.violation.is_none() {
            if scene.map.in_opposite_lane(ego.position) {
                self.violation = Some(Violation::OutOfRoad {
                    sub_kind: OutOfRoadKind::Wronglane,
                });
            } else if !scene.map.is_drivable(ego.position) {
                self.violation = Some(Violation::OutOfRoad {
                    sub_kind: OutOfRoadKind::Offroad,
                });
            }
        }
        if self.violation.is_some() {
            self.termination = Some(Termination::Violation);
            return;
        }
        let route = &scene.driven_route;
        let proj = route.project_window(ego.position, self.route_index.saturating_sub(10), self.route_index + 40);
        if ego.position.distance(route.end()) <= scene.params.destination_tolerance || proj.s >= route.length() - 1.0 {
            self.termination = Some(Termination::DestinationReached);
        } else if self.step_index >= scene.params.max_steps {
            self.termination = Some(Termination::Timeout);
        }
    }
}

/// Whether `npc` and `ego`, extrapolated at constant velocity, overlap within `horizon` seconds.
fn predicts_overlap(npc: &AgentState, ego: &AgentState, horizon: f64, dt: f64) -> bool {
    let steps = (horizon / dt).round() as usize;
    let (vn, ve) = (npc.velocity(), ego.velocity());
    (1..=steps).any(|k| {
        let t = k as f64 * dt;
        let a = Obb {
            center: npc.position + vn * t,
            ..npc.obb()
        };
        let b = Obb {
            center: ego.position + ve * t,
            ..ego.obb()
        };
        a.overlaps(&b)
    })
}
