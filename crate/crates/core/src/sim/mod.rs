//! Deterministic 2D kinematic traffic simulator used as the system under test.

pub mod geometry;
pub mod map;
pub mod world;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::grammar::{ScenarioVector, SearchSpaceSchema};
pub use geometry::{Obb, Rect, Vec2};
pub use map::{Lane, RoadMap, Route, BUILTIN_MAPS};
pub use world::{
    build_world, AgentKind, AgentState, ContactEvent, OutOfRoadKind, Scene, SimParams, Termination, Violation, World,
};

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutcome {
    pub labels: Vec<String>,
    /// Agent states per step, starting with the initial state.
    pub trace: Vec<Vec<AgentState>>,
    pub violation: Option<Violation>,
    pub termination: Termination,
    pub steps: usize,
    pub events: Vec<ContactEvent>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub scene: Arc<Scene>,
}

impl SimulationOutcome {
    pub fn ego_trace(&self) -> impl Iterator<Item = &AgentState> {
        self.trace.iter().map(|s| &s[0])
    }

    pub fn trace_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// `step,time,x,y,heading,speed` rows of the ego path.
    pub fn ego_path_csv(&self) -> String {
        let dt = self.scene.params.dt;
        let mut out = String::from("step,time,x,y,heading,speed\n");
        for (i, e) in self.ego_trace().enumerate() {
            let _ = writeln!(
                out,
                "{i},{:.1},{},{},{},{}",
                i as f64 * dt,
                e.position.x,
                e.position.y,
                e.heading,
                e.speed
            );
        }
        out
    }
}

/// Simulate until a violation, arrival, or `params.max_steps`.
pub fn run_with(
    schema: &SearchSpaceSchema,
    v: &ScenarioVector,
    params: &SimParams,
    rng_seed: u64,
) -> SimulationOutcome {
    let mut world = build_world(schema, v, params, rng_seed);
    let mut trace = Vec::with_capacity(params.max_steps + 1);
    trace.push(world.states());
    if params.max_steps == 0 {
        world.termination = Some(Termination::Timeout);
    }
    while !world.is_done() {
        world.step();
        trace.push(world.states());
    }
    SimulationOutcome {
        labels: world.agents.iter().map(|a| a.label.clone()).collect(),
        trace,
        violation: world.violation.clone(),
        termination: world.termination.expect("loop ends with a termination"),
        steps: world.step_index,
        events: std::mem::take(&mut world.events),
        warnings: std::mem::take(&mut world.warnings),
        scene: Arc::clone(&world.scene),
    }
}

/// Simulate with default parameters and the given step cap.
pub fn run(schema: &SearchSpaceSchema, v: &ScenarioVector, max_steps: usize, rng_seed: u64) -> SimulationOutcome {
    let params = SimParams {
        max_steps,
        ..SimParams::default()
    };
    run_with(schema, v, &params, rng_seed)
}
