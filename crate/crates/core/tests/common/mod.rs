#![allow(dead_code)]

use std::sync::Arc;

use scenfuzz_core::grammar::{
    parse_schema, FieldDistribution, FieldKind, FieldSpec, LinearConstraint, SearchSpaceSchema,
};

pub const LEAD_VEHICLE_JUNCTION: &str = include_str!("../../fixtures/lead_vehicle_junction.json");
pub const TURN_LEFT_T_JUNCTION: &str = include_str!("../../fixtures/turn_left_t_junction.json");
pub const STATIC_OBSTACLE_STRAIGHT: &str = include_str!("../../fixtures/static_obstacle_straight.json");

pub fn fixture(text: &str) -> Arc<SearchSpaceSchema> {
    Arc::new(parse_schema(text).expect("fixture parses"))
}

pub fn continuous(name: &str, min: f64, max: f64) -> FieldSpec {
    FieldSpec {
        name: name.into(),
        kind: FieldKind::Continuous,
        min,
        max,
        distribution: FieldDistribution::Uniform,
    }
}

pub fn discrete(name: &str, min: f64, max: f64) -> FieldSpec {
    FieldSpec {
        kind: FieldKind::Discrete,
        ..continuous(name, min, max)
    }
}

pub fn constraint(coefficients: &[f64], labels: &[&str], value: f64) -> LinearConstraint {
    LinearConstraint {
        coefficients: coefficients.to_vec(),
        labels: labels.iter().map(|s| s.to_string()).collect(),
        value,
        indices: Vec::new(),
    }
}

/// `k` continuous fields on [0, 1] named `f0..`, no constraints.
pub fn unit_box(k: usize) -> Arc<SearchSpaceSchema> {
    let fields = (0..k).map(|i| continuous(&format!("f{i}"), 0.0, 1.0)).collect();
    Arc::new(SearchSpaceSchema::new(fields, Vec::new(), "straight_road", vec![[-60.0, -1.75], [60.0, -1.75]]).unwrap())
}
