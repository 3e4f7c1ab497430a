mod common;

use common::{constraint, continuous, discrete};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenfuzz_core::grammar::{
    parse_schema, FieldKind, FieldSpec, GrammarError, LinearConstraint, ScenarioVector, SearchSpaceSchema,
};

fn field_strategy(i: usize) -> impl Strategy<Value = FieldSpec> {
    (any::<bool>(), -50i32..50, 0i32..30).prop_map(move |(is_discrete, lo, width)| {
        let (lo, hi) = (lo as f64, (lo + width) as f64);
        let name = format!("g.f{i}");
        if is_discrete {
            discrete(&name, lo, hi)
        } else {
            continuous(&name, lo + 0.25, hi + 0.75)
        }
    })
}

/// Random schema whose constraints are built to hold at the box midpoint
/// (rounded for discrete fields), so the feasible set is never empty.
fn schema_strategy() -> impl Strategy<Value = SearchSpaceSchema> {
    (1usize..7)
        .prop_flat_map(|k| {
            let fields: Vec<_> = (0..k).map(field_strategy).collect();
            let rows = prop::collection::vec((prop::collection::vec(-2.0f64..2.0, k), 0.0f64..5.0), 0..4);
            (fields, rows)
        })
        .prop_map(|(fields, rows)| {
            let mid: Vec<f64> = fields
                .iter()
                .map(|f| {
                    let m = 0.5 * (f.min + f.max);
                    if f.kind == FieldKind::Discrete {
                        m.round()
                    } else {
                        m
                    }
                })
                .collect();
            let labels: Vec<String> = fields.iter().map(|f| f.name.clone()).collect();
            let constraints = rows
                .into_iter()
                .map(|(coef, margin)| {
                    let at_mid: f64 = coef.iter().zip(&mid).map(|(c, m)| c * m).sum();
                    LinearConstraint {
                        coefficients: coef,
                        labels: labels.clone(),
                        value: at_mid + margin,
                        indices: Vec::new(),
                    }
                })
                .collect();
            SearchSpaceSchema::new(fields, constraints, "straight_road", vec![[0.0, 0.0], [1.0, 0.0]]).unwrap()
        })
}

fn affine_oracle(schema: &SearchSpaceSchema, v: &ScenarioVector) -> Vec<usize> {
    schema
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let mut lhs = 0.0;
            for (coef, label) in c.coefficients.iter().zip(&c.labels) {
                let i = schema.fields.iter().position(|f| &f.name == label).unwrap();
                lhs += coef * v.0[i];
            }
            lhs > c.value + 1e-9
        })
        .map(|(j, _)| j)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sampled_vectors_are_feasible(schema in schema_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Ok(v) = schema.sample(&mut rng, 5000) else {
            // a thin feasible set may defeat rejection sampling; that is an error, not bad output
            return Ok(());
        };
        prop_assert!(schema.in_bounds(&v));
        prop_assert!(schema.check_constraints(&v).is_empty());
        for (f, x) in schema.fields.iter().zip(&v.0) {
            if f.kind == FieldKind::Discrete {
                prop_assert_eq!(x.fract(), 0.0);
            }
        }
    }

    #[test]
    fn normalize_round_trips(schema in schema_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = ScenarioVector(schema.fields.iter().map(|f| rng.random_range(f.min..=f.max)).collect());
        let unit = schema.normalize(&v);
        prop_assert!(unit.iter().all(|u| (0.0..=1.0).contains(u)));
        let back = schema.denormalize(&unit);
        for (f, (a, b)) in schema.fields.iter().zip(v.0.iter().zip(&back.0)) {
            if f.kind == FieldKind::Continuous {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn check_constraints_matches_affine_oracle(schema in schema_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let v = ScenarioVector(schema.fields.iter().map(|f| rng.random_range(f.min..=f.max)).collect());
            let got: Vec<usize> = schema.check_constraints(&v).iter().map(|c| c.index).collect();
            prop_assert_eq!(got, affine_oracle(&schema, &v));
        }
    }

    #[test]
    fn changeable_count_matches_bounds(schema in schema_strategy()) {
        let expected = schema.fields.iter().filter(|f| f.max > f.min).count();
        prop_assert_eq!(schema.changeable_count(), expected);
    }
}

const SPEED_PAIR: &str = r#"{
    "map_id": "straight_road",
    "ego_route": [[-60, -1.75], [60, -1.75]],
    "vehicle_0": {"trigger_event": {"target_speed": [0, 10]}},
    "vehicle_1": {"trigger_event": {"target_speed": [0, 10]}},
    "pedestrian_0": {"setup": {"location": {"x": [-123, -83, ["normal", null, 10]]}}},
    "customized_constraints": [
        {"coefficients": [1, -0.5],
         "labels": ["vehicle_0.trigger_event.target_speed", "vehicle_1.trigger_event.target_speed"],
         "value": 0}
    ]
}"#;

#[test]
fn listing_style_document_parses() {
    let s = parse_schema(SPEED_PAIR).unwrap();
    assert_eq!(s.dim(), 3);
    let x = &s.fields[2];
    assert_eq!(x.name, "pedestrian_0.setup.location.x");
    assert_eq!((x.min, x.max), (-123.0, -83.0));
    assert_eq!(x.effective_mean(), -103.0);
    let c = &s.constraints[0];
    assert_eq!(c.coefficients, vec![1.0, -0.5]);
    assert_eq!(c.value, 0.0);
}

#[test]
fn constraint_holds_on_ten_thousand_samples() {
    let s = parse_schema(SPEED_PAIR).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let v = s.sample(&mut rng, 1000).unwrap();
        assert!(v.0[0] - 0.5 * v.0[1] <= 1e-9);
        assert!((-123.0..=-83.0).contains(&v.0[2]));
    }
}

#[test]
fn hand_evaluated_slack() {
    let s = parse_schema(SPEED_PAIR).unwrap();
    let v = ScenarioVector(vec![2.0, 2.0, -100.0]);
    let violated = s.check_constraints(&v);
    assert_eq!(violated.len(), 1);
    assert!((violated[0].slack - 1.0).abs() < 1e-12);
}

#[test]
fn empty_feasible_set_is_an_error() {
    let s = SearchSpaceSchema::new(
        vec![continuous("a.x", 0.0, 10.0)],
        vec![constraint(&[1.0], &["a.x"], -1.0)],
        "straight_road",
        vec![[0.0, 0.0], [1.0, 0.0]],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        s.sample(&mut rng, 50),
        Err(GrammarError::ConstraintUnsatisfiable { attempts: 50 })
    ));
}

#[test]
fn malformed_documents_are_rejected() {
    assert!(matches!(
        parse_schema(r#"{"a": {"x": [5, 1]}}"#),
        Err(GrammarError::MalformedRange { .. })
    ));
    assert!(matches!(
        parse_schema(r#"{"a": {"n": {"discrete": [0.5, 3]}}}"#),
        Err(GrammarError::NonIntegerDiscrete { .. })
    ));
    assert!(matches!(
        parse_schema(
            r#"{"a": {"x": [0, 1]}, "customized_constraints": [{"coefficients": [1], "labels": ["a.y"], "value": 0}]}"#
        ),
        Err(GrammarError::UnknownLabel { .. })
    ));
    assert!(matches!(parse_schema("{not json"), Err(GrammarError::Json(_))));
}

#[test]
fn fixtures_parse_and_sample() {
    for text in [
        common::LEAD_VEHICLE_JUNCTION,
        common::TURN_LEFT_T_JUNCTION,
        common::STATIC_OBSTACLE_STRAIGHT,
    ] {
        let s = parse_schema(text).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert!(s.is_feasible(&s.sample(&mut rng, 1000).unwrap()));
        }
    }
    assert_eq!(parse_schema(common::LEAD_VEHICLE_JUNCTION).unwrap().dim(), 26);
}
