mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenfuzz_core::dedup::{filter_similar, ArchiveEntry, UniquenessParams, ViolationArchive};
use scenfuzz_core::grammar::{FieldKind, ScenarioVector, SearchSpaceSchema};
use scenfuzz_core::objectives::{ObjectiveVector, ViolationKind};
use std::sync::Arc;

fn entry(v: Vec<f64>, kind: ViolationKind) -> ArchiveEntry {
    ArchiveEntry {
        vector: ScenarioVector(v),
        kind,
        objectives: ObjectiveVector {
            f_collision: 1.0,
            f_object: 0.0,
            f_view: 0.0,
            f_wronglane: 1.0,
            f_offroad: 1.0,
            f_deviation: 0.0,
            violation_kind: Some(kind),
        },
        generation: 0,
    }
}

/// Direct restatement of the distinctness rule, written independently of the library.
fn distinct_oracle(a: &[f64], b: &[f64], schema: &SearchSpaceSchema, th1: f64, th2: f64) -> bool {
    let mut changeable = 0usize;
    let mut differ = 0usize;
    for (f, (x, y)) in schema.fields.iter().zip(a.iter().zip(b)) {
        if f.max <= f.min {
            continue;
        }
        changeable += 1;
        let d = match f.kind {
            FieldKind::Discrete => x != y,
            FieldKind::Continuous => (x - y).abs() / (f.max - f.min) * 100.0 >= th2,
        };
        differ += usize::from(d);
    }
    // smallest integer count that reaches th1 percent, at least one
    let mut need = 1;
    while (need as f64) * 100.0 < th1 * changeable as f64 - 1e-6 {
        need += 1;
    }
    differ >= need
}

fn mixed_schema() -> Arc<SearchSpaceSchema> {
    let mut fields: Vec<_> = (0..6)
        .map(|i| common::continuous(&format!("c{i}"), -5.0, 5.0))
        .collect();
    fields.push(common::discrete("d0", 0.0, 2.0));
    fields.push(common::discrete("d1", 0.0, 1.0));
    fields.push(common::continuous("fixed", 3.0, 3.0));
    Arc::new(SearchSpaceSchema::new(fields, vec![], "straight_road", vec![[0.0, 0.0], [1.0, 0.0]]).unwrap())
}

fn random_vector(schema: &SearchSpaceSchema, rng: &mut ChaCha8Rng) -> ScenarioVector {
    ScenarioVector(
        schema
            .fields
            .iter()
            .map(|f| match f.kind {
                FieldKind::Discrete => rng.random_range(f.min as i64..=f.max as i64) as f64,
                FieldKind::Continuous => rng.random_range(f.min..=f.max),
            })
            .collect(),
    )
}

#[test]
fn required_count_for_twenty_fields() {
    let p = UniquenessParams::new(10.0, 50.0);
    assert_eq!(p.required_differences(20), 2);
    assert_eq!(p.required_differences(10), 1);
    assert_eq!(p.required_differences(21), 3);
    assert_eq!(UniquenessParams::new(5.0, 50.0).required_differences(20), 1);
}

/// Twenty unit fields, archive of 50 bit-pattern entries; each pattern bit
/// is replicated over at least three fields so the entries are mutually distinct.
#[test]
fn two_of_twenty_fields_must_differ() {
    let schema = common::unit_box(20);
    let mut archive = ViolationArchive::new(Arc::clone(&schema), UniquenessParams::default());
    for i in 0..50u32 {
        let v = (0..20).map(|j| f64::from((i >> (j % 6)) & 1)).collect();
        assert!(archive.insert(entry(v, ViolationKind::Collision)), "entry {i}");
    }
    assert_eq!(archive.len(), 50);
    let mut one = vec![0.0; 20];
    one[0] = 0.5;
    assert!(!archive.is_unique(&ScenarioVector(one.clone()), ViolationKind::Collision));
    let mut two = one.clone();
    two[1] = 0.5;
    assert!(archive.is_unique(&ScenarioVector(two.clone()), ViolationKind::Collision));
    // a change just below the threshold does not count
    two[1] = 0.49;
    assert!(!archive.is_unique(&ScenarioVector(two), ViolationKind::Collision));
}

#[test]
fn filter_examples() {
    let schema = common::unit_box(2);
    let mut archive = ViolationArchive::new(schema, UniquenessParams::default());
    archive.insert(entry(vec![0.0, 0.0], ViolationKind::Collision));
    let v = |a: f64, b: f64| ScenarioVector(vec![a, b]);
    let kept = filter_similar(
        vec![v(0.1, 0.1), v(0.9, 0.1), v(0.8, 0.2), v(0.1, 0.9), v(1.0, 1.0)],
        &archive,
        &[v(0.0, 1.0)],
    );
    // (0.1, 0.1) is near the archive, (0.8, 0.2) near the kept (0.9, 0.1),
    // (0.1, 0.9) near the pending (0, 1)
    assert_eq!(kept, vec![v(0.9, 0.1), v(1.0, 1.0)]);
    // the archived kind is irrelevant for filtering
    let mut other = ViolationArchive::new(common::unit_box(2), UniquenessParams::default());
    other.insert(entry(vec![0.0, 0.0], ViolationKind::OutOfRoad));
    assert!(filter_similar(vec![v(0.1, 0.1)], &other, &[]).is_empty());
}

#[test]
fn archive_stream_matches_brute_force() {
    let schema = mixed_schema();
    let params = UniquenessParams::new(20.0, 25.0);
    let mut archive = ViolationArchive::new(Arc::clone(&schema), params);
    let mut oracle: Vec<(Vec<f64>, ViolationKind)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let v = random_vector(&schema, &mut rng);
        let kind = if rng.random_bool(0.5) {
            ViolationKind::Collision
        } else {
            ViolationKind::OutOfRoad
        };
        let expect = oracle
            .iter()
            .filter(|(_, k)| *k == kind)
            .all(|(w, _)| distinct_oracle(&v.0, w, &schema, 20.0, 25.0));
        assert_eq!(archive.insert(entry(v.0.clone(), kind)), expect);
        if expect {
            oracle.push((v.0, kind));
        }
    }
    for (i, a) in archive.entries.iter().enumerate() {
        for b in &archive.entries[i + 1..] {
            if a.kind == b.kind {
                assert!(distinct_oracle(&a.vector.0, &b.vector.0, &schema, 20.0, 25.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn archive_entries_pairwise_distinct(seed in any::<u64>(), th1 in 1.0f64..100.0, th2 in 1.0f64..100.0) {
        let schema = mixed_schema();
        let mut archive = ViolationArchive::new(Arc::clone(&schema), UniquenessParams::new(th1, th2));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let v = random_vector(&schema, &mut rng);
            archive.insert(entry(v.0, ViolationKind::Collision));
        }
        prop_assert!(!archive.is_empty());
        for (i, a) in archive.entries.iter().enumerate() {
            for b in &archive.entries[i + 1..] {
                prop_assert!(distinct_oracle(&a.vector.0, &b.vector.0, &schema, th1, th2));
            }
        }
    }

    #[test]
    fn uniqueness_is_monotone_in_thresholds(
        seed in any::<u64>(),
        th1 in 1.0f64..100.0,
        th2 in 1.0f64..100.0,
        lower1 in 0.0f64..1.0,
        lower2 in 0.0f64..1.0,
    ) {
        let schema = mixed_schema();
        let mut archive = ViolationArchive::new(Arc::clone(&schema), UniquenessParams::new(th1, th2));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            let v = random_vector(&schema, &mut rng);
            archive.insert(entry(v.0, ViolationKind::Collision));
        }
        let mut looser = archive.clone();
        looser.params = UniquenessParams::new((th1 * lower1).max(0.5), (th2 * lower2).max(0.5));
        for _ in 0..50 {
            let v = random_vector(&schema, &mut rng);
            if archive.is_unique(&v, ViolationKind::Collision) {
                prop_assert!(looser.is_unique(&v, ViolationKind::Collision));
            }
        }
    }
}
