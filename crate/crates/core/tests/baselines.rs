mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenfuzz_core::baselines::nsga2::{crowding_distance, dominates, nondominated_sort, nsga_order};
use scenfuzz_core::baselines::stagnated;
use scenfuzz_core::baselines::tree::{DecisionTree, Node, TreeParams};
use scenfuzz_core::campaign::{run_campaign, CampaignConfig};

/// Fronts by repeatedly peeling off the points nobody remaining dominates.
fn peel_fronts(objs: &[Vec<f64>]) -> Vec<usize> {
    let mut rank = vec![usize::MAX; objs.len()];
    let mut level = 0;
    while rank.contains(&usize::MAX) {
        let remaining: Vec<usize> = (0..objs.len()).filter(|&i| rank[i] == usize::MAX).collect();
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&objs[j], &objs[i])))
            .collect();
        for i in front {
            rank[i] = level;
        }
        level += 1;
    }
    rank
}

fn population() -> impl Strategy<Value = Vec<Vec<f64>>> {
    // small integer grid so ties and duplicates are common
    prop::collection::vec(prop::collection::vec((0i32..6).prop_map(f64::from), 3), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ranks_match_brute_force(objs in population()) {
        let r = nondominated_sort(&objs);
        prop_assert_eq!(&r.rank, &peel_fronts(&objs));
        let mut all: Vec<usize> = r.fronts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..objs.len()).collect::<Vec<_>>());
        // no member of a front dominates another member of it
        for f in &r.fronts {
            for &a in f {
                for &b in f {
                    prop_assert!(!dominates(&objs[a], &objs[b]));
                }
            }
        }
    }

    #[test]
    fn order_respects_fronts(objs in population()) {
        let r = nondominated_sort(&objs);
        let order = nsga_order(&objs);
        prop_assert_eq!(order.len(), objs.len());
        for w in order.windows(2) {
            prop_assert!(r.rank[w[0]] <= r.rank[w[1]]);
        }
    }
}

#[test]
fn crowding_extremes_are_infinite() {
    let objs = vec![vec![0.0, 4.0], vec![1.0, 2.0], vec![2.0, 1.5], vec![4.0, 0.0]];
    let d = crowding_distance(&objs, &[0, 1, 2, 3]);
    assert!(d[0].is_infinite() && d[3].is_infinite());
    // interior: normalized neighbour gaps summed over both objectives
    assert!((d[1] - (2.0 / 4.0 + 2.5 / 4.0)).abs() < 1e-12);
    assert!((d[2] - (3.0 / 4.0 + 2.0 / 4.0)).abs() < 1e-12);
}

fn uniform_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random()).collect()).collect()
}

#[test]
fn tree_finds_step_threshold() {
    let xs = uniform_points(2000, 3, 12);
    let ys: Vec<bool> = xs.iter().map(|x| x[1] > 0.8).collect();
    let tree = DecisionTree::fit(&xs, &ys, TreeParams::default());
    match tree.nodes[0] {
        Node::Split { feature, threshold, .. } => {
            assert_eq!(feature, 1);
            assert!((0.75..=0.85).contains(&threshold), "{threshold}");
        }
        Node::Leaf { .. } => panic!("no split"),
    }
    let critical = tree.critical_leaves();
    assert!(!critical.is_empty());
    assert!(xs
        .iter()
        .zip(&ys)
        .filter(|(_, y)| **y)
        .all(|(x, _)| critical.contains(&tree.leaf_of(x))));
}

#[test]
fn leaves_partition_the_training_set() {
    let xs = uniform_points(500, 2, 13);
    let ys: Vec<bool> = xs
        .iter()
        .map(|x| (x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2) < 0.05)
        .collect();
    let tree = DecisionTree::fit(&xs, &ys, TreeParams::default());
    assert!(tree.has_split());
    let (mut total, mut violations) = (0, 0);
    for leaf in tree.leaves() {
        let Node::Leaf {
            violations: v,
            total: t,
        } = tree.nodes[leaf]
        else {
            unreachable!()
        };
        let members: Vec<usize> = (0..xs.len()).filter(|&i| tree.leaf_of(&xs[i]) == leaf).collect();
        assert_eq!(members.len(), t);
        assert_eq!(members.iter().filter(|&&i| ys[i]).count(), v);
        total += t;
        violations += v;
    }
    assert_eq!(total, xs.len());
    assert_eq!(violations, ys.iter().filter(|&&y| y).count());
}

#[test]
fn stagnation_window() {
    assert!(!stagnated(&[-1.0, -2.0, -3.0], 5));
    assert!(stagnated(&[-1.0; 6], 5));
    assert!(!stagnated(&[-1.0, -1.0, -1.0, -1.0, -1.0, -2.0], 5));
}

fn unique_percentage(method: &str) -> f64 {
    let schema = common::fixture(common::STATIC_OBSTACLE_STRAIGHT);
    let config = CampaignConfig::from_json(&format!(
        r#"{{"method": "{method}", "budget": 200, "rng_seed": 21, "repetitions": 2,
            "seed_collection": {{"method": "GA-UN", "budget": 40}},
            "ga": {{"pop_size": 20}}, "sm": {{"pretrain_samples": 200}}}}"#
    ))
    .unwrap();
    let r = run_campaign(schema, &config).unwrap();
    assert!(
        r.summary.stats.violations.iter().sum::<usize>() > 0,
        "{method} found nothing"
    );
    r.summary.stats.unique_percentage
}

#[test]
fn unfiltered_baselines_repeat_violations() {
    for m in ["GA", "NSGA2-SM", "NSGA2-DT", "AV-FUZZER"] {
        let pct = unique_percentage(m);
        assert!(pct < 100.0, "{m}: {pct}");
    }
}

#[test]
fn filtered_surrogate_baseline_is_all_unique() {
    assert_eq!(unique_percentage("NSGA2-UN-SM-A"), 100.0);
}
