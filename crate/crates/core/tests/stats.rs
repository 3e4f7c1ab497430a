use proptest::prelude::*;
use scenfuzz_core::stats::{a12, midranks, vargha_delaney_a12, wilcoxon_rank_sum};

/// Two-sided p-value of the rank-sum statistic over all C(12, 6) relabelings.
fn exact_permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let n = pooled.len();
    let na = a.len();
    let mean = na as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (ranks[..na].iter().sum::<f64>() - mean).abs();
    let (mut hits, mut total) = (0usize, 0usize);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        total += 1;
        if (s - mean).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn pair_count(a: &[f64], b: &[f64]) -> f64 {
    let mut score = 0.0;
    for x in a {
        for y in b {
            score += match x.partial_cmp(y).unwrap() {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    score / (a.len() * b.len()) as f64
}

fn six() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..30).prop_map(f64::from), 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rank_sum_matches_exact_permutation(a in six(), b in six()) {
        let p = wilcoxon_rank_sum(&a, &b);
        prop_assert!((0.0..=1.0).contains(&p));
        let exact = exact_permutation_p(&a, &b);
        prop_assert!((p - exact).abs() <= 0.02, "approx {} exact {}", p, exact);
    }

    #[test]
    fn a12_matches_pair_count(a in prop::collection::vec(0i32..10, 1..15), b in prop::collection::vec(0i32..10, 1..15)) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let e = vargha_delaney_a12(&a, &b, 1);
        prop_assert_eq!(e.a12, pair_count(&a, &b));
        prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.a12.max(e.ci_low) && e.ci_high <= 1.0);
        prop_assert!(e.ci_low <= e.ci_high);
        prop_assert!((a12(&a, &b) + a12(&b, &a) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn a12_fixed_cases() {
    let a = [3.0, 4.0, 5.0];
    let b = [4.0, 5.0, 6.0];
    assert_eq!(a12(&a, &b), 2.0 / 9.0);
    assert_eq!(a12(&a, &a), 0.5);
    assert_eq!(a12(&[10.0, 11.0], &[1.0, 2.0, 3.0]), 1.0);
}

#[test]
fn identical_samples_are_not_significant() {
    let a = [5.0, 7.0, 7.0, 9.0, 12.0, 3.0];
    assert_eq!(wilcoxon_rank_sum(&a, &a), 1.0);
    assert_eq!(wilcoxon_rank_sum(&[2.0; 6], &[2.0; 6]), 1.0);
    let e = vargha_delaney_a12(&a, &a, 0x5eed);
    assert_eq!(e.a12, 0.5);
}

#[test]
fn separated_samples_are_significant() {
    let a = [20.0, 21.0, 22.0, 23.0, 24.0, 25.0];
    let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    assert!(wilcoxon_rank_sum(&a, &b) < 0.01);
    assert!((exact_permutation_p(&a, &b) - 2.0 / 924.0).abs() < 1e-12);
}
