//! Two-sample rank statistics: Wilcoxon rank-sum and Vargha-Delaney A12.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Midranks (1-based) of `values`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pooled sizes up to this use the exact permutation distribution.
pub const EXACT_RANK_SUM_LIMIT: usize = 40;

/// Two-sided rank-sum p-value. Small samples use the exact permutation
/// distribution of the midrank sum (ties included); larger ones the normal
/// approximation with tie and continuity corrections. Returns 1.0 when every
/// value is identical.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    if a.len() + b.len() <= EXACT_RANK_SUM_LIMIT {
        exact_rank_sum(a, b)
    } else {
        normal_rank_sum(a, b)
    }
}

fn exact_rank_sum(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    // doubled midranks are integers
    let ranks: Vec<usize> = midranks(&pooled).iter().map(|r| (2.0 * r).round() as usize).collect();
    let (n, k) = (pooled.len(), a.len());
    let max_sum: usize = ranks.iter().sum();
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0.0f64; max_sum + 1]; k + 1];
    ways[0][0] = 1.0;
    for &r in &ranks {
        for j in (1..=k).rev() {
            let (lo, hi) = ways.split_at_mut(j);
            for s in (r..=max_sum).rev() {
                hi[0][s] += lo[j - 1][s - r];
            }
        }
    }
    let total: f64 = ways[k].iter().sum();
    let mean = k as f64 * (n as f64 + 1.0);
    let observed = (ranks[..k].iter().sum::<usize>() as f64 - mean).abs();
    let extreme: f64 = ways[k]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as f64 - mean).abs() >= observed - 1e-9)
        .map(|(_, w)| w)
        .sum();
    (extreme / total).clamp(0.0, 1.0)
}

fn normal_rank_sum(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let n = n1 + n2;
    let mut tie_term = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let diff = (u - mean).abs();
    let z = (diff - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0)
}

/// Probability that a draw from `a` exceeds one from `b`, ties counted half.
pub fn a12(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.5;
    }
    let mut wins = 0.0;
    for x in a {
        for y in b {
            if x > y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    wins / (a.len() * b.len()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub a12: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// A12 with a 90% percentile-bootstrap interval (5th/95th percentiles).
pub fn vargha_delaney_a12(a: &[f64], b: &[f64], seed: u64) -> EffectSize {
    let point = a12(a, b);
    if a.is_empty() || b.is_empty() {
        return EffectSize {
            a12: point,
            ci_low: point,
            ci_high: point,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boots = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for x in ra.iter_mut() {
            *x = a[rng.random_range(0..a.len())];
        }
        for y in rb.iter_mut() {
            *y = b[rng.random_range(0..b.len())];
        }
        boots.push(a12(&ra, &rb));
    }
    boots.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let pos = (q * (boots.len() - 1) as f64).round() as usize;
        boots[pos].clamp(0.0, 1.0)
    };
    EffectSize {
        a12: point,
        ci_low: pick(0.05),
        ci_high: pick(0.95),
    }
}
