//! Selection, crossover, mutation, and survival on scenario vectors.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::grammar::{ScenarioVector, SearchSpaceSchema};

/// Binary tournament with replacement over `fitness` (lower wins).
///
/// The population index list is concatenated from random permutations until
/// `2n` contestants are available; contestants are paired in order.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    assert!(!fitness.is_empty(), "tournament on an empty population");
    let mut pool = Vec::with_capacity(2 * n + fitness.len());
    while pool.len() < 2 * n {
        let mut perm: Vec<usize> = (0..fitness.len()).collect();
        perm.shuffle(rng);
        pool.extend(perm);
    }
    pool.chunks(2)
        .take(n)
        .map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            if fitness[b] < fitness[a] {
                b
            } else {
                a
            }
        })
        .collect()
}

fn sbx_pair<R: Rng + ?Sized>(a: f64, b: f64, eta: f64, rng: &mut R) -> (f64, f64) {
    // bounded SBX on the unit interval
    if (a - b).abs() < 1e-14 {
        return (a, b);
    }
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    let u: f64 = rng.random();
    let spread = |beta: f64| {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let d = y2 - y1;
    let bq1 = spread(1.0 + 2.0 * y1 / d);
    let bq2 = spread(1.0 + 2.0 * (1.0 - y2) / d);
    let c1 = (0.5 * ((y1 + y2) - bq1 * d)).clamp(0.0, 1.0);
    let c2 = (0.5 * ((y1 + y2) + bq2 * d)).clamp(0.0, 1.0);
    if rng.random_bool(0.5) {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

/// Simulated binary crossover applied per field with probability `p`.
/// Discrete fields are crossed as reals; children are clipped, not rounded.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &ScenarioVector,
    b: &ScenarioVector,
    schema: &SearchSpaceSchema,
    eta: f64,
    p: f64,
    rng: &mut R,
) -> (ScenarioVector, ScenarioVector) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for (i, f) in schema.fields.iter().enumerate() {
        if !f.is_changeable() || !rng.random_bool(p.clamp(0.0, 1.0)) || a.0[i] == b.0[i] {
            continue;
        }
        let span = f.span();
        let (ua, ub) = ((a.0[i] - f.min) / span, (b.0[i] - f.min) / span);
        let (x, y) = sbx_pair(ua, ub, eta, rng);
        c1.0[i] = (f.min + x * span).clamp(f.min, f.max);
        c2.0[i] = (f.min + y * span).clamp(f.min, f.max);
    }
    (c1, c2)
}

/// Bounded polynomial mutation; each field mutates with probability `rate`.
/// The result is clipped and discrete fields are rounded.
pub fn polynomial_mutate<R: Rng + ?Sized>(
    v: &ScenarioVector,
    schema: &SearchSpaceSchema,
    rate: f64,
    eta_m: f64,
    rng: &mut R,
) -> ScenarioVector {
    let mut out = v.clone();
    let pow = 1.0 / (eta_m + 1.0);
    for (i, f) in schema.fields.iter().enumerate() {
        if !f.is_changeable() || !rng.random_bool(rate.clamp(0.0, 1.0)) {
            continue;
        }
        let span = f.span();
        let y = v.0[i];
        let d1 = (y - f.min) / span;
        let d2 = (f.max - y) / span;
        let u: f64 = rng.random();
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta_m + 1.0);
            val.powf(pow) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta_m + 1.0);
            1.0 - val.powf(pow)
        };
        out.0[i] = y + dq * span;
    }
    schema.repair(&out)
}

/// Indices of the `pop_size` lowest-fitness entries; ties keep insertion order.
pub fn survival(fitness: &[f64], pop_size: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    idx.truncate(pop_size);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{FieldDistribution, FieldKind, FieldSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schema() -> SearchSpaceSchema {
        let f = |name: &str, kind, min, max| FieldSpec {
            name: name.into(),
            kind,
            min,
            max,
            distribution: FieldDistribution::Uniform,
        };
        SearchSpaceSchema::new(
            vec![
                f("a", FieldKind::Continuous, -5.0, 5.0),
                f("b", FieldKind::Discrete, 0.0, 4.0),
                f("c", FieldKind::Continuous, 2.0, 2.0),
            ],
            vec![],
            "straight_road",
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_individual_tournament() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(tournament_select(&[3.0], 5, &mut rng), vec![0; 5]);
    }

    #[test]
    fn better_member_always_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = tournament_select(&[-5.0, 0.0], 100, &mut rng);
        assert!(w.iter().all(|&i| i == 0));
    }

    #[test]
    fn equal_parents_unchanged() {
        let s = schema();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ScenarioVector(vec![1.5, 2.0, 2.0]);
        let (c1, c2) = sbx_crossover(&p, &p, &s, 5.0, 1.0, &mut rng);
        assert_eq!(c1, p);
        assert_eq!(c2, p);
    }

    #[test]
    fn zero_rate_is_identity() {
        let s = schema();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ScenarioVector(vec![1.5, 2.0, 2.0]);
        assert_eq!(polynomial_mutate(&p, &s, 0.0, 5.0, &mut rng), p);
    }

    #[test]
    fn survival_takes_best() {
        assert_eq!(survival(&[3.0, 1.0, 2.0, 0.0], 2), vec![3, 1]);
        assert_eq!(survival(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
    }
}
