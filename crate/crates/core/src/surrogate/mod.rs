//! Violation classifier, confidence ranking, and constrained gradient mutation.

pub mod mlp;

use serde::{Deserialize, Serialize};

pub use mlp::{train_classifier, train_regressor, MlpModel, OutputKind, TrainParams, TrainReport};

use crate::dedup::ViolationArchive;
use crate::grammar::{FieldKind, ScenarioVector, SearchSpaceSchema, CONSTRAINT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradMutationParams {
    pub th_conf2: f64,
    pub n: usize,
    pub lambda: f64,
    pub epsilon: f64,
}

impl Default for GradMutationParams {
    fn default() -> Self {
        GradMutationParams {
            th_conf2: 0.9,
            n: 255,
            lambda: 1.0 / 255.0,
            epsilon: 1.0,
        }
    }
}

/// Confidence at rank `ceil(0.25 · p% · N)` (1-based, clamped to `[1, N]`)
/// of the descending-sorted training confidences.
pub fn compute_th_conf1(confidences: &[f64], violation_percent: f64) -> f64 {
    assert!(!confidences.is_empty(), "need at least one confidence");
    let mut sorted = confidences.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let raw = (0.25 * violation_percent / 100.0 * n as f64 - 1e-9).ceil();
    let rank = (raw.max(1.0) as usize).min(n);
    sorted[rank - 1]
}

/// Indices of the `s` most confident candidates, descending; ties keep input order.
pub fn rank_and_select(model: &MlpModel, candidates: &[Vec<f64>], s: usize) -> Vec<usize> {
    let conf: Vec<f64> = candidates.iter().map(|c| model.forward(c)).collect();
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]));
    idx.truncate(s.min(candidates.len()));
    idx
}

pub const PROJECTION_TOL: f64 = 1e-9;
pub const PROJECTION_MAX_SWEEPS: usize = 10_000;

fn box_limits(x: &[f64], epsilon: f64, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let l = x
        .iter()
        .zip(lo)
        .map(|(xi, l)| (l - xi).max(-epsilon).min(0.0))
        .collect();
    let u = x.iter().zip(hi).map(|(xi, h)| (h - xi).min(epsilon).max(0.0)).collect();
    (l, u)
}

fn max_violation(d: &[f64], rows: &[(Vec<f64>, f64)], l: &[f64], u: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, s) in rows {
        worst = worst.max(dot(a, d) - s);
    }
    for ((di, li), ui) in d.iter().zip(l).zip(u) {
        worst = worst.max(li - di).max(di - ui);
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closest perturbation to `dx` such that `x + dx` stays in `[lo, hi]`,
/// `|dx|∞ ≤ epsilon`, and every `a · (x + dx) ≤ b` holds.
///
/// `x` must itself be feasible. Uses Dykstra's alternating projections over the
/// half-spaces and the box, falling back to shrinking along the result if the
/// sweeps run out before reaching the tolerance.
pub fn project_perturbation(
    dx: &[f64],
    x: &[f64],
    constraints: &[(Vec<f64>, f64)],
    epsilon: f64,
    lo: &[f64],
    hi: &[f64],
) -> Vec<f64> {
    let k = dx.len();
    let (l, u) = box_limits(x, epsilon, lo, hi);
    // half-spaces in perturbation space: a · d ≤ b − a · x (≥ 0 for feasible x)
    let rows: Vec<(Vec<f64>, f64)> = constraints
        .iter()
        .filter(|(a, _)| a.iter().any(|v| *v != 0.0))
        .map(|(a, b)| (a.clone(), (b - dot(a, x)).max(0.0)))
        .collect();
    let clip = |d: &mut [f64]| {
        for i in 0..k {
            d[i] = d[i].clamp(l[i], u[i]);
        }
    };

    let mut d = dx.to_vec();
    if rows.is_empty() {
        clip(&mut d);
        return d;
    }
    if max_violation(&d, &rows, &l, &u) <= 0.0 {
        return d;
    }

    let m = rows.len();
    let mut incr = vec![vec![0.0; k]; m + 1];
    let mut y = vec![0.0; k];
    for _ in 0..PROJECTION_MAX_SWEEPS {
        let before = d.clone();
        let incr_before = incr.clone();
        for (j, (a, s)) in rows.iter().enumerate() {
            for i in 0..k {
                y[i] = d[i] + incr[j][i];
            }
            let excess = dot(a, &y) - s;
            let nrm2 = dot(a, a);
            let mut p = y.clone();
            if excess > 0.0 {
                let t = excess / nrm2;
                for i in 0..k {
                    p[i] -= t * a[i];
                }
            }
            for i in 0..k {
                incr[j][i] = y[i] - p[i];
            }
            d = p;
        }
        for i in 0..k {
            y[i] = d[i] + incr[m][i];
        }
        let mut p = y.clone();
        clip(&mut p);
        for i in 0..k {
            incr[m][i] = y[i] - p[i];
        }
        d = p;
        let moved = d.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // d can stall for a sweep while the corrections still shift
        let shifted = incr
            .iter()
            .flatten()
            .zip(incr_before.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if max_violation(&d, &rows, &l, &u) <= PROJECTION_TOL && moved.max(shifted) <= 1e-12 {
            break;
        }
    }

    // guarantee feasibility: d lies in the box (last projection), so shrink toward 0
    clip(&mut d);
    let mut t: f64 = 1.0;
    for (a, s) in &rows {
        let ad = dot(a, &d);
        if ad > *s {
            t = t.min(s / ad);
        }
    }
    if t < 1.0 {
        for di in &mut d {
            *di *= t;
        }
    }
    d
}

/// Outcome of one [`gradient_mutate`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct GradMutation {
    pub vector: ScenarioVector,
    pub iterations: usize,
    pub initial_confidence: f64,
    pub final_confidence: f64,
}

/// Constrained gradient-ascent mutation on the classifier's confidence.
///
/// `x` is a feasible scenario vector; the result is feasible, within
/// `epsilon` of `x` in normalized space, and never similar to an archived violation
/// unless `x` already was.
pub fn gradient_mutate(
    x: &ScenarioVector,
    model: &MlpModel,
    params: &GradMutationParams,
    th_conf1: f64,
    archive: &ViolationArchive,
    schema: &SearchSpaceSchema,
) -> GradMutation {
    let xn = schema.normalize(x);
    let k = xn.len();
    let f0 = model.forward(&xn);
    let unchanged = |iterations| GradMutation {
        vector: x.clone(),
        iterations,
        initial_confidence: f0,
        final_confidence: f0,
    };
    if f0 > th_conf1 {
        return unchanged(0);
    }
    let lo = vec![0.0; k];
    let hi: Vec<f64> = schema
        .fields
        .iter()
        .map(|f| if f.is_changeable() { 1.0 } else { 0.0 })
        .collect();
    let constraints = schema.normalized_constraints();
    let eps = params.epsilon;

    let mut current = xn.clone();
    let mut current_vec = x.clone();
    let mut conf = f0;
    let mut iterations = 0;
    for _ in 0..params.n {
        iterations += 1;
        let g = model.grad_input(&current);
        let stepped: Vec<f64> = (0..k)
            .map(|i| (current[i] + params.lambda * g[i]).clamp(lo[i], hi[i]))
            .collect();
        let mut dx: Vec<f64> = (0..k).map(|i| (stepped[i] - xn[i]).clamp(-eps, eps)).collect();
        let violates = constraints
            .iter()
            .any(|(a, b)| dot(a, &xn) + dot(a, &dx) - b > CONSTRAINT_TOL);
        if violates {
            dx = project_perturbation(&dx, &xn, &constraints, eps, &lo, &hi);
        }
        let cand_n: Vec<f64> = (0..k).map(|i| xn[i] + dx[i]).collect();
        let cand = to_feasible_vector(&cand_n, x, schema);
        if !archive.is_novel(&cand) {
            break;
        }
        current = cand_n;
        current_vec = cand;
        conf = model.forward(&current);
        if conf > params.th_conf2 {
            break;
        }
    }
    GradMutation {
        vector: current_vec,
        iterations,
        initial_confidence: f0,
        final_confidence: conf,
    }
}

/// Denormalize, move discrete entries to an integer between the original and
/// the new value, and fall back to `origin` if that breaks a constraint.
fn to_feasible_vector(unit: &[f64], origin: &ScenarioVector, schema: &SearchSpaceSchema) -> ScenarioVector {
    let raw = schema.denormalize(unit);
    let values = schema
        .fields
        .iter()
        .zip(raw.0.iter().zip(origin.values()))
        .map(|(f, (&v, &o))| match f.kind {
            FieldKind::Continuous => v.clamp(f.min, f.max),
            FieldKind::Discrete => (o + (v - o).trunc()).clamp(f.min, f.max),
        })
        .collect();
    let v = ScenarioVector(values);
    if schema.check_constraints(&v).is_empty() {
        v
    } else {
        origin.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn th_conf1_rank_arithmetic() {
        let conf: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        // rank ceil(0.25 · 0.20 · 100) = 5 → fifth highest = 0.95
        assert_eq!(compute_th_conf1(&conf, 20.0), 0.95);
        assert_eq!(compute_th_conf1(&conf, 0.0), 0.99);
        assert_eq!(compute_th_conf1(&[0.3; 7], 50.0), 0.3);
    }

    #[test]
    fn rank_with_known_confidences() {
        // single input, identity-ish model: confidence = σ(w·x) monotone in x
        let mut m = MlpModel::zeros(1, 1, OutputKind::Logistic);
        m.w1 = vec![1.0];
        m.w2 = vec![5.0];
        m.b2 = -2.5;
        let cands = vec![vec![0.9], vec![0.1], vec![0.5]];
        assert_eq!(rank_and_select(&m, &cands, 2), vec![0, 2]);
        let flat = MlpModel::zeros(1, 1, OutputKind::Logistic);
        assert_eq!(rank_and_select(&flat, &cands, 3), vec![0, 1, 2]);
    }

    #[test]
    fn projection_closed_form() {
        let c = vec![(vec![1.0, 1.0], 1.0)];
        let d = project_perturbation(&[0.4, 0.4], &[0.5, 0.5], &c, 1.0, &[0.0; 2], &[1.0; 2]);
        assert!(d.iter().all(|v| v.abs() < 1e-9), "{d:?}");
        let feasible = project_perturbation(&[-0.1, 0.05], &[0.5, 0.5], &c, 1.0, &[0.0; 2], &[1.0; 2]);
        assert_eq!(feasible, vec![-0.1, 0.05]);
        let boxed = project_perturbation(&[0.9, -0.9], &[0.5, 0.5], &[], 0.3, &[0.0; 2], &[1.0; 2]);
        assert_eq!(boxed, vec![0.3, -0.3]);
    }

    #[test]
    fn projection_is_euclidean_nearest() {
        // half-plane d1 ≤ 0.1 at x = 0: projection of (0.5, 0.2) is (0.1, 0.2)
        let c = vec![(vec![1.0, 0.0], 0.1)];
        let d = project_perturbation(&[0.5, 0.2], &[0.0, 0.0], &c, 1.0, &[0.0; 2], &[1.0; 2]);
        assert!((d[0] - 0.1).abs() < 1e-9 && (d[1] - 0.2).abs() < 1e-9, "{d:?}");
    }
}
