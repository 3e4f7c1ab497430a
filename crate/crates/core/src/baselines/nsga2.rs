//! Fast non-dominated sorting, crowding distance, and NSGA-II ordering.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRanking {
    /// Front 0 is non-dominated.
    pub fronts: Vec<Vec<usize>>,
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(objs: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = objs[front[0]].len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objs[front[a]][k].total_cmp(&objs[front[b]][k]));
        let lo = objs[front[order[0]]][k];
        let hi = objs[front[order[n - 1]]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let prev = objs[front[order[w - 1]]][k];
            let next = objs[front[order[w + 1]]][k];
            dist[order[w]] += (next - prev) / range;
        }
    }
    dist
}

pub fn nondominated_sort(objs: &[Vec<f64>]) -> ParetoRanking {
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objs[i], &objs[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&objs[j], &objs[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
        level += 1;
    }
    let mut crowding = vec![0.0; n];
    for f in &fronts {
        for (pos, d) in crowding_distance(objs, f).into_iter().enumerate() {
            crowding[f[pos]] = d;
        }
    }
    ParetoRanking { fronts, rank, crowding }
}

/// Indices sorted by (rank ascending, crowding descending), stable.
pub fn nsga_order(objs: &[Vec<f64>]) -> Vec<usize> {
    let r = nondominated_sort(objs);
    let mut idx: Vec<usize> = (0..objs.len()).collect();
    idx.sort_by(|&a, &b| r.rank[a].cmp(&r.rank[b]).then(r.crowding[b].total_cmp(&r.crowding[a])));
    idx
}

/// Position of each individual in [`nsga_order`], usable as a scalar key where
/// lower is better.
pub fn nsga_keys(objs: &[Vec<f64>]) -> Vec<f64> {
    let mut keys = vec![0.0; objs.len()];
    for (pos, i) in nsga_order(objs).into_iter().enumerate() {
        keys[i] = pos as f64;
    }
    keys
}
