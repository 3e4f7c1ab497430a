//! Binary CART classifier with Gini impurity over normalized fields.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Minimum node size to split, as a fraction of the training set.
    pub min_samples_split_fraction: f64,
    /// Minimum weighted impurity decrease for a split to be kept.
    pub min_impurity_decrease: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split_fraction: 0.10,
            min_impurity_decrease: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        violations: usize,
        total: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Taken when `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub params: TreeParams,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [bool],
    min_split: usize,
    min_decrease: f64,
    n_total: f64,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.ys[i]).count();
        let parent = gini(pos, n);
        let dim = self.xs[idx[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..dim {
            order.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
            let mut left_pos = 0;
            for s in 1..n {
                if self.ys[order[s - 1]] {
                    left_pos += 1;
                }
                let (a, b) = (self.xs[order[s - 1]][f], self.xs[order[s]][f]);
                if a == b {
                    continue;
                }
                let (nl, nr) = (s, n - s);
                let child = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(pos - left_pos, nr)) / n as f64;
                let decrease = n as f64 / self.n_total * (parent - child);
                if best.is_none_or(|(_, _, d)| decrease > d) {
                    best = Some((f, 0.5 * (a + b), decrease));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>) -> usize {
        let total = idx.len();
        let violations = idx.iter().filter(|&&i| self.ys[i]).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { violations, total });
        if total < self.min_split || total < 2 || violations == 0 || violations == total {
            return id;
        }
        let Some((feature, threshold, decrease)) = self.best_split(&idx) else {
            return id;
        };
        if decrease < self.min_decrease {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.xs[i][feature] <= threshold);
        let left = self.build(l);
        let right = self.build(r);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub fn fit(xs: &[Vec<f64>], ys: &[bool], params: TreeParams) -> DecisionTree {
        if xs.is_empty() {
            return DecisionTree {
                nodes: vec![Node::Leaf {
                    violations: 0,
                    total: 0,
                }],
                params,
            };
        }
        let min_split = ((params.min_samples_split_fraction * xs.len() as f64).ceil() as usize).max(2);
        let mut b = Builder {
            xs,
            ys,
            min_split,
            min_decrease: params.min_impurity_decrease,
            n_total: xs.len() as f64,
            nodes: Vec::new(),
        };
        b.build((0..xs.len()).collect());
        DecisionTree { nodes: b.nodes, params }
    }

    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Leaf { .. }))
            .collect()
    }

    pub fn has_split(&self) -> bool {
        self.nodes.len() > 1
    }

    /// Leaves whose violation fraction exceeds the overall fraction.
    pub fn critical_leaves(&self) -> Vec<usize> {
        let (v, t) = match self.nodes[0] {
            Node::Leaf { violations, total } => (violations, total),
            Node::Split { .. } => self.leaves().iter().fold((0, 0), |(v, t), &l| match self.nodes[l] {
                Node::Leaf { violations, total } => (v + violations, t + total),
                Node::Split { .. } => (v, t),
            }),
        };
        let global = if t == 0 { 0.0 } else { v as f64 / t as f64 };
        self.leaves()
            .into_iter()
            .filter(|&l| match self.nodes[l] {
                Node::Leaf { violations, total } => total > 0 && violations as f64 / total as f64 > global,
                Node::Split { .. } => false,
            })
            .collect()
    }
}
