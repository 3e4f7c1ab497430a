//! One-hidden-layer perceptron with rectifier hidden units, trained with Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Sigmoid output trained with binary cross-entropy.
    Logistic,
    /// Identity output trained with squared error.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input: usize,
    pub hidden: usize,
    /// Row-major `hidden × input`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub output: OutputKind,
    /// Affine map applied to a linear output: `y = scale · out + shift`.
    pub target_scale: f64,
    pub target_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl TrainParams {
    pub fn classifier() -> Self {
        TrainParams {
            hidden: 150,
            epochs: 30,
            batch_size: 200,
            learning_rate: 0.01,
        }
    }

    pub fn regressor() -> Self {
        TrainParams {
            hidden: 100,
            epochs: 200,
            batch_size: 200,
            learning_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_loss: f64,
    /// Training labels contained a single class.
    pub single_class: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

impl MlpModel {
    pub fn zeros(input: usize, hidden: usize, output: OutputKind) -> Self {
        MlpModel {
            input,
            hidden,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            output,
            target_scale: 1.0,
            target_shift: 0.0,
        }
    }

    /// Uniform `±1/sqrt(fan_in)` initialization.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, output: OutputKind, rng: &mut R) -> Self {
        let mut m = MlpModel::zeros(input, hidden, output);
        let a1 = 1.0 / (input.max(1) as f64).sqrt();
        let a2 = 1.0 / (hidden.max(1) as f64).sqrt();
        for w in &mut m.w1 {
            *w = rng.random_range(-a1..=a1);
        }
        for b in &mut m.b1 {
            *b = rng.random_range(-a1..=a1);
        }
        for w in &mut m.w2 {
            *w = rng.random_range(-a2..=a2);
        }
        m.b2 = rng.random_range(-a2..=a2);
        m
    }

    fn hidden_pre(&self, x: &[f64], out: &mut [f64]) {
        for (h, o) in out.iter_mut().enumerate() {
            let row = &self.w1[h * self.input..(h + 1) * self.input];
            *o = self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Pre-activation of the output unit.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut pre = vec![0.0; self.hidden];
        self.hidden_pre(x, &mut pre);
        self.b2 + pre.iter().zip(&self.w2).map(|(z, w)| z.max(0.0) * w).sum::<f64>()
    }

    /// Network output: a probability for logistic models, the de-standardized
    /// prediction for linear ones.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let z = self.logit(x);
        match self.output {
            OutputKind::Logistic => sigmoid(z),
            OutputKind::Linear => self.target_scale * z + self.target_shift,
        }
    }

    /// Exact gradient of [`forward`](Self::forward) with respect to the input.
    pub fn grad_input(&self, x: &[f64]) -> Vec<f64> {
        let mut pre = vec![0.0; self.hidden];
        self.hidden_pre(x, &mut pre);
        let z = self.b2 + pre.iter().zip(&self.w2).map(|(p, w)| p.max(0.0) * w).sum::<f64>();
        let outer = match self.output {
            OutputKind::Logistic => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            OutputKind::Linear => self.target_scale,
        };
        let mut g = vec![0.0; self.input];
        for (h, (&p, &w2)) in pre.iter().zip(&self.w2).enumerate() {
            if p > 0.0 {
                let c = outer * w2;
                let row = &self.w1[h * self.input..(h + 1) * self.input];
                for (gi, w) in g.iter_mut().zip(row) {
                    *gi += c * w;
                }
            }
        }
        g
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [&mut f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (i, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            **p -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

fn param_refs(m: &mut MlpModel) -> Vec<&mut f64> {
    let mut out: Vec<&mut f64> = Vec::with_capacity(m.w1.len() + 2 * m.hidden + 1);
    out.extend(m.w1.iter_mut());
    out.extend(m.b1.iter_mut());
    out.extend(m.w2.iter_mut());
    out.push(&mut m.b2);
    out
}

fn fit(xs: &[Vec<f64>], ys: &[f64], params: &TrainParams, output: OutputKind, seed: u64) -> (MlpModel, f64) {
    let input = xs.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MlpModel::init(input, params.hidden, output, &mut rng);
    let n_params = model.w1.len() + 2 * model.hidden + 1;
    let mut adam = Adam::new(n_params, params.learning_rate);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut grads = vec![0.0; n_params];
    let mut pre = vec![0.0; params.hidden];
    let mut last_loss = f64::NAN;
    let h = params.hidden;
    let w1_len = model.w1.len();
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size.max(1)) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = &xs[i];
                model.hidden_pre(x, &mut pre);
                let z = model.b2 + pre.iter().zip(&model.w2).map(|(p, w)| p.max(0.0) * w).sum::<f64>();
                let (loss, dz) = match output {
                    OutputKind::Logistic => (softplus(z) - ys[i] * z, sigmoid(z) - ys[i]),
                    OutputKind::Linear => {
                        let r = z - ys[i];
                        (0.5 * r * r, r)
                    }
                };
                epoch_loss += loss;
                let dz = dz * scale;
                for k in 0..h {
                    if pre[k] > 0.0 {
                        grads[w1_len + h + k] += dz * pre[k];
                        let dpre = dz * model.w2[k];
                        grads[w1_len + k] += dpre;
                        let row = &mut grads[k * input..(k + 1) * input];
                        for (g, v) in row.iter_mut().zip(x) {
                            *g += dpre * v;
                        }
                    }
                }
                grads[n_params - 1] += dz;
            }
            let mut refs = param_refs(&mut model);
            adam.step(&mut refs, &grads);
        }
        last_loss = epoch_loss / xs.len().max(1) as f64;
    }
    (model, last_loss)
}

/// Train a violation classifier on normalized inputs and 0/1 labels.
pub fn train_classifier(xs: &[Vec<f64>], labels: &[bool], params: &TrainParams, seed: u64) -> (MlpModel, TrainReport) {
    let ys: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let positives = labels.iter().filter(|&&l| l).count();
    let single_class = positives == 0 || positives == labels.len();
    let (model, final_loss) = fit(xs, &ys, params, OutputKind::Logistic, seed);
    (
        model,
        TrainReport {
            final_loss,
            single_class,
        },
    )
}

/// Train a scalar regressor; targets are standardized internally.
pub fn train_regressor(xs: &[Vec<f64>], targets: &[f64], params: &TrainParams, seed: u64) -> (MlpModel, TrainReport) {
    let n = targets.len().max(1) as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let sd = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let ys: Vec<f64> = targets.iter().map(|t| (t - mean) / sd).collect();
    let (mut model, final_loss) = fit(xs, &ys, params, OutputKind::Linear, seed);
    model.target_scale = sd;
    model.target_shift = mean;
    (
        model,
        TrainReport {
            final_loss,
            single_class: false,
        },
    )
}
