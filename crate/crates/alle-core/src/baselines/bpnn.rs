//! Three-layer backpropagation network (sigmoid hidden layer, linear output)
//! trained by safeguarded full-batch gradient descent.
//!
//! Inputs are z-scored and labels min-max scaled to [0, 1] with statistics
//! from the training set. The learning rate starts at 0.1 and is halved
//! whenever a step would increase the loss, so the recorded loss curve is
//! non-increasing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{SampleSet, SensorId, StateKind};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

const INITIAL_LEARNING_RATE: f64 = 0.1;
const MIN_LEARNING_RATE: f64 = 1e-15;

/// Hidden-layer width and iteration presets per state, chosen from plateau
/// sweeps with all nine sensors.
pub fn bpnn_preset(state: StateKind) -> (usize, usize) {
    match state {
        StateKind::VerticalDistance => (11, 150),
        StateKind::Amplitude => (10, 250),
        StateKind::Frequency => (9, 150),
        StateKind::Offset => (6, 200),
        StateKind::Yaw => (13, 400),
        StateKind::Pitch => (6, 150),
        StateKind::Roll => (10, 300),
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A fitted three-layer network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub sensors: Vec<SensorId>,
    pub hidden: usize,
    /// Hidden weights, `w1[j][i]` from input i to hidden j.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// Output weights from each hidden unit.
    pub w2: Vec<f64>,
    pub b2: f64,
    /// Per-feature training mean and standard deviation.
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    /// Label scaling bounds from the training set.
    pub y_min: f64,
    pub y_max: f64,
    /// Loss (scaled space) after each accepted iteration.
    pub loss_curve: Vec<f64>,
}

/// Gradient of the batch loss with the same shape as the weights.
#[derive(Debug, Clone)]
pub struct NetworkGradient {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Network {
    /// Network output for one already-standardized row.
    fn forward_scaled(&self, x: &[f64]) -> f64 {
        let mut out = self.b2;
        for ((w_row, &b), &w_out) in self.w1.iter().zip(&self.b1).zip(&self.w2) {
            let mut z = b;
            for (w, &xi) in w_row.iter().zip(x) {
                z += w * xi;
            }
            out += w_out * sigmoid(z);
        }
        out
    }

    /// Mean squared error against scaled targets.
    pub fn batch_loss(&self, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
        let n = rows.len() as f64;
        rows.iter()
            .zip(targets)
            .map(|(row, &t)| {
                let e = self.forward_scaled(row) - t;
                e * e
            })
            .sum::<f64>()
            / n
    }

    /// Analytic gradient of [`Network::batch_loss`] at the current weights.
    pub fn batch_gradient(&self, rows: &[Vec<f64>], targets: &[f64]) -> NetworkGradient {
        let n = rows.len() as f64;
        let inputs = self.x_mean.len();
        let mut grad = NetworkGradient {
            w1: vec![vec![0.0; inputs]; self.hidden],
            b1: vec![0.0; self.hidden],
            w2: vec![0.0; self.hidden],
            b2: 0.0,
        };
        let mut h = vec![0.0; self.hidden];
        for (row, &t) in rows.iter().zip(targets) {
            for (hj, (w_row, &b)) in h.iter_mut().zip(self.w1.iter().zip(&self.b1)) {
                let mut z = b;
                for (w, &xi) in w_row.iter().zip(row) {
                    z += w * xi;
                }
                *hj = sigmoid(z);
            }
            let out = self.b2 + self.w2.iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>();
            let de = 2.0 * (out - t) / n;
            grad.b2 += de;
            for (j, &hj) in h.iter().enumerate() {
                grad.w2[j] += de * hj;
                let dz = de * self.w2[j] * hj * (1.0 - hj);
                grad.b1[j] += dz;
                for (gw, &xi) in grad.w1[j].iter_mut().zip(row) {
                    *gw += dz * xi;
                }
            }
        }
        grad
    }

    fn apply_step(&mut self, grad: &NetworkGradient, lr: f64) {
        for j in 0..self.hidden {
            for i in 0..self.w1[j].len() {
                self.w1[j][i] -= lr * grad.w1[j][i];
            }
            self.b1[j] -= lr * grad.b1[j];
            self.w2[j] -= lr * grad.w2[j];
        }
        self.b2 -= lr * grad.b2;
    }

    /// Standardizes a raw feature row with the stored training statistics.
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(xi, (m, s))| (xi - m) / s)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.x_mean.len() {
            return Err(Error::arg(format!(
                "expected {} features, got {}",
                self.x_mean.len(),
                x.len()
            )));
        }
        let out = self.forward_scaled(&self.standardize(x));
        Ok(self.y_min + out * (self.y_max - self.y_min))
    }
}

/// Standardization statistics of the training features; errors on a
/// zero-variance feature, naming the sensor.
fn feature_stats(rows: &[Vec<f64>], sensors: &[SensorId]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rows.len() as f64;
    let inputs = sensors.len();
    let mut mean = vec![0.0; inputs];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; inputs];
    for row in rows {
        for i in 0..inputs {
            let d = row[i] - mean[i];
            std[i] += d * d;
        }
    }
    for (i, s) in std.iter_mut().enumerate() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            return Err(Error::Standardization {
                feature: sensors[i].label().to_owned(),
            });
        }
    }
    Ok((mean, std))
}

/// Builds a network with seeded uniform(-0.5, 0.5) weights and unit scaling;
/// training then replaces the scaling with real statistics.
pub fn init_network(sensors: &[SensorId], hidden: usize, seed: u64) -> Network {
    let inputs = sensors.len();
    let mut rng = rng::stream(seed, &[domain::INIT]);
    let mut uniform = move || rng::uniform(&mut rng) - 0.5;
    let w1: Vec<Vec<f64>> = (0..hidden)
        .map(|_| (0..inputs).map(|_| uniform()).collect())
        .collect();
    let b1: Vec<f64> = (0..hidden).map(|_| uniform()).collect();
    let w2: Vec<f64> = (0..hidden).map(|_| uniform()).collect();
    let b2 = uniform();
    Network {
        sensors: sensors.to_vec(),
        hidden,
        w1,
        b1,
        w2,
        b2,
        x_mean: vec![0.0; inputs],
        x_std: vec![1.0; inputs],
        y_min: 0.0,
        y_max: 1.0,
        loss_curve: Vec::new(),
    }
}

/// Trains a network by full-batch gradient descent.
pub fn fit_bpnn(
    train: &SampleSet,
    sensors: &[SensorId],
    hidden: usize,
    iterations: usize,
    seed: u64,
) -> Result<Network> {
    if hidden == 0 {
        return Err(Error::arg("hidden width must be >= 1".to_owned()));
    }
    if iterations == 0 {
        return Err(Error::arg("iterations must be >= 1".to_owned()));
    }
    if train.is_empty() {
        return Err(Error::arg("training set is empty".to_owned()));
    }

    let raw_rows = train.feature_rows(sensors);
    let (x_mean, x_std) = feature_stats(&raw_rows, sensors)?;

    let labels = train.labels();
    let y_min = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = y_max - y_min;
    let targets: Vec<f64> = labels
        .iter()
        .map(|y| if span > 0.0 { (y - y_min) / span } else { 0.0 })
        .collect();

    let mut net = init_network(sensors, hidden, seed);
    net.x_mean = x_mean;
    net.x_std = x_std;
    net.y_min = y_min;
    net.y_max = y_max;

    let rows: Vec<Vec<f64>> = raw_rows.iter().map(|r| net.standardize(r)).collect();

    let mut lr = INITIAL_LEARNING_RATE;
    let mut loss = net.batch_loss(&rows, &targets);
    for _ in 0..iterations {
        let grad = net.batch_gradient(&rows, &targets);
        loop {
            let mut trial = net.clone();
            trial.apply_step(&grad, lr);
            let trial_loss = trial.batch_loss(&rows, &targets);
            if trial_loss <= loss {
                trial.loss_curve = std::mem::take(&mut net.loss_curve);
                net = trial;
                loss = trial_loss;
                break;
            }
            lr /= 2.0;
            if lr < MIN_LEARNING_RATE {
                break; // gradient step cannot improve; keep current weights
            }
        }
        net.loss_curve.push(loss);
    }
    Ok(net)
}

/// One hyperparameter sweep cell: value, training R^2, and wall time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    /// Which axis was swept: hidden width or iteration count.
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub r2: Vec<f64>,
    pub train_seconds: Vec<f64>,
    /// Smallest swept value whose R^2 is within 0.01 of the sweep maximum.
    pub chosen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    HiddenNodes,
    Iterations,
}

/// R^2 plateau tolerance for choosing the sweep knee.
pub const SWEEP_R2_TOLERANCE: f64 = 0.01;

fn training_r2(net: &Network, train: &SampleSet, sensors: &[SensorId]) -> Result<f64> {
    let rows = train.feature_rows(sensors);
    let labels = train.labels();
    let preds: Vec<f64> = rows
        .iter()
        .map(|r| net.predict(r))
        .collect::<Result<_>>()?;
    let mean = labels.iter().sum::<f64>() / labels.len() as f64;
    let sse: f64 = preds
        .iter()
        .zip(&labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    let sst: f64 = labels.iter().map(|y| (y - mean) * (y - mean)).sum();
    if sst == 0.0 {
        return Err(Error::UndefinedVariance);
    }
    Ok(1.0 - sse / sst)
}

/// Sweeps one hyperparameter axis, recording training R^2 and wall time per
/// value, and picks the plateau knee.
pub fn sweep_bpnn(
    train: &SampleSet,
    sensors: &[SensorId],
    axis: SweepAxis,
    values: &[usize],
    seed: u64,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::arg("sweep grid is empty".to_owned()));
    }
    let (preset_hidden, preset_iterations) = bpnn_preset(train.state);
    let mut r2 = Vec::with_capacity(values.len());
    let mut train_seconds = Vec::with_capacity(values.len());
    for (cell, &value) in values.iter().enumerate() {
        let (hidden, iterations) = match axis {
            SweepAxis::HiddenNodes => (value, preset_iterations),
            SweepAxis::Iterations => (preset_hidden, value),
        };
        let started = Instant::now();
        let net = fit_bpnn(
            train,
            sensors,
            hidden,
            iterations,
            rng::mix(seed, &[domain::SWEEP, cell as u64]),
        )?;
        train_seconds.push(started.elapsed().as_secs_f64());
        r2.push(training_r2(&net, train, sensors)?);
    }
    let best = r2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let chosen_idx = r2
        .iter()
        .position(|&v| v >= best - SWEEP_R2_TOLERANCE)
        .expect("at least one value reaches the maximum");
    Ok(SweepResult {
        axis,
        values: values.to_vec(),
        r2,
        train_seconds,
        chosen: values[chosen_idx],
    })
}

impl SweepResult {
    /// CSV rendering: `value,r2,train_seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,r2,train_seconds\n");
        for i in 0..self.values.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.values[i], self.r2[i], self.train_seconds[i]
            ));
        }
        out
    }
}
