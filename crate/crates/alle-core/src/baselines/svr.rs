//! Epsilon-insensitive support vector regression with an RBF kernel, solved
//! by sequential pairwise optimization of the dual.
//!
//! The dual keeps two box-bounded multipliers per training point (one for
//! each side of the insensitivity tube) under the balance constraint that
//! their signed sums cancel. Each step picks the most violating pair by the
//! gradient, sizes the move with second-order information, and updates the
//! gradient incrementally; the loop stops when the duality gap between the
//! best upward and downward directions falls below the tolerance.

use serde::{Deserialize, Serialize};

use crate::dataset::{SampleSet, SensorId};
use crate::error::{Error, Result};

/// Solver parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrParams {
    /// Box constraint on each dual coefficient.
    pub c_box: f64,
    /// Half-width of the insensitivity tube, in label units.
    pub eps_tube: f64,
    /// RBF bandwidth; `None` selects 1/M on the standardized features
    /// (features are z-scored, so their mean variance is one).
    pub gamma: Option<f64>,
    /// KKT violation tolerance for stopping.
    pub tol: f64,
    /// Hard cap on optimization steps.
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c_box: 1.0,
            eps_tube: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }
}

/// A fitted epsilon-SVR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub sensors: Vec<SensorId>,
    /// Upper-side dual coefficient per training point.
    pub alpha_up: Vec<f64>,
    /// Lower-side dual coefficient per training point.
    pub alpha_down: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c_box: f64,
    pub eps_tube: f64,
    /// Indices of points with a nonzero net coefficient.
    pub support_indices: Vec<usize>,
    /// Standardized training rows (all of them; prediction touches only the
    /// support indices).
    pub train_rows: Vec<Vec<f64>>,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
}

/// Fit failure modes; non-convergence still carries the best iterate.
#[derive(Debug)]
pub enum SvrFitError {
    Convergence {
        best: Box<SvrModel>,
        iterations: usize,
    },
    Invalid(Error),
}

impl From<SvrFitError> for Error {
    fn from(e: SvrFitError) -> Error {
        match e {
            SvrFitError::Convergence { iterations, .. } => Error::Convergence {
                iterations,
                message: "epsilon-SVR dual optimization hit the iteration cap".to_owned(),
            },
            SvrFitError::Invalid(err) => err,
        }
    }
}

fn rbf(gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// Lazily materialized kernel rows.
struct KernelCache {
    gamma: f64,
    rows: Vec<Option<Box<[f64]>>>,
}

impl KernelCache {
    fn new(n: usize, gamma: f64) -> KernelCache {
        KernelCache {
            gamma,
            rows: vec![None; n],
        }
    }

    fn row(&mut self, i: usize, data: &[Vec<f64>]) -> &[f64] {
        if self.rows[i].is_none() {
            let xi = &data[i];
            let row: Box<[f64]> = data.iter().map(|xj| rbf(self.gamma, xi, xj)).collect();
            self.rows[i] = Some(row);
        }
        self.rows[i].as_deref().unwrap()
    }
}

/// Direction value used in working-set selection. Variables are indexed
/// 0..2n: `t < n` is the upper multiplier of point t, `t >= n` the lower
/// multiplier of point t - n.
struct Direction {
    value: f64,
    var: usize,
}

pub fn fit_svr(
    train: &SampleSet,
    sensors: &[SensorId],
    params: &SvrParams,
) -> std::result::Result<SvrModel, SvrFitError> {
    if sensors.is_empty() {
        return Err(SvrFitError::Invalid(Error::arg(
            "at least one sensor is required".to_owned(),
        )));
    }
    if train.is_empty() {
        return Err(SvrFitError::Invalid(Error::arg(
            "training set is empty".to_owned(),
        )));
    }
    let bad = |v: f64| v.is_nan();
    if bad(params.c_box)
        || params.c_box <= 0.0
        || bad(params.eps_tube)
        || params.eps_tube < 0.0
        || bad(params.tol)
        || params.tol <= 0.0
    {
        return Err(SvrFitError::Invalid(Error::arg(format!(
            "invalid SVR parameters: c_box {} eps_tube {} tol {}",
            params.c_box, params.eps_tube, params.tol
        ))));
    }
    if let Some(g) = params.gamma {
        if g.is_nan() || g <= 0.0 {
            return Err(SvrFitError::Invalid(Error::arg(format!(
                "gamma must be positive, got {g}"
            ))));
        }
    }

    let raw_rows = train.feature_rows(sensors);
    let labels = train.labels();
    let n = raw_rows.len();
    let m = sensors.len();

    // z-score the features; constant columns stay centered at zero.
    let mut x_mean = vec![0.0; m];
    let mut x_std = vec![0.0; m];
    for row in &raw_rows {
        for (acc, x) in x_mean.iter_mut().zip(row) {
            *acc += x;
        }
    }
    for acc in &mut x_mean {
        *acc /= n as f64;
    }
    for row in &raw_rows {
        for i in 0..m {
            let d = row[i] - x_mean[i];
            x_std[i] += d * d;
        }
    }
    for s in &mut x_std {
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let rows: Vec<Vec<f64>> = raw_rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(x_mean.iter().zip(&x_std))
                .map(|(x, (mu, sd))| (x - mu) / sd)
                .collect()
        })
        .collect();

    let gamma = params.gamma.unwrap_or(1.0 / m as f64);
    let c = params.c_box;
    let eps = params.eps_tube;

    let mut cache = KernelCache::new(n, gamma);
    let mut alpha_up = vec![0.0; n];
    let mut alpha_down = vec![0.0; n];
    // Gradients of the dual objective: grad_up[i] = o_i + eps - y_i and
    // grad_down[i] = -o_i + eps + y_i, where o is the uncentered output.
    let mut grad_up: Vec<f64> = labels.iter().map(|y| eps - y).collect();
    let mut grad_down: Vec<f64> = labels.iter().map(|y| eps + y).collect();

    // Direction score -s_t * grad_t: the ascent candidate set wants the
    // maximum, the descent set the minimum; their gap bounds KKT violation.
    let up_score = |t: usize, gu: &[f64], gd: &[f64]| -> f64 {
        if t < n {
            -gu[t]
        } else {
            gd[t - n]
        }
    };

    let select = |au: &[f64], ad: &[f64], gu: &[f64], gd: &[f64]| -> (Direction, Direction) {
        let mut best_up = Direction {
            value: f64::NEG_INFINITY,
            var: usize::MAX,
        };
        let mut best_low = Direction {
            value: f64::INFINITY,
            var: usize::MAX,
        };
        for i in 0..n {
            // Upper multiplier: can rise while < C, can fall while > 0.
            if au[i] < c {
                let v = up_score(i, gu, gd);
                if v > best_up.value {
                    best_up = Direction { value: v, var: i };
                }
            }
            if au[i] > 0.0 {
                let v = up_score(i, gu, gd);
                if v < best_low.value {
                    best_low = Direction { value: v, var: i };
                }
            }
            // Lower multiplier mirrors the roles.
            let t = n + i;
            if ad[i] > 0.0 {
                let v = up_score(t, gu, gd);
                if v > best_up.value {
                    best_up = Direction { value: v, var: t };
                }
            }
            if ad[i] < c {
                let v = up_score(t, gu, gd);
                if v < best_low.value {
                    best_low = Direction { value: v, var: t };
                }
            }
        }
        (best_up, best_low)
    };

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < params.max_iter {
        let (up, low) = select(&alpha_up, &alpha_down, &grad_up, &grad_down);
        if up.var == usize::MAX || low.var == usize::MAX || up.value - low.value <= params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (t1, t2) = (up.var, low.var);
        let i1 = if t1 < n { t1 } else { t1 - n };
        let i2 = if t2 < n { t2 } else { t2 - n };

        // Curvature along the pair direction; the net coefficient of point
        // i1 rises by lambda and of i2 falls by lambda.
        let k11 = cache.row(i1, &rows)[i1];
        let k22 = cache.row(i2, &rows)[i2];
        let k12 = cache.row(i1, &rows)[i2];
        let quad = if i1 == i2 {
            // Same point, opposite multipliers: the move only shrinks both
            // toward complementarity and the objective is linear.
            0.0
        } else {
            k11 + k22 - 2.0 * k12
        };
        let mut lambda = if quad > 1e-12 {
            (up.value - low.value) / quad
        } else {
            f64::INFINITY
        };

        // Box limits: raising var t1 and lowering var t2 (in score space)
        // moves z_t1 by +s-step and z_t2 by -s-step in raw coordinates.
        let room = |t: usize, raising: bool, au: &[f64], ad: &[f64]| -> f64 {
            if t < n {
                if raising {
                    c - au[t]
                } else {
                    au[t]
                }
            } else if raising {
                ad[t - n]
            } else {
                c - ad[t - n]
            }
        };
        lambda = lambda.min(room(t1, true, &alpha_up, &alpha_down));
        lambda = lambda.min(room(t2, false, &alpha_up, &alpha_down));
        if lambda <= 0.0 || !lambda.is_finite() {
            // No feasible progress along this pair; treat as converged to
            // avoid cycling (happens only at numerical limits).
            converged = true;
            break;
        }

        // Apply the move in raw coordinates, pinning values that reach a box
        // bound exactly onto it.
        if t1 < n {
            alpha_up[t1] = (alpha_up[t1] + lambda).clamp(0.0, c);
        } else {
            alpha_down[t1 - n] = (alpha_down[t1 - n] - lambda).clamp(0.0, c);
        }
        if t2 < n {
            alpha_up[t2] = (alpha_up[t2] - lambda).clamp(0.0, c);
        } else {
            alpha_down[t2 - n] = (alpha_down[t2 - n] + lambda).clamp(0.0, c);
        }

        // The net coefficient changed by +lambda at i1 and -lambda at i2
        // (identical points cancel and leave the gradients unchanged).
        if i1 != i2 {
            let row1: Vec<f64> = cache.row(i1, &rows).to_vec();
            let row2 = cache.row(i2, &rows);
            for j in 0..n {
                let delta = lambda * (row1[j] - row2[j]);
                grad_up[j] += delta;
                grad_down[j] -= delta;
            }
        }

        debug_assert!({
            let net: f64 = alpha_up
                .iter()
                .zip(&alpha_down)
                .map(|(u, d)| u - d)
                .sum();
            net.abs() <= 1e-9 * c * n as f64
        });
    }

    let (up, low) = select(&alpha_up, &alpha_down, &grad_up, &grad_down);
    let bias = if up.var == usize::MAX || low.var == usize::MAX {
        0.0
    } else {
        (up.value + low.value) / 2.0
    };
    let support_indices: Vec<usize> = (0..n)
        .filter(|&i| alpha_up[i] != alpha_down[i])
        .collect();
    let model = SvrModel {
        sensors: sensors.to_vec(),
        alpha_up,
        alpha_down,
        bias,
        gamma,
        c_box: c,
        eps_tube: eps,
        support_indices,
        train_rows: rows,
        x_mean,
        x_std,
    };
    if converged {
        Ok(model)
    } else {
        Err(SvrFitError::Convergence {
            best: Box::new(model),
            iterations,
        })
    }
}

impl SvrModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(xi, (mu, sd))| (xi - mu) / sd)
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
        let z = self.standardize(x);
        let mut out = self.bias;
        for &i in &self.support_indices {
            let w = self.alpha_up[i] - self.alpha_down[i];
            out += w * rbf(self.gamma, &self.train_rows[i], &z);
        }
        Ok(out)
    }

    /// Decision value for a training point, by index.
    fn train_output(&self, j: usize) -> f64 {
        let mut out = self.bias;
        for &i in &self.support_indices {
            let w = self.alpha_up[i] - self.alpha_down[i];
            out += w * rbf(self.gamma, &self.train_rows[i], &self.train_rows[j]);
        }
        out
    }

    /// Largest violation of the stationarity conditions over the training
    /// set, for auditing a fitted model.
    ///
    /// For every point: a zero upper multiplier requires the residual to sit
    /// at or below the tube edge, an interior one pins it to the edge, and a
    /// bound one pushes it outside; the lower multiplier mirrors this below
    /// the tube. Complementarity of the two multipliers is included.
    pub fn kkt_violation(&self, labels: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, (&au, &ad)) in self.alpha_up.iter().zip(&self.alpha_down).enumerate() {
            let r = labels[j] - self.train_output(j);
            let eps = self.eps_tube;
            let c = self.c_box;

            let up_violation = if au <= 0.0 {
                (r - eps).max(0.0)
            } else if au < c {
                (r - eps).abs()
            } else {
                (eps - r).max(0.0)
            };
            let down_violation = if ad <= 0.0 {
                (-r - eps).max(0.0)
            } else if ad < c {
                (r + eps).abs()
            } else {
                (r + eps).max(0.0)
            };
            let complementarity = (au * ad) / (c * c);
            worst = worst
                .max(up_violation)
                .max(down_violation)
                .max(complementarity);
        }
        worst
    }

    /// Feasibility slack of the dual solution: (balance residual, worst box
    /// overshoot). Both should be at numerical zero for an accepted model.
    pub fn dual_feasibility(&self) -> (f64, f64) {
        let balance: f64 = self
            .alpha_up
            .iter()
            .zip(&self.alpha_down)
            .map(|(u, d)| u - d)
            .sum();
        let mut bound = 0.0f64;
        for (&u, &d) in self.alpha_up.iter().zip(&self.alpha_down) {
            bound = bound.max(-u).max(u - self.c_box);
            bound = bound.max(-d).max(d - self.c_box);
        }
        (balance.abs(), bound.max(0.0))
    }
}
