//! Multiple linear regression with the overall F-test.
//!
//! Fits `Y = a0 + sum_k a_k X(k) + e` by least squares and tests whether all
//! slope coefficients are jointly zero.

use serde::{Deserialize, Serialize};

use crate::baselines::dist::f_survival;
use crate::dataset::{SampleSet, SensorId};
use crate::error::{Error, Result};

/// Significance level of the F-test decision.
pub const F_TEST_ALPHA: f64 = 0.05;

/// JSON has no infinities; encode non-finite values as strings ("inf",
/// "-inf", "NaN") and accept either form when reading.
mod json_float {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A fitted linear model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub sensors: Vec<SensorId>,
    pub intercept: f64,
    /// Slope per sensor, in `sensors` order.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    #[serde(with = "json_float")]
    pub r_squared: f64,
    /// Overall F statistic; infinite when the fit is exact.
    #[serde(with = "json_float")]
    pub f_statistic: f64,
    /// Upper-tail probability of the F statistic under the null.
    pub p_value: f64,
    /// True when the null (all slopes zero) is rejected at the 0.05 level.
    pub rejects_null: bool,
}

/// Householder QR of a column-major matrix; solves the least-squares system
/// and reports near-zero diagonal entries as dependent columns.
fn qr_least_squares(columns: &mut [Vec<f64>], rhs: &mut [f64]) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let m = columns.len();
    let n = rhs.len();
    debug_assert!(n >= m);

    let mut diag_scale = 0.0f64;
    let mut dependent = Vec::new();
    for k in 0..m {
        // Householder vector for column k below row k.
        let norm = columns[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            dependent.push(k);
            continue;
        }
        let alpha = if columns[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = columns[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            // Column already reduced; alpha is the diagonal entry.
            columns[k][k] = alpha;
        } else {
            for col in columns.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let scale = 2.0 * dot / vnorm2;
                for (vi, ci) in v.iter().zip(col[k..].iter_mut()) {
                    *ci -= scale * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[k..]).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / vnorm2;
            for (vi, ri) in v.iter().zip(rhs[k..].iter_mut()) {
                *ri -= scale * vi;
            }
        }
        diag_scale = diag_scale.max(columns[k][k].abs());
        if columns[k][k].abs() <= 1e-10 * diag_scale.max(1.0) {
            dependent.push(k);
        }
    }
    if !dependent.is_empty() {
        return Err(dependent);
    }

    // Back-substitution on the triangular factor.
    let mut beta = vec![0.0; m];
    for k in (0..m).rev() {
        let mut acc = rhs[k];
        for j in k + 1..m {
            acc -= columns[j][k] * beta[j];
        }
        beta[k] = acc / columns[k][k];
    }
    Ok(beta)
}

/// Ordinary least squares with the overall F-test.
///
/// Requires more samples than coefficients and a full-rank design; dependent
/// columns are reported by name. An exact fit yields an infinite F statistic
/// with p-value 0.
pub fn fit_linreg(train: &SampleSet, sensors: &[SensorId]) -> Result<LinearModel> {
    let n = train.len();
    let m = sensors.len();
    if m == 0 {
        return Err(Error::arg("at least one sensor is required".to_owned()));
    }
    if n <= m + 1 {
        return Err(Error::arg(format!(
            "need more than {} samples to fit {} coefficients, got {n}",
            m + 1,
            m
        )));
    }

    let rows = train.feature_rows(sensors);
    let labels = train.labels();

    // Design columns: intercept first, then one column per sensor.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    columns.push(vec![1.0; n]);
    for k in 0..m {
        columns.push(rows.iter().map(|r| r[k]).collect());
    }
    let mut rhs = labels.clone();
    let beta = qr_least_squares(&mut columns, &mut rhs).map_err(|dependent| {
        let names: Vec<String> = dependent
            .iter()
            .map(|&k| {
                if k == 0 {
                    "intercept".to_owned()
                } else {
                    format!("X{k} ({})", sensors[k - 1].label())
                }
            })
            .collect();
        Error::Singularity {
            columns: names.join(", "),
        }
    })?;

    let intercept = beta[0];
    let coefficients = beta[1..].to_vec();

    let fitted: Vec<f64> = rows
        .iter()
        .map(|r| {
            intercept
                + r.iter()
                    .zip(&coefficients)
                    .map(|(x, a)| x * a)
                    .sum::<f64>()
        })
        .collect();
    let residuals: Vec<f64> = labels
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();

    let mean = labels.iter().sum::<f64>() / n as f64;
    let sst: f64 = labels.iter().map(|y| (y - mean) * (y - mean)).sum();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let ssr = (sst - sse).max(0.0);

    let df1 = m as f64;
    let df2 = (n - m - 1) as f64;
    // Guard the exact-fit case: a residual sum at rounding level counts as 0.
    let f_statistic = if sse <= 1e-12 * sst.max(1.0) {
        f64::INFINITY
    } else {
        (ssr / df1) / (sse / df2)
    };
    let p_value = f_survival(f_statistic, df1, df2);
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN };

    Ok(LinearModel {
        sensors: sensors.to_vec(),
        intercept,
        coefficients,
        residuals,
        r_squared,
        f_statistic,
        p_value,
        rejects_null: p_value < F_TEST_ALPHA,
    })
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coefficients.len() {
            return Err(Error::arg(format!(
                "expected {} features, got {}",
                self.coefficients.len(),
                x.len()
            )));
        }
        Ok(self.intercept
            + x.iter()
                .zip(&self.coefficients)
                .map(|(x, a)| x * a)
                .sum::<f64>())
    }
}
