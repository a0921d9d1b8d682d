//! Gaussian window smoothing of raw pressure traces.

use crate::dataset::Recording;
use crate::error::{Error, Result};

/// Default window length; tails of the matching kernel truncate below 1%.
pub const DEFAULT_WINDOW: usize = 25;

/// Default sigma for a window of `len` taps.
pub fn default_sigma(len: usize) -> f64 {
    (len.saturating_sub(1)) as f64 / 6.0
}

/// Discrete Gaussian kernel of odd length `window`, normalized to sum 1.
pub fn gaussian_kernel(window: usize, sigma: f64) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::arg(format!(
            "smoothing window must be odd and >= 1, got {window}"
        )));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    let center = (window / 2) as isize;
    let mut kernel: Vec<f64> = (0..window as isize)
        .map(|j| {
            let x = (j - center) as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    Ok(kernel)
}

/// Convolves one channel with the kernel, reflect-padding at both edges.
///
/// Reflection mirrors without repeating the edge sample: for a series
/// `a b c ...` the left padding reads `... c b | a b c`.
fn convolve_reflect(series: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = series.len() as isize;
    let half = (kernel.len() / 2) as isize;
    let reflect = |mut idx: isize| -> f64 {
        // Fold the index until it lands inside [0, n); each pass handles one
        // reflection off either edge.
        loop {
            if idx < 0 {
                idx = -idx;
            } else if idx >= n {
                idx = 2 * (n - 1) - idx;
            } else {
                return series[idx as usize];
            }
        }
    };
    (0..n)
        .map(|t| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| w * reflect(t + j as isize - half))
                .sum()
        })
        .collect()
}

/// Smooths every channel of a recording with a unit-sum Gaussian kernel.
///
/// Length is preserved; constants pass through unchanged because the kernel
/// weights sum to 1.
pub fn smooth(recording: &Recording, window: usize, sigma: f64) -> Result<Recording> {
    let kernel = gaussian_kernel(window, sigma)?;
    let steps = recording.step_count();
    if window > steps {
        return Err(Error::arg(format!(
            "smoothing window {window} exceeds series length {steps}"
        )));
    }
    let mut out = recording.clone();
    for channel in &mut out.channels {
        *channel = convolve_reflect(channel, &kernel);
    }
    Ok(out)
}
