//! Per-series standardization of observed targets.

use crate::error::{Error, Result};
use crate::forecasts::kde::mean_sd;

/// Standardized values with the per-time location and scale used.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardized {
    /// Maps a standardized value at time t back to the original units.
    pub fn inverse(&self, t: usize, z: f64) -> f64 {
        self.means[t] + self.sds[t] * z
    }
}

/// Turns a raw target series into standardized outcomes.
pub trait Standardizer: Send + Sync {
    fn standardize(&self, series: &[f64]) -> Result<Standardized>;
}

/// Centered rolling mean and population standard deviation, with the series
/// reflected at both ends to fill the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RollingStandardizer {
    pub window: usize,
}

impl Standardizer for RollingStandardizer {
    fn standardize(&self, series: &[f64]) -> Result<Standardized> {
        standardize_targets(series, self.window)
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    // Mirror about the end points without repeating them.
    while i < 0 || i >= n {
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * (n - 1) - i;
        }
    }
    i as usize
}

/// (y_t − m_t)/s_t with m_t, s_t from a centered window of `window` points;
/// s_t is floored at 1e−6 times the whole-series sd (or 1e−6 if that is 0).
pub fn standardize_targets(series: &[f64], window: usize) -> Result<Standardized> {
    if window < 4 {
        return Err(Error::InvalidArgument(format!("window {window} is below 4")));
    }
    if series.len() < window {
        return Err(Error::SeriesTooShort {
            length: series.len(),
            window,
        });
    }
    if series.iter().any(|y| !y.is_finite()) {
        return Err(Error::Data("non-finite target value".into()));
    }
    let n = series.len();
    let (_, global_sd) = mean_sd(series);
    let floor = if global_sd > 0.0 { 1e-6 * global_sd } else { 1e-6 };
    let left = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window);
    let (mut values, mut means, mut sds) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for t in 0..n {
        buf.clear();
        for k in 0..window as isize {
            buf.push(series[reflect(t as isize - left + k, n)]);
        }
        let (m, s) = mean_sd(&buf);
        let s = s.max(floor);
        values.push((series[t] - m) / s);
        means.push(m);
        sds.push(s);
    }
    Ok(Standardized { values, means, sds })
}
