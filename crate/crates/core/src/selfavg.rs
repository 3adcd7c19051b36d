//! Relative variance of the neighbor SFFs over an ensemble and its
//! late-time average.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Curve, GridError, TimeGrid};
use crate::knsff::{knsff_single, KnsffError};
use crate::par;
use crate::unfold::UnfoldedSpectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelfAvgError {
    #[error(transparent)]
    Knsff(#[from] KnsffError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("need at least 2 realizations, got {0}")]
    TooFewSamples(usize),
    #[error("sample curves live on different grids")]
    GridMismatch,
    #[error("averaging window [{0}, {1}] is not inside the grid [{2}, {3}]")]
    WindowOutsideGrid(f64, f64, f64, f64),
    #[error("window length must be positive, got {0}")]
    BadWindow(f64),
    #[error("no defined points in the averaging window")]
    NoDefinedPoints,
}

pub type Result<T> = std::result::Result<T, SelfAvgError>;

/// Default start of the plateau window.
pub const DEFAULT_T_START: f64 = 2.0 * PI;
/// Default plateau window length.
pub const DEFAULT_T_WINDOW: f64 = 20.0 * PI;

/// Per-realization k-th neighbor SFF curves.
pub fn knsff_samples(spectra: &[UnfoldedSpectrum], k: usize, grid: &TimeGrid) -> Result<Vec<Curve>> {
    let times = grid.times();
    let rows = par::map_slice(spectra, |u| knsff_single(u, k, &times));
    rows.into_iter()
        .map(|r| Ok(Curve::new(*grid, r?, format!("S_k{k}"))?))
        .collect()
}

/// Pointwise `Var(S + S̄) / ⟨S + S̄⟩²` with `S̄ = 1/(N(N-1))`.
///
/// Points where the mean vanishes are NaN.
pub fn relative_variance(samples: &[Curve], k: usize, n: usize) -> Result<Curve> {
    if samples.len() < 2 {
        return Err(SelfAvgError::TooFewSamples(samples.len()));
    }
    let grid = samples[0].grid;
    if samples.iter().any(|c| c.grid != grid) {
        return Err(SelfAvgError::GridMismatch);
    }
    let offset = 1.0 / (n as f64 * (n as f64 - 1.0));
    let r = samples.len() as f64;
    let values = par::map_indices(grid.len(), |i| {
        let mut mean = 0.0;
        for c in samples {
            mean += c.values[i] + offset;
        }
        mean /= r;
        let mut var = 0.0;
        for c in samples {
            let d = c.values[i] + offset - mean;
            var += d * d;
        }
        var /= r;
        if mean == 0.0 {
            f64::NAN
        } else {
            var / (mean * mean)
        }
    });
    Ok(Curve::new(grid, values, format!("R_k{k}"))?)
}

fn interpolate(curve: &Curve, t: f64) -> f64 {
    let times = curve.times();
    let j = times.partition_point(|&x| x < t);
    if j < times.len() && times[j] == t {
        return curve.values[j];
    }
    let (t0, t1) = (times[j - 1], times[j]);
    let (v0, v1) = (curve.values[j - 1], curve.values[j]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Trapezoidal mean of `curve` over `[t_start, t_start + T]`, skipping NaN points.
pub fn plateau_average(curve: &Curve, t_start: f64, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(SelfAvgError::BadWindow(window));
    }
    let (lo, hi) = (curve.grid.t_min, curve.grid.t_max);
    let t_end = t_start + window;
    let slack = 1e-12 * hi.abs().max(1.0);
    if t_start < lo - slack || t_end > hi + slack {
        return Err(SelfAvgError::WindowOutsideGrid(t_start, t_end, lo, hi));
    }
    let (a, b) = (t_start.max(lo), t_end.min(hi));
    let mut pts = vec![(a, interpolate(curve, a))];
    pts.extend(curve.points().filter(|&(t, _)| t > a && t < b));
    pts.push((b, interpolate(curve, b)));
    let defined: Vec<(f64, f64)> = pts.into_iter().filter(|p| !p.1.is_nan()).collect();
    if defined.len() < 2 {
        return Err(SelfAvgError::NoDefinedPoints);
    }
    let area: f64 = defined.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    let span = defined[defined.len() - 1].0 - defined[0].0;
    Ok(area / span)
}

/// Predicted plateau value `(N-k)(N-1)/(2N)` of the relative variance.
pub fn plateau_formula(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    (n - k) * (n - 1.0) / (2.0 * n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelVarReport {
    pub k: usize,
    #[serde(skip)]
    pub curve: Option<Curve>,
    pub plateau_avg: f64,
    pub formula_value: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub n_realizations: usize,
    pub t_start: f64,
    #[serde(rename = "T_window")]
    pub t_window: f64,
}

/// Relative variance curve and its plateau average for one neighbor order.
pub fn relvar_report(spectra: &[UnfoldedSpectrum], k: usize, grid: &TimeGrid, t_start: f64, window: f64) -> Result<RelVarReport> {
    let n = spectra.first().map(|u| u.dim()).unwrap_or(0);
    let samples = knsff_samples(spectra, k, grid)?;
    let curve = relative_variance(&samples, k, n)?;
    let plateau_avg = plateau_average(&curve, t_start, window)?;
    Ok(RelVarReport {
        k,
        curve: Some(curve),
        plateau_avg,
        formula_value: plateau_formula(n, k),
        n,
        n_realizations: spectra.len(),
        t_start,
        t_window: window,
    })
}
