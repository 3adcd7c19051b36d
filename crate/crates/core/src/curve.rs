//! Time grids and sampled curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("grid bounds must satisfy 0 <= t_min < t_max (got {0}, {1})")]
    Bounds(f64, f64),
    #[error("logarithmic grid needs t_min > 0")]
    LogNonPositive,
    #[error("curve length {values} does not match grid length {grid}")]
    LengthMismatch { grid: usize, values: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub kind: GridKind,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(kind: GridKind, t_min: f64, t_max: f64, n_points: usize) -> Result<Self, GridError> {
        if n_points < 2 {
            return Err(GridError::TooFewPoints(n_points));
        }
        if !(t_min >= 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(GridError::Bounds(t_min, t_max));
        }
        if kind == GridKind::Logarithmic && t_min <= 0.0 {
            return Err(GridError::LogNonPositive);
        }
        Ok(Self {
            kind,
            t_min,
            t_max,
            n_points,
        })
    }

    pub fn linear(t_min: f64, t_max: f64, n_points: usize) -> Result<Self, GridError> {
        Self::new(GridKind::Linear, t_min, t_max, n_points)
    }

    pub fn logarithmic(t_min: f64, t_max: f64, n_points: usize) -> Result<Self, GridError> {
        Self::new(GridKind::Logarithmic, t_min, t_max, n_points)
    }

    /// Linear 2000 points on `[0, 4π]`, used for extrema.
    pub fn default_linear() -> Self {
        Self::linear(0.0, 4.0 * std::f64::consts::PI, 2000).expect("valid grid")
    }

    /// Logarithmic 600 points on `[1e-2, 1e3]`, used for display.
    pub fn default_log() -> Self {
        Self::logarithmic(1e-2, 1e3, 600).expect("valid grid")
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, i: usize) -> f64 {
        let last = (self.n_points - 1) as f64;
        if i == 0 {
            return self.t_min;
        }
        if i + 1 == self.n_points {
            return self.t_max;
        }
        match self.kind {
            GridKind::Linear => self.t_min + (self.t_max - self.t_min) * (i as f64 / last),
            GridKind::Logarithmic => {
                let (a, b) = (self.t_min.ln(), self.t_max.ln());
                (a + (b - a) * (i as f64 / last)).exp()
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.at(i)).collect()
    }

    /// Spacing of a linear grid; for logarithmic grids the largest gap.
    pub fn step(&self) -> f64 {
        match self.kind {
            GridKind::Linear => (self.t_max - self.t_min) / (self.n_points - 1) as f64,
            GridKind::Logarithmic => self.t_max - self.at(self.n_points - 2),
        }
    }
}

/// Sampled real function of time. Undefined samples are stored as NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub label: String,
}

impl Curve {
    pub fn new(grid: TimeGrid, values: Vec<f64>, label: impl Into<String>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            label: label.into(),
        })
    }

    /// Evaluate `f` on every grid time.
    pub fn from_fn(grid: TimeGrid, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.times().into_iter().map(f).collect();
        Self {
            grid,
            values,
            label: label.into(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.grid.at(i), v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            label: self.label.clone(),
        }
    }

    /// Pointwise sum; grids must agree.
    pub fn add(&self, other: &Curve) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::LengthMismatch {
                grid: self.len(),
                values: other.len(),
            });
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            label: self.label.clone(),
        })
    }
}
