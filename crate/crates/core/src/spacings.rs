//! k-th neighbor level spacings and their reference distributions.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::log_gamma;
use crate::unfold::UnfoldedSpectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacingError {
    #[error("neighbor order k={k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("Dyson index {0} is not one of 1, 2, 4")]
    InvalidBeta(u8),
    #[error("surmise constants are not representable for k={0}")]
    Overflow(usize),
    #[error("empty spacing series")]
    Empty,
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("invalid histogram range ({0}, {1})")]
    BadRange(f64, f64),
}

/// `s_i = E_{i+k} - E_i` for consecutive levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSeries {
    pub k: usize,
    pub values: Vec<f64>,
}

impl SpacingSeries {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub fn spacings_of(levels: &[f64], k: usize) -> Result<SpacingSeries, SpacingError> {
    let n = levels.len();
    if k == 0 || k >= n {
        return Err(SpacingError::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    let values = levels[k..].iter().zip(levels).map(|(hi, lo)| hi - lo).collect();
    Ok(SpacingSeries { k, values })
}

pub fn extract_spacings(u: &UnfoldedSpectrum, k: usize) -> Result<SpacingSeries, SpacingError> {
    spacings_of(&u.energies, k)
}

/// Parameters of the generalized Wigner surmise `C s^α exp(-A s²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurmiseParams {
    pub k: usize,
    pub beta: u8,
    pub alpha: f64,
    pub a_alpha: f64,
    pub c_alpha: f64,
    /// `ln C`; `C` itself underflows for large `k`.
    pub ln_c_alpha: f64,
    pub omega: f64,
}

pub fn surmise_params(k: usize, beta: u8) -> Result<SurmiseParams, SpacingError> {
    if k == 0 {
        return Err(SpacingError::KOutOfRange { k, max: usize::MAX });
    }
    if !matches!(beta, 1 | 2 | 4) {
        return Err(SpacingError::InvalidBeta(beta));
    }
    let kf = k as f64;
    let alpha = kf * (kf + 1.0) * beta as f64 / 2.0 + kf - 1.0;
    let half = (alpha + 1.0) / 2.0;
    let lg_half = log_gamma(half).map_err(|_| SpacingError::Overflow(k))?;
    let lg_top = log_gamma(alpha / 2.0 + 1.0).map_err(|_| SpacingError::Overflow(k))?;
    let ln_a = 2.0 * (lg_top - kf.ln() - lg_half);
    let a_alpha = ln_a.exp();
    let ln_c = std::f64::consts::LN_2 + half * ln_a - lg_half;
    let omega = (alpha / (2.0 * a_alpha)).sqrt();
    if !(a_alpha.is_finite() && a_alpha > 0.0 && omega.is_finite() && ln_c.is_finite()) {
        return Err(SpacingError::Overflow(k));
    }
    Ok(SurmiseParams {
        k,
        beta,
        alpha,
        a_alpha,
        c_alpha: ln_c.exp(),
        ln_c_alpha: ln_c,
        omega,
    })
}

impl SurmiseParams {
    /// Draw one spacing: `A s²` is Gamma distributed with shape `(α+1)/2`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new((self.alpha + 1.0) / 2.0, 1.0).expect("positive shape");
        (g.sample(rng) / self.a_alpha).sqrt()
    }
}

pub fn surmise_pdf(p: &SurmiseParams, s: f64) -> f64 {
    if s <= 0.0 {
        return if p.alpha == 0.0 && s == 0.0 { p.c_alpha } else { 0.0 };
    }
    (p.ln_c_alpha + p.alpha * s.ln() - p.a_alpha * s * s).exp()
}

/// Gamma(k, 1) density of the k-th neighbor spacing of uncorrelated levels.
pub fn poisson_knls_pdf(k: usize, s: f64) -> f64 {
    if s < 0.0 || k == 0 {
        return 0.0;
    }
    if s == 0.0 {
        return if k == 1 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    ((kf - 1.0) * s.ln() - s - log_gamma(kf).expect("k >= 1")).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

/// Density histogram; values outside an explicit range are dropped before
/// normalization so the densities integrate to one over the range.
pub fn empirical_hist(series: &SpacingSeries, n_bins: usize, range: Option<(f64, f64)>) -> Result<Histogram, SpacingError> {
    if series.values.is_empty() {
        return Err(SpacingError::Empty);
    }
    if n_bins == 0 {
        return Err(SpacingError::NoBins);
    }
    let (lo, hi) = match range {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some((lo, hi)) => return Err(SpacingError::BadRange(lo, hi)),
        None => {
            let lo = series.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        }
    };
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut used = 0usize;
    for &v in &series.values {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
        used += 1;
    }
    let edges = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let norm = (used.max(1)) as f64 * width;
    Ok(Histogram {
        edges,
        densities: counts.into_iter().map(|c| c as f64 / norm).collect(),
    })
}
