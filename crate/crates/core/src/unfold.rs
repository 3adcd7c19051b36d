//! Unfolding: map raw levels to a sequence with unit mean spacing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{semicircle_radius, EnsembleKind, SpectrumSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldError {
    #[error("analytic unfolding needs a Gaussian ensemble (beta in 1, 2, 4), got beta={0}")]
    WrongEnsemble(u8),
    #[error("polynomial degree must be in 1..=12, got {0}")]
    InvalidDegree(usize),
    #[error("need at least {need} levels for the fit, got {got}")]
    TooFewLevels { need: usize, got: usize },
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("all levels are equal")]
    Degenerate,
    #[error("least-squares system is rank deficient")]
    RankDeficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum UnfoldingMethod {
    AnalyticSemicircle,
    PolynomialFit { eta: usize, n_bins: usize },
    Identity,
}

impl UnfoldingMethod {
    pub fn polynomial_default() -> Self {
        Self::PolynomialFit { eta: 3, n_bins: 50 }
    }

    /// Natural choice for an ensemble.
    pub fn for_kind(kind: EnsembleKind) -> Self {
        if kind.is_gaussian() {
            Self::AnalyticSemicircle
        } else {
            Self::Identity
        }
    }
}

/// Metadata of the spectrum an unfolded sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    pub energies: Vec<f64>,
    pub method: UnfoldingMethod,
    pub source: Option<SourceInfo>,
    /// The fitted map was not monotone and the output had to be re-sorted.
    pub resorted: bool,
}

impl UnfoldedSpectrum {
    /// Wrap already unfolded levels (sorted on the way in).
    pub fn from_levels(mut energies: Vec<f64>, method: UnfoldingMethod) -> Self {
        energies.sort_by(f64::total_cmp);
        Self {
            energies,
            method,
            source: None,
            resorted: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn mean_spacing(&self) -> f64 {
        let n = self.energies.len();
        if n < 2 {
            return f64::NAN;
        }
        (self.energies[n - 1] - self.energies[0]) / (n - 1) as f64
    }
}

fn source_of(spec: &SpectrumSample) -> Option<SourceInfo> {
    Some(SourceInfo {
        kind: spec.kind,
        dim: spec.dim(),
        seed: spec.seed,
    })
}

/// Integrated semicircle density scaled to `[0, N]`, clipped outside the support.
pub fn semicircle_cdf(e: f64, n: usize, beta: u8) -> f64 {
    let nf = n as f64;
    let b = beta as f64;
    let r = semicircle_radius(n, beta);
    if e <= -r {
        return 0.0;
    }
    if e >= r {
        return nf;
    }
    let root = (r * r - e * e).max(0.0).sqrt();
    let v = nf / 2.0 + (nf * b * (e / r).asin() + 0.5 * e * root) / (std::f64::consts::PI * b);
    v.clamp(0.0, nf)
}

pub fn unfold_analytic(spec: &SpectrumSample, beta: u8) -> Result<UnfoldedSpectrum, UnfoldError> {
    if !matches!(beta, 1 | 2 | 4) {
        return Err(UnfoldError::WrongEnsemble(beta));
    }
    let n = spec.dim();
    let energies = spec.energies.iter().map(|&e| semicircle_cdf(e, n, beta)).collect();
    Ok(UnfoldedSpectrum {
        energies,
        method: UnfoldingMethod::AnalyticSemicircle,
        source: source_of(spec),
        resorted: false,
    })
}

pub fn unfold_identity(spec: &SpectrumSample) -> UnfoldedSpectrum {
    UnfoldedSpectrum {
        energies: spec.energies.clone(),
        method: UnfoldingMethod::Identity,
        source: source_of(spec),
        resorted: false,
    }
}

/// Least-squares polynomial fit of the staircase `E_i ↦ i + 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseFit {
    center: f64,
    scale: f64,
    coeffs: Vec<f64>,
}

impl StaircaseFit {
    pub fn fit(levels: &[f64], eta: usize) -> Result<Self, UnfoldError> {
        if eta == 0 || eta > 12 {
            return Err(UnfoldError::InvalidDegree(eta));
        }
        if levels.len() < 10 * eta {
            return Err(UnfoldError::TooFewLevels {
                need: 10 * eta,
                got: levels.len(),
            });
        }
        let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(UnfoldError::Degenerate);
        }
        let center = 0.5 * (hi + lo);
        let scale = 0.5 * (hi - lo);
        let m = levels.len();
        let a = DMatrix::from_fn(m, eta + 1, |i, j| ((levels[i] - center) / scale).powi(j as i32));
        let y = DVector::from_fn(m, |i, _| i as f64 + 0.5);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-12 * smax) {
            return Err(UnfoldError::RankDeficient);
        }
        let c = svd.solve(&y, 1e-14 * smax).map_err(|_| UnfoldError::RankDeficient)?;
        Ok(Self {
            center,
            scale,
            coeffs: c.iter().copied().collect(),
        })
    }

    pub fn eval(&self, e: f64) -> f64 {
        let x = (e - self.center) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Unfold raw levels with a polynomial staircase fit of degree `eta`.
///
/// Returns the unfolded levels and whether they had to be re-sorted.
pub fn unfold_polynomial_levels(levels: &[f64], eta: usize) -> Result<(Vec<f64>, bool), UnfoldError> {
    let fit = StaircaseFit::fit(levels, eta)?;
    let mut out: Vec<f64> = levels.iter().map(|&e| fit.eval(e)).collect();
    let monotone = out.windows(2).all(|w| w[0] <= w[1]);
    if !monotone {
        out.sort_by(f64::total_cmp);
    }
    Ok((out, !monotone))
}

pub fn unfold_polynomial(spec: &SpectrumSample, eta: usize, n_bins: usize) -> Result<UnfoldedSpectrum, UnfoldError> {
    let (energies, resorted) = unfold_polynomial_levels(&spec.energies, eta)?;
    Ok(UnfoldedSpectrum {
        energies,
        method: UnfoldingMethod::PolynomialFit { eta, n_bins },
        source: source_of(spec),
        resorted,
    })
}

/// Unfold with the method natural to the sample's ensemble.
pub fn unfold_default(spec: &SpectrumSample) -> Result<UnfoldedSpectrum, UnfoldError> {
    if spec.kind.is_gaussian() {
        unfold_analytic(spec, spec.kind.beta())
    } else {
        Ok(unfold_identity(spec))
    }
}

/// Normalized histogram densities of `levels` on `n_bins` equal bins over `[lo, hi]`.
pub fn density_histogram(levels: &[f64], lo: f64, hi: f64, n_bins: usize) -> Result<Vec<f64>, UnfoldError> {
    if n_bins < 2 {
        return Err(UnfoldError::TooFewBins(n_bins));
    }
    if !(hi > lo) {
        return Err(UnfoldError::Degenerate);
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &e in levels {
        if e < lo || e > hi {
            continue;
        }
        let b = (((e - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let norm = levels.len() as f64 * width;
    Ok(counts.into_iter().map(|c| c as f64 / norm).collect())
}

/// Sum of squared differences between two level histograms on a shared range.
pub fn histogram_distance(a: &[f64], b: &[f64], n_bins: usize) -> Result<f64, UnfoldError> {
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let ha = density_histogram(a, lo, hi, n_bins)?;
    let hb = density_histogram(b, lo, hi, n_bins)?;
    Ok(ha.iter().zip(&hb).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Fit quality `Q`: histogram distance between analytic and polynomial unfoldings.
pub fn unfold_quality(spec: &SpectrumSample, beta: u8, eta: usize, n_bins: usize) -> Result<f64, UnfoldError> {
    let analytic = unfold_analytic(spec, beta)?;
    let numeric = unfold_polynomial(spec, eta, n_bins)?;
    histogram_distance(&analytic.energies, &numeric.energies, n_bins)
}

/// Distance of an unfolded histogram from the flat unit density over `[0, N]`.
pub fn flatness(u: &UnfoldedSpectrum, n_bins: usize) -> Result<f64, UnfoldError> {
    let n = u.dim() as f64;
    let h = density_histogram(&u.energies, 0.0, n, n_bins)?;
    Ok(h.iter().map(|d| (d - 1.0 / n).powi(2)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{derive_seed, sample_spectrum};

    fn sample(kind: EnsembleKind, n: usize, seed: u64) -> SpectrumSample {
        sample_spectrum(kind, n, seed).unwrap()
    }

    #[test]
    fn cdf_landmarks() {
        for beta in [1u8, 2, 4] {
            let n = 80;
            let r = semicircle_radius(n, beta);
            assert!((semicircle_cdf(0.0, n, beta) - 40.0).abs() < 1e-12);
            assert_eq!(semicircle_cdf(r, n, beta), 80.0);
            assert_eq!(semicircle_cdf(-r, n, beta), 0.0);
            assert_eq!(semicircle_cdf(2.0 * r, n, beta), 80.0);
            assert_eq!(semicircle_cdf(-2.0 * r, n, beta), 0.0);
        }
    }

    #[test]
    fn cdf_matches_density_quadrature() {
        let (n, beta) = (50usize, 2u8);
        let r = semicircle_radius(n, beta);
        let e = 0.37 * r;
        let m = 20_000;
        let h = (e + r) / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let x = -r + (i as f64 + 0.5) * h;
            acc += crate::ensembles::semicircle_density(x, n, beta).unwrap() * h;
        }
        assert!((semicircle_cdf(e, n, beta) - n as f64 * acc).abs() < 1e-4);
    }

    #[test]
    fn analytic_rejects_poisson() {
        let s = sample(EnsembleKind::Poisson, 20, 1);
        assert_eq!(unfold_analytic(&s, 0).unwrap_err(), UnfoldError::WrongEnsemble(0));
    }

    #[test]
    fn gue_mean_spacing_near_one() {
        let mut total = 0.0;
        for i in 0..100 {
            let s = sample(EnsembleKind::Gue, 200, derive_seed(17, i));
            let u = unfold_analytic(&s, 2).unwrap();
            assert!(u.energies.windows(2).all(|w| w[0] <= w[1]));
            assert!(u.energies.iter().all(|&e| (0.0..=200.0).contains(&e)));
            total += u.mean_spacing();
        }
        let mean = total / 100.0;
        assert!((0.95..=1.05).contains(&mean), "{mean}");
    }

    #[test]
    fn polynomial_uniform_is_affine() {
        let levels: Vec<f64> = (0..40).map(|i| 3.0 + 0.25 * i as f64).collect();
        let (u, resorted) = unfold_polynomial_levels(&levels, 1).unwrap();
        assert!(!resorted);
        for w in u.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn polynomial_preconditions() {
        let levels: Vec<f64> = (0..40).map(|i| i as f64).collect();
        assert_eq!(unfold_polynomial_levels(&levels, 0).unwrap_err(), UnfoldError::InvalidDegree(0));
        assert!(matches!(
            unfold_polynomial_levels(&levels, 5).unwrap_err(),
            UnfoldError::TooFewLevels { .. }
        ));
        assert_eq!(unfold_polynomial_levels(&[2.0; 30], 1).unwrap_err(), UnfoldError::Degenerate);
    }

    #[test]
    fn quality_of_identical_inputs_is_zero() {
        let s = sample(EnsembleKind::Goe, 60, 4);
        let u = unfold_analytic(&s, 1).unwrap();
        assert_eq!(histogram_distance(&u.energies, &u.energies, 20).unwrap(), 0.0);
        let q = unfold_quality(&s, 1, 3, 50).unwrap();
        assert!(q.is_finite() && q >= 0.0);
        assert!(histogram_distance(&u.energies, &u.energies, 1).is_err());
    }

    #[test]
    fn histogram_is_normalized() {
        let levels = [0.1, 0.2, 0.5, 0.9, 1.0];
        let h = density_histogram(&levels, 0.0, 1.0, 4).unwrap();
        let total: f64 = h.iter().map(|d| d * 0.25).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
