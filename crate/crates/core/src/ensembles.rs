//! Random spectra from the Gaussian ensembles and uncorrelated (Poisson) levels.

use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("matrix dimension must be at least 2, got {0}")]
    DimTooSmall(usize),
    #[error("at least one realization is required")]
    NoRealizations,
    #[error("eigensolver returned non-finite eigenvalues")]
    Eigensolver,
    #[error("Kramers pairing violated: pair gap {gap:e} exceeds 1e-6 of spectral width {width:e}")]
    Kramers { gap: f64, width: f64 },
    #[error("Dyson index {0} is not one of 1, 2, 4")]
    InvalidBeta(u8),
    #[error("unknown ensemble '{0}'")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Poisson,
    Goe,
    Gue,
    Gse,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 4] = [Self::Poisson, Self::Goe, Self::Gue, Self::Gse];
    pub const GAUSSIAN: [EnsembleKind; 3] = [Self::Goe, Self::Gue, Self::Gse];

    /// Dyson index; 0 labels uncorrelated levels.
    pub fn beta(self) -> u8 {
        match self {
            Self::Poisson => 0,
            Self::Goe => 1,
            Self::Gue => 2,
            Self::Gse => 4,
        }
    }

    pub fn from_beta(beta: u8) -> Result<Self, EnsembleError> {
        match beta {
            0 => Ok(Self::Poisson),
            1 => Ok(Self::Goe),
            2 => Ok(Self::Gue),
            4 => Ok(Self::Gse),
            b => Err(EnsembleError::InvalidBeta(b)),
        }
    }

    pub fn is_gaussian(self) -> bool {
        self != Self::Poisson
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Poisson => "poisson",
            Self::Goe => "goe",
            Self::Gue => "gue",
            Self::Gse => "gse",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = EnsembleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(Self::Poisson),
            "goe" => Ok(Self::Goe),
            "gue" => Ok(Self::Gue),
            "gse" => Ok(Self::Gse),
            other => Err(EnsembleError::UnknownKind(other.to_string())),
        }
    }
}

/// Sorted eigenvalues of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub kind: EnsembleKind,
    pub energies: Vec<f64>,
    pub seed: u64,
}

impl SpectrumSample {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub realizations: usize,
    pub master_seed: u64,
}

impl SamplerConfig {
    pub fn new(kind: EnsembleKind, dim: usize, realizations: usize, master_seed: u64) -> Result<Self, EnsembleError> {
        if dim < 2 {
            return Err(EnsembleError::DimTooSmall(dim));
        }
        if realizations == 0 {
            return Err(EnsembleError::NoRealizations);
        }
        Ok(Self {
            kind,
            dim,
            realizations,
            master_seed,
        })
    }

    /// All realizations, in index order.
    pub fn sample_all(&self) -> Result<Vec<SpectrumSample>, EnsembleError> {
        par::try_map_indices(self.realizations, |i| {
            sample_spectrum(self.kind, self.dim, derive_seed(self.master_seed, i as u64))
        })
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master_seed`.
///
/// Both stages are bijections of `u64`, so distinct masters give distinct
/// seeds for a fixed index and distinct indices give distinct seeds for a
/// fixed master.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix(splitmix(master_seed).wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

pub fn sample_spectrum(kind: EnsembleKind, n: usize, seed: u64) -> Result<SpectrumSample, EnsembleError> {
    if n < 2 {
        return Err(EnsembleError::DimTooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let energies = match kind {
        EnsembleKind::Poisson => poisson_levels(n, &mut rng),
        EnsembleKind::Goe => {
            let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            hermitian_eigenvalues(&((&g + g.transpose()) * 0.5))?
        }
        EnsembleKind::Gue => {
            let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            hermitian_eigenvalues(&((&g + g.adjoint()) * Complex64::new(0.5, 0.0)))?
        }
        EnsembleKind::Gse => kramers_dedup(&gse_embedded(n, &mut rng)?)?,
    };
    Ok(SpectrumSample { kind, energies, seed })
}

/// Cumulative sums of independent unit-mean exponential gaps.
fn poisson_levels(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut e = 0.0;
    (0..n)
        .map(|_| {
            let gap: f64 = rng.sample(Exp1);
            e += gap;
            e
        })
        .collect()
}

fn gse_embedded(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, EnsembleError> {
    // quaternion q = a + b i + c j + d k  ->  [[a + ib, c + id], [-c + id, a - ib]]
    let mut g = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let c: f64 = rng.sample(StandardNormal);
            let d: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(a, b);
            let w = Complex64::new(c, d);
            g[(2 * i, 2 * j)] = z;
            g[(2 * i, 2 * j + 1)] = w;
            g[(2 * i + 1, 2 * j)] = -w.conj();
            g[(2 * i + 1, 2 * j + 1)] = z.conj();
        }
    }
    hermitian_eigenvalues(&((&g + g.adjoint()) * Complex64::new(0.5, 0.0)))
}

/// All `2N` eigenvalues of a GSE matrix in its complex embedding, sorted.
pub fn sample_gse_embedded(n: usize, seed: u64) -> Result<Vec<f64>, EnsembleError> {
    if n < 2 {
        return Err(EnsembleError::DimTooSmall(n));
    }
    gse_embedded(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Keep one level per Kramers pair after checking the pairing.
pub fn kramers_dedup(sorted: &[f64]) -> Result<Vec<f64>, EnsembleError> {
    let width = sorted.last().copied().unwrap_or(0.0) - sorted.first().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(sorted.len() / 2);
    for pair in sorted.chunks(2) {
        let gap = if pair.len() == 2 { pair[1] - pair[0] } else { f64::INFINITY };
        if gap > 1e-6 * width {
            return Err(EnsembleError::Kramers { gap, width });
        }
        out.push(pair[0]);
    }
    Ok(out)
}

/// Sorted eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn hermitian_eigenvalues<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<Vec<f64>, EnsembleError> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(EnsembleError::Eigensolver);
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Wigner semicircle mean density, normalized to one, for the sampling
/// convention above.
pub fn semicircle_density(e: f64, n: usize, beta: u8) -> Result<f64, EnsembleError> {
    if !matches!(beta, 1 | 2 | 4) {
        return Err(EnsembleError::InvalidBeta(beta));
    }
    let b = beta as f64;
    let r2 = 2.0 * n as f64 * b;
    let inside = r2 - e * e;
    if inside <= 0.0 {
        return Ok(0.0);
    }
    Ok(inside.sqrt() / (std::f64::consts::PI * b * n as f64))
}

/// Radius `√(2Nβ)` of the semicircle support.
pub fn semicircle_radius(n: usize, beta: u8) -> f64 {
    (2.0 * n as f64 * beta as f64).sqrt()
}
