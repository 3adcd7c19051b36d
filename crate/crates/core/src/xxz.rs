//! Disordered XXZ chain in the zero-magnetization sector: Hamiltonian,
//! spectra, level-spacing ratios and disorder-averaged form factors.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{self, AssemblyError, ConnectedKind};
use crate::curve::{Curve, TimeGrid};
use crate::ensembles::{derive_seed, hermitian_eigenvalues, EnsembleError};
use crate::knsff::{self, KnsffError, NumericMinimum};
use crate::par;
use crate::unfold::{unfold_polynomial_levels, UnfoldError, UnfoldedSpectrum, UnfoldingMethod};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XxzError {
    #[error("chain length must be even, got {0}")]
    OddLength(usize),
    #[error("chain length must be in 2..=20, got {0}")]
    LengthRange(usize),
    #[error("periodic chains need L >= 4, got {0}")]
    PeriodicTooShort(usize),
    #[error("disorder width must be finite and non-negative, got {0}")]
    BadDisorder(f64),
    #[error("state {0:#b} is outside the half-filling sector")]
    StateOutsideSector(u32),
    #[error("{got} disorder fields given for a chain of {want} sites")]
    FieldCount { want: usize, got: usize },
    #[error("window of {want} levels exceeds the dimension {dim}")]
    WindowTooLarge { want: usize, dim: usize },
    #[error("need at least 2 usable spacings, got {0}")]
    TooFewSpacings(usize),
    #[error("need at least one realization")]
    NoRealizations,
    #[error(transparent)]
    Eigen(#[from] EnsembleError),
    #[error(transparent)]
    Unfold(#[from] UnfoldError),
    #[error(transparent)]
    Knsff(#[from] KnsffError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

pub type Result<T> = std::result::Result<T, XxzError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "Jz")]
    pub jz: f64,
    #[serde(rename = "W")]
    pub disorder: f64,
    pub periodic: bool,
}

impl XxzParams {
    pub fn new(length: usize, jz: f64, disorder: f64) -> Result<Self> {
        let p = Self {
            length,
            jz,
            disorder,
            periodic: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_length(self.length)?;
        if self.periodic && self.length < 4 {
            return Err(XxzError::PeriodicTooShort(self.length));
        }
        if !(self.disorder >= 0.0 && self.disorder.is_finite()) {
            return Err(XxzError::BadDisorder(self.disorder));
        }
        Ok(())
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.length;
        let open = l - 1;
        let count = if self.periodic { l } else { open };
        (0..count).map(|n| (n, (n + 1) % l)).collect()
    }
}

fn check_length(l: usize) -> Result<()> {
    if !l.is_multiple_of(2) {
        return Err(XxzError::OddLength(l));
    }
    if !(2..=20).contains(&l) {
        return Err(XxzError::LengthRange(l));
    }
    Ok(())
}

/// Half-filling basis: bit `n` set means site `n` is up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    pub length: usize,
    pub n_up: usize,
    pub states: Vec<u32>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }
}

pub fn build_basis(length: usize) -> Result<SectorBasis> {
    check_length(length)?;
    let n_up = length / 2;
    let states = (0u32..1 << length).filter(|s| s.count_ones() as usize == n_up).collect();
    Ok(SectorBasis { length, n_up, states })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub fields: Vec<f64>,
    pub seed: u64,
}

/// On-site fields drawn uniformly from `[-W/2, W/2]`.
pub fn sample_disorder(length: usize, width: f64, seed: u64) -> DisorderRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = (0..length).map(|_| width * (rng.random::<f64>() - 0.5)).collect();
    DisorderRealization { fields, seed }
}

/// Dense sector Hamiltonian `Σ (SˣSˣ + SʸSʸ + Jz SᶻSᶻ) + Σ h_n Sᶻ_n`.
pub fn build_hamiltonian(p: &XxzParams, d: &DisorderRealization, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    p.validate()?;
    if d.fields.len() != p.length {
        return Err(XxzError::FieldCount {
            want: p.length,
            got: d.fields.len(),
        });
    }
    let dim = basis.dim();
    let bonds = p.bonds();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (a, &s) in basis.states.iter().enumerate() {
        let up = |n: usize| s >> n & 1 == 1;
        let mut diag = 0.0;
        for &(i, j) in &bonds {
            if up(i) == up(j) {
                diag += 0.25 * p.jz;
            } else {
                diag -= 0.25 * p.jz;
                let flipped = s ^ (1 << i) ^ (1 << j);
                let b = basis.index_of(flipped).ok_or(XxzError::StateOutsideSector(flipped))?;
                h[(a, b)] += 0.5;
            }
        }
        for (n, hn) in d.fields.iter().enumerate() {
            diag += if up(n) { 0.5 * hn } else { -0.5 * hn };
        }
        h[(a, a)] = diag;
    }
    Ok(h)
}

/// `n_window` consecutive levels centred on index `⌊D/2⌋`.
pub fn spectrum_window(eigenvalues: &[f64], n_window: usize) -> Result<&[f64]> {
    let dim = eigenvalues.len();
    if n_window > dim {
        return Err(XxzError::WindowTooLarge { want: n_window, dim });
    }
    let start = (dim / 2).saturating_sub(n_window / 2).min(dim - n_window);
    Ok(&eigenvalues[start..start + n_window])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RStatistic {
    pub mean: f64,
    pub ratios: usize,
    /// Spacings below `1e-12` treated as degeneracies and left out.
    pub excluded: usize,
}

/// Mean of `min(s_n, s_{n+1}) / max(s_n, s_{n+1})` over consecutive spacings.
pub fn r_statistic(spacings: &[f64]) -> Result<RStatistic> {
    if spacings.len() < 2 {
        return Err(XxzError::TooFewSpacings(spacings.len()));
    }
    let degenerate = |s: f64| s.abs() < 1e-12;
    let excluded = spacings.iter().filter(|&&s| degenerate(s)).count();
    let mut total = 0.0;
    let mut ratios = 0;
    for w in spacings.windows(2) {
        if degenerate(w[0]) || degenerate(w[1]) {
            continue;
        }
        total += w[0].min(w[1]) / w[0].max(w[1]);
        ratios += 1;
    }
    if ratios == 0 {
        return Err(XxzError::TooFewSpacings(spacings.len() - excluded));
    }
    Ok(RStatistic {
        mean: total / ratios as f64,
        ratios,
        excluded,
    })
}

/// Levels discarded at each edge of the fit window after unfolding.
pub const EDGE_DISCARD: usize = 50;
/// Polynomial degree of the per-realization staircase fit.
pub const UNFOLD_DEGREE: usize = 3;
pub const UNFOLD_BINS: usize = 50;

/// Spectrum of one realization: window levels and their unfolded counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSpectrum {
    pub seed: u64,
    pub window: Vec<f64>,
    pub unfolded: UnfoldedSpectrum,
}

/// Diagonalize one disorder realization and unfold its central window.
///
/// The polynomial is fitted on `min(D, N_window + 100)` central levels and
/// up to 50 levels per edge are dropped afterwards.
pub fn realization_spectrum(p: &XxzParams, basis: &SectorBasis, n_window: usize, seed: u64) -> Result<RealizationSpectrum> {
    let dim = basis.dim();
    if n_window > dim {
        return Err(XxzError::WindowTooLarge { want: n_window, dim });
    }
    let d = sample_disorder(p.length, p.disorder, seed);
    let h = build_hamiltonian(p, &d, basis)?;
    let eig = hermitian_eigenvalues(&h)?;
    let fit_len = dim.min(n_window + 2 * EDGE_DISCARD);
    let fit = spectrum_window(&eig, fit_len)?;
    let (unfolded, resorted) = unfold_polynomial_levels(fit, UNFOLD_DEGREE)?;
    let cut = (fit_len - n_window) / 2;
    let window = fit[cut..cut + n_window].to_vec();
    Ok(RealizationSpectrum {
        seed,
        window,
        unfolded: UnfoldedSpectrum {
            energies: unfolded[cut..cut + n_window].to_vec(),
            method: UnfoldingMethod::PolynomialFit {
                eta: UNFOLD_DEGREE,
                n_bins: UNFOLD_BINS,
            },
            source: None,
            resorted,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub params: XxzParams,
    pub n_window: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub grid: TimeGrid,
    pub k_list: Vec<usize>,
    pub epsilon: f64,
    /// Largest neighbor order scanned for the deepest minimum.
    pub k_scan: usize,
    /// Points per minimum search window.
    pub scan_points: usize,
}

impl PipelineConfig {
    pub fn new(params: XxzParams, n_window: usize, n_realizations: usize, master_seed: u64) -> Self {
        Self {
            params,
            n_window,
            n_realizations,
            master_seed,
            grid: TimeGrid::default_linear(),
            k_list: vec![1, 10, 30],
            epsilon: 0.2,
            k_scan: n_window / 2,
            scan_points: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub dim: usize,
    pub seeds: Vec<u64>,
    pub r_mean: f64,
    pub r_excluded: usize,
    pub resorted: usize,
    pub k_list: Vec<usize>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
    #[serde(skip)]
    pub full_sff: Option<Curve>,
    pub minima: Vec<NumericMinimum>,
    pub k_star: usize,
    pub t_dip: Option<f64>,
    pub t_thouless: Option<f64>,
    pub epsilon: f64,
    #[serde(skip)]
    pub spectra: Vec<UnfoldedSpectrum>,
}

/// Disorder-averaged spectral statistics of the XXZ chain.
pub fn disorder_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.params.validate()?;
    if cfg.n_realizations == 0 {
        return Err(XxzError::NoRealizations);
    }
    let basis = build_basis(cfg.params.length)?;
    let seeds: Vec<u64> = (0..cfg.n_realizations as u64).map(|i| derive_seed(cfg.master_seed, i)).collect();
    let runs = par::try_map_indices(seeds.len(), |i| realization_spectrum(&cfg.params, &basis, cfg.n_window, seeds[i]))?;

    let mut r_total = 0.0;
    let mut r_excluded = 0;
    for run in &runs {
        let spacings: Vec<f64> = run.window.windows(2).map(|w| w[1] - w[0]).collect();
        let r = r_statistic(&spacings)?;
        r_total += r.mean;
        r_excluded += r.excluded;
    }
    let resorted = runs.iter().filter(|r| r.unfolded.resorted).count();
    let spectra: Vec<UnfoldedSpectrum> = runs.into_iter().map(|r| r.unfolded).collect();

    let curves = cfg
        .k_list
        .iter()
        .map(|&k| knsff::knsff_numeric(&spectra, k, &cfg.grid))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let k_scan = cfg.k_scan.clamp(1, cfg.n_window - 1);
    let minima = knsff::numeric_minima(&spectra, k_scan, cfg.scan_points)?;
    let k_star = knsff::deepest_k_numeric(&minima)?;
    let full = assembly::full_sff_numeric(&spectra, &cfg.grid)?;
    let scales = assembly::time_scales(&full, cfg.n_window - 1, ConnectedKind::Goe, cfg.n_window, cfg.epsilon)?;

    Ok(PipelineReport {
        dim: basis.dim(),
        seeds,
        r_mean: r_total / spectra.len() as f64,
        r_excluded,
        resorted,
        k_list: cfg.k_list.clone(),
        curves,
        full_sff: Some(full),
        minima,
        k_star,
        t_dip: scales.t_dip,
        t_thouless: scales.t_thouless,
        epsilon: cfg.epsilon,
        spectra,
    })
}
