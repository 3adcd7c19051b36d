//! Full, partial and even/odd SFFs built from neighbor components, the
//! connected SFF of the Gaussian ensembles, dip and Thouless times, the
//! nearest-neighbor toy model and the autocorrelation decomposition.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Curve, GridError, TimeGrid};
use crate::ensembles::EnsembleKind;
use crate::knsff::{f_exact, f_poisson, f_with_mode, weight, KnsffError, TransformMode};
use crate::par;
use crate::spacings::{surmise_params, SpacingError};
use crate::specfun::{hyp1f1_neg, log_gamma, SpecfunError};
use crate::unfold::UnfoldedSpectrum;

/// Heisenberg time of unfolded spectra, where the plateau starts.
pub const PLATEAU_TIME: f64 = 2.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Knsff(#[from] KnsffError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Spacing(#[from] SpacingError),
    #[error("dimension N={0} too small (need at least {1})")]
    DimTooSmall(usize, usize),
    #[error("cutoff K={k} outside [0, {max}]")]
    CutoffOutOfRange { k: usize, max: usize },
    #[error("spectra have different dimensions ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("no spectra given")]
    Empty,
    #[error("expected {want} neighbor components, got {got}")]
    ComponentCount { want: usize, got: usize },
    #[error("curve has no interior relative maximum")]
    NoRelativeMax,
    #[error("log-ratio never stays below epsilon={0}")]
    NeverBelow(f64),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("every point of the log-ratio is undefined")]
    AllUndefined,
    #[error("operator has zero norm")]
    ZeroOperator,
    #[error("operator is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("|O_ij| != |O_ji| at ({0}, {1})")]
    NotHermitian(usize, usize),
    #[error("connected SFF is defined for Gaussian ensembles only")]
    NotGaussian,
}

pub type Result<T> = std::result::Result<T, AssemblyError>;

fn check_spectra(spectra: &[UnfoldedSpectrum], min_dim: usize) -> Result<usize> {
    let first = spectra.first().ok_or(AssemblyError::Empty)?;
    let n = first.dim();
    if let Some(bad) = spectra.iter().find(|s| s.dim() != n) {
        return Err(AssemblyError::DimMismatch(n, bad.dim()));
    }
    if n < min_dim {
        return Err(AssemblyError::DimTooSmall(n, min_dim));
    }
    Ok(n)
}

/// Neighbor transform `f_t^(k)` for any ensemble kind.
pub fn neighbor_transform(kind: EnsembleKind, k: usize, t: f64, mode: TransformMode) -> Result<f64> {
    Ok(match kind {
        EnsembleKind::Poisson => f_poisson(k, t),
        g => f_with_mode(k, g.beta(), t, mode)?,
    })
}

/// Evaluates `Σ_k c_k f^(k)(t)` quickly by caching per-k surmise constants.
struct TransformTable {
    kind: EnsembleKind,
    mode: TransformMode,
    // (omega, alpha) per k, index k-1
    approx: Vec<(f64, f64)>,
}

impl TransformTable {
    fn new(kind: EnsembleKind, k_max: usize, mode: TransformMode) -> Result<Self> {
        let approx = if kind.is_gaussian() {
            (1..=k_max)
                .map(|k| surmise_params(k, kind.beta()).map(|p| (p.omega, p.alpha)))
                .collect::<std::result::Result<_, _>>()?
        } else {
            Vec::new()
        };
        Ok(Self { kind, mode, approx })
    }

    fn eval(&self, k: usize, t: f64) -> Result<f64> {
        let exact = match self.mode {
            TransformMode::Exact => true,
            TransformMode::Approx => false,
            TransformMode::Auto => k <= 5,
        };
        match self.kind {
            EnsembleKind::Poisson => Ok(f_poisson(k, t)),
            g if exact => Ok(f_exact(k, g.beta(), t)?),
            _ => {
                let (w, a) = self.approx[k - 1];
                let wt = w * t;
                let x = wt * wt / (2.0 * a);
                Ok((-x / 2.0).exp() * (wt.cos() + wt / (12.0 * a) * (x - 3.0) * wt.sin()))
            }
        }
    }
}

/// `offset + Σ_{k ∈ ks} C_N^(k) f^(k)` on every grid point.
fn analytic_sum(
    kind: EnsembleKind,
    n: usize,
    grid: &TimeGrid,
    mode: TransformMode,
    ks: &[usize],
    offset: f64,
    label: &str,
) -> Result<Curve> {
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let table = TransformTable::new(kind, k_max, mode)?;
    let values = par::try_map_indices(grid.len(), |i| {
        let t = grid.at(i);
        let mut acc = offset;
        for &k in ks {
            acc += weight(n, k) * table.eval(k, t)?;
        }
        Ok::<_, AssemblyError>(acc)
    })?;
    Ok(Curve::new(*grid, values, label)?)
}

/// Ensemble-averaged `|Σ_i e^{-iE_i t}|² / N²`.
pub fn full_sff_numeric(spectra: &[UnfoldedSpectrum], grid: &TimeGrid) -> Result<Curve> {
    let n = check_spectra(spectra, 2)?;
    let norm = n as f64 * n as f64 * spectra.len() as f64;
    let values = par::map_indices(grid.len(), |i| {
        let t = grid.at(i);
        let mut total = 0.0;
        for u in spectra {
            let (mut re, mut im) = (0.0, 0.0);
            for &e in &u.energies {
                let (s, c) = (e * t).sin_cos();
                re += c;
                im -= s;
            }
            total += re * re + im * im;
        }
        total / norm
    });
    Ok(Curve::new(*grid, values, "S")?)
}

/// Closed-form full SFF of a Gaussian ensemble (`1/N + Σ_k C_N^(k) f^(k)`).
pub fn full_sff_analytic(beta: u8, n: usize, grid: &TimeGrid, mode: TransformMode) -> Result<Curve> {
    let kind = EnsembleKind::from_beta(beta).map_err(|_| AssemblyError::NotGaussian)?;
    full_sff_reference(kind, n, grid, mode)
}

/// Exact full SFF of Poisson levels with unit mean spacing.
pub fn full_sff_poisson(n: usize, grid: &TimeGrid) -> Result<Curve> {
    full_sff_reference(EnsembleKind::Poisson, n, grid, TransformMode::Auto)
}

/// Closed-form full SFF for any ensemble kind.
pub fn full_sff_reference(kind: EnsembleKind, n: usize, grid: &TimeGrid, mode: TransformMode) -> Result<Curve> {
    partial_sff_reference(kind, n, n.saturating_sub(1), grid, mode)
}

/// Closed-form partial SFF `1/N + Σ_{k=1}^{K} S^(k)`.
pub fn partial_sff_reference(kind: EnsembleKind, n: usize, cutoff: usize, grid: &TimeGrid, mode: TransformMode) -> Result<Curve> {
    if n < 2 {
        return Err(AssemblyError::DimTooSmall(n, 2));
    }
    if cutoff > n - 1 {
        return Err(AssemblyError::CutoffOutOfRange { k: cutoff, max: n - 1 });
    }
    let ks: Vec<usize> = (1..=cutoff).collect();
    analytic_sum(kind, n, grid, mode, &ks, 1.0 / n as f64, &format!("S_K{cutoff}"))
}

/// Partial SFF from precomputed components (`components[k-1]` is `S^(k)`).
pub fn partial_sff(components: &[Curve], n: usize, cutoff: usize) -> Result<Curve> {
    if n < 2 {
        return Err(AssemblyError::DimTooSmall(n, 2));
    }
    if cutoff > n - 1 {
        return Err(AssemblyError::CutoffOutOfRange { k: cutoff, max: n - 1 });
    }
    if components.len() < cutoff {
        return Err(AssemblyError::ComponentCount {
            want: cutoff,
            got: components.len(),
        });
    }
    let grid = components.first().ok_or(AssemblyError::Empty)?.grid;
    let mut values = vec![1.0 / n as f64; grid.len()];
    for c in &components[..cutoff] {
        if c.grid != grid {
            return Err(AssemblyError::Grid(GridError::LengthMismatch {
                grid: grid.len(),
                values: c.len(),
            }));
        }
        for (v, x) in values.iter_mut().zip(&c.values) {
            *v += x;
        }
    }
    Ok(Curve::new(grid, values, format!("S_K{cutoff}"))?)
}

/// Monte-Carlo partial SFF: realization average of `1/N + Σ_{k≤K} (2/N²) Σ_i cos(t s_i^(k))`.
pub fn partial_sff_numeric(spectra: &[UnfoldedSpectrum], cutoff: usize, grid: &TimeGrid) -> Result<Curve> {
    let n = check_spectra(spectra, 2)?;
    if cutoff > n - 1 {
        return Err(AssemblyError::CutoffOutOfRange { k: cutoff, max: n - 1 });
    }
    let w = 2.0 / (n as f64 * n as f64);
    let r = spectra.len() as f64;
    let values = par::map_indices(grid.len(), |i| {
        let t = grid.at(i);
        let mut total = 0.0;
        for u in spectra {
            let e = &u.energies;
            for k in 1..=cutoff {
                for j in 0..n - k {
                    total += (t * (e[j + k] - e[j])).cos();
                }
            }
        }
        1.0 / n as f64 + w * total / r
    });
    Ok(Curve::new(*grid, values, format!("S_K{cutoff}"))?)
}

/// Closed-form neighbor components `S^(1..=k_max)`.
pub fn analytic_components(kind: EnsembleKind, n: usize, k_max: usize, grid: &TimeGrid, mode: TransformMode) -> Result<Vec<Curve>> {
    if k_max > n.saturating_sub(1) {
        return Err(AssemblyError::CutoffOutOfRange {
            k: k_max,
            max: n.saturating_sub(1),
        });
    }
    let table = TransformTable::new(kind, k_max, mode)?;
    let rows = par::try_map_indices(k_max, |j| {
        let k = j + 1;
        let c = weight(n, k);
        grid.times()
            .into_iter()
            .map(|t| table.eval(k, t).map(|f| c * f))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.into_iter()
        .enumerate()
        .map(|(j, v)| Ok(Curve::new(*grid, v, format!("S_k{}", j + 1))?))
        .collect()
}

/// Where even and odd neighbor sums come from.
#[derive(Debug, Clone, Copy)]
pub enum EvenOddSource<'a> {
    Analytic { kind: EnsembleKind, mode: TransformMode },
    Spectra(&'a [UnfoldedSpectrum]),
}

/// Split the SFF into even- and odd-k neighbor sums, each carrying `1/(2N)`.
pub fn even_odd_sums(n: usize, source: EvenOddSource<'_>, grid: &TimeGrid) -> Result<(Curve, Curve)> {
    if n < 3 {
        return Err(AssemblyError::DimTooSmall(n, 3));
    }
    let half = 0.5 / n as f64;
    match source {
        EvenOddSource::Analytic { kind, mode } => {
            let even: Vec<usize> = (2..n).step_by(2).collect();
            let odd: Vec<usize> = (1..n).step_by(2).collect();
            Ok((
                analytic_sum(kind, n, grid, mode, &even, half, "even")?,
                analytic_sum(kind, n, grid, mode, &odd, half, "odd")?,
            ))
        }
        EvenOddSource::Spectra(spectra) => {
            let m = check_spectra(spectra, 3)?;
            if m != n {
                return Err(AssemblyError::DimMismatch(n, m));
            }
            // same-parity pairs have even k: |A|² + |B|² - N, opposite parity 2 Re(A B̄)
            let norm = 1.0 / (n as f64 * n as f64);
            let r = spectra.len() as f64;
            let pairs = par::map_indices(grid.len(), |i| {
                let t = grid.at(i);
                let (mut se, mut so) = (0.0, 0.0);
                for u in spectra {
                    let mut a = Complex64::new(0.0, 0.0);
                    let mut b = Complex64::new(0.0, 0.0);
                    for (j, &e) in u.energies.iter().enumerate() {
                        let z = Complex64::from_polar(1.0, -e * t);
                        if j % 2 == 0 {
                            a += z;
                        } else {
                            b += z;
                        }
                    }
                    se += a.norm_sqr() + b.norm_sqr() - n as f64;
                    so += 2.0 * (a * b.conj()).re;
                }
                (half + norm * se / r, half + norm * so / r)
            });
            let (even, odd): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            Ok((Curve::new(*grid, even, "even")?, Curve::new(*grid, odd, "odd")?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConnectedKind {
    Goe,
    Gue,
    Gse,
}

impl ConnectedKind {
    /// Default Thouless tolerance for this symmetry class.
    pub fn default_epsilon(self) -> f64 {
        match self {
            Self::Gse => 0.25,
            _ => 0.1,
        }
    }
}

impl TryFrom<EnsembleKind> for ConnectedKind {
    type Error = AssemblyError;

    fn try_from(kind: EnsembleKind) -> Result<Self> {
        match kind {
            EnsembleKind::Goe => Ok(Self::Goe),
            EnsembleKind::Gue => Ok(Self::Gue),
            EnsembleKind::Gse => Ok(Self::Gse),
            EnsembleKind::Poisson => Err(AssemblyError::NotGaussian),
        }
    }
}

/// Universal connected SFF with plateau `1/N` reached at `t = 2π`.
///
/// The GSE logarithm uses `|1 - t/2π|` and is capped at `1e6/N` at its
/// singularity.
pub fn connected_sff(kind: ConnectedKind, n: usize, t: f64) -> f64 {
    let nf = n as f64;
    let t = t.abs();
    match kind {
        ConnectedKind::Gue if t <= 2.0 * PI => t / (2.0 * PI * nf),
        ConnectedKind::Gue => 1.0 / nf,
        ConnectedKind::Goe if t <= 2.0 * PI => t / (PI * nf) - t / (2.0 * PI * nf) * (1.0 + t / PI).ln(),
        ConnectedKind::Goe => 2.0 / nf - t / (2.0 * PI * nf) * ((t + PI) / (t - PI)).ln(),
        ConnectedKind::Gse if t <= 4.0 * PI => {
            let v = t / (4.0 * PI * nf) - t / (8.0 * PI * nf) * (1.0 - t / (2.0 * PI)).abs().ln();
            if v.is_finite() {
                v.min(1e6 / nf)
            } else {
                1e6 / nf
            }
        }
        ConnectedKind::Gse => 1.0 / nf,
    }
}

/// `|log₁₀(S/b)|`, undefined (NaN) where `S ≤ 0` or `b ≤ 0`.
pub fn delta_sff(curve: &Curve, kind: ConnectedKind, n: usize) -> Result<Curve> {
    let values: Vec<f64> = curve
        .points()
        .map(|(t, s)| {
            let b = connected_sff(kind, n, t);
            if s > 0.0 && b > 0.0 {
                (s / b).log10().abs()
            } else {
                f64::NAN
            }
        })
        .collect();
    if values.iter().all(|v| v.is_nan()) {
        return Err(AssemblyError::AllUndefined);
    }
    Ok(Curve::new(curve.grid, values, "delta")?)
}

/// Indices (left edges) of interior discrete relative maxima.
pub fn relative_maxima(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = values.len();
    let mut i = 1;
    while i + 1 < n {
        let v = values[i];
        let mut j = i;
        while j + 1 < n && values[j + 1] == v {
            j += 1;
        }
        if j + 1 < n && v > values[i - 1] && v > values[j + 1] {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// Time of the lowest interior relative maximum (earliest on ties).
pub fn dip_time(curve: &Curve) -> Result<f64> {
    let mut best: Option<usize> = None;
    for i in relative_maxima(&curve.values) {
        if best.is_none_or(|b| curve.values[i] < curve.values[b]) {
            best = Some(i);
        }
    }
    best.map(|i| curve.grid.at(i)).ok_or(AssemblyError::NoRelativeMax)
}

/// Start of the final stretch where the log-ratio stays below `epsilon`,
/// linearly interpolated at the crossing. Undefined points are skipped.
pub fn thouless_time(delta: &Curve, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(AssemblyError::BadEpsilon(epsilon));
    }
    let defined: Vec<(f64, f64)> = delta.points().filter(|(_, d)| !d.is_nan()).collect();
    let &(_, last) = defined.last().ok_or(AssemblyError::AllUndefined)?;
    if last >= epsilon {
        return Err(AssemblyError::NeverBelow(epsilon));
    }
    match defined.iter().rposition(|&(_, d)| d >= epsilon) {
        None => Ok(defined[0].0),
        Some(j) => {
            let (t0, d0) = defined[j];
            let (t1, d1) = defined[j + 1];
            if d0.is_infinite() {
                return Ok(t1);
            }
            Ok(t0 + (d0 - epsilon) / (d0 - d1) * (t1 - t0))
        }
    }
}

/// Time scales extracted from one partial SFF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSffResult {
    #[serde(rename = "K")]
    pub cutoff: usize,
    #[serde(skip)]
    pub curve: Option<Curve>,
    pub epsilon: f64,
    pub t_dip: Option<f64>,
    pub t_thouless: Option<f64>,
    pub plateau_time: f64,
}

/// Dip and Thouless times of a partial SFF; a missing feature becomes `None`.
pub fn time_scales(curve: &Curve, cutoff: usize, kind: ConnectedKind, n: usize, epsilon: f64) -> Result<PartialSffResult> {
    let t_dip = match dip_time(curve) {
        Ok(t) => Some(t),
        Err(AssemblyError::NoRelativeMax) => None,
        Err(e) => return Err(e),
    };
    let t_thouless = match delta_sff(curve, kind, n).and_then(|d| thouless_time(&d, epsilon)) {
        Ok(t) => Some(t),
        Err(AssemblyError::NeverBelow(_) | AssemblyError::AllUndefined) => None,
        Err(e) => return Err(e),
    };
    Ok(PartialSffResult {
        cutoff,
        curve: Some(curve.clone()),
        epsilon,
        t_dip,
        t_thouless,
        plateau_time: PLATEAU_TIME,
    })
}

/// Characteristic function `∫ P(s) e^{its} ds` of the nearest-neighbor surmise.
pub fn toy_transform(beta: u8, t: f64) -> Result<Complex64> {
    let p = surmise_params(1, beta)?;
    let b = beta as f64;
    let x = t * t / (4.0 * p.a_alpha);
    let mean = (log_gamma(b / 2.0 + 1.0)? - log_gamma((b + 1.0) / 2.0)? - 0.5 * p.a_alpha.ln()).exp();
    let re = hyp1f1_neg((b + 1.0) / 2.0, 0.5, x)?;
    let im = t * mean * hyp1f1_neg(b / 2.0 + 1.0, 1.5, x)?;
    Ok(Complex64::new(re, im))
}

/// `Re(F^k)`: k-th neighbor transform when spacings are independent.
pub fn toy_term(k: usize, beta: u8, t: f64) -> Result<f64> {
    Ok(toy_transform(beta, t)?.powi(k as i32).re)
}

/// SFF of a spectrum whose only correlations are between nearest neighbors.
pub fn toy_sff(beta: u8, n: usize, grid: &TimeGrid) -> Result<Curve> {
    if n < 2 {
        return Err(AssemblyError::DimTooSmall(n, 2));
    }
    let values = par::try_map_indices(grid.len(), |i| {
        let f = toy_transform(beta, grid.at(i))?;
        let mut power = Complex64::new(1.0, 0.0);
        let mut acc = 1.0 / n as f64;
        for k in 1..n {
            power *= f;
            acc += weight(n, k) * power.re;
        }
        Ok::<_, AssemblyError>(acc)
    })?;
    Ok(Curve::new(*grid, values, "S_toy")?)
}

/// How the per-k autocorrelation curves are evaluated.
#[derive(Debug, Clone, Copy)]
pub enum AutocorrSource<'a> {
    /// Empirical, weighted by the operator elements and averaged over spectra.
    Spectra(&'a [UnfoldedSpectrum]),
    /// `O_N^(k) f^(k)` with the closed-form neighbor transforms.
    Ensemble { kind: EnsembleKind, mode: TransformMode },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrDecomposition {
    pub diag_term: f64,
    /// `O_N^(k)` at index `k-1`.
    pub coefficients: Vec<f64>,
    pub curves: Vec<Curve>,
    pub total: Curve,
}

/// Split `C_t = Σ_ij |O_ij|² e^{it(E_i-E_j)} / 𝒩²` into neighbor contributions.
pub fn autocorr_decompose(op: &DMatrix<f64>, source: AutocorrSource<'_>, grid: &TimeGrid) -> Result<AutocorrDecomposition> {
    let (n, m) = op.shape();
    if n != m {
        return Err(AssemblyError::NotSquare(n, m));
    }
    if n < 2 {
        return Err(AssemblyError::DimTooSmall(n, 2));
    }
    let scale = op.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Err(AssemblyError::ZeroOperator);
    }
    for i in 0..n {
        for j in i + 1..n {
            if (op[(i, j)].abs() - op[(j, i)].abs()).abs() > 1e-12 * scale {
                return Err(AssemblyError::NotHermitian(i, j));
            }
        }
    }
    let norm2: f64 = op.iter().map(|v| v * v).sum();
    let diag_term = (0..n).map(|i| op[(i, i)].powi(2)).sum::<f64>() / norm2;
    let coefficients: Vec<f64> = (1..n)
        .map(|k| 2.0 / norm2 * (0..n - k).map(|i| op[(i, i + k)].powi(2)).sum::<f64>())
        .collect();
    let curves: Vec<Curve> = match source {
        AutocorrSource::Spectra(spectra) => {
            let dim = check_spectra(spectra, 2)?;
            if dim != n {
                return Err(AssemblyError::DimMismatch(n, dim));
            }
            let r = spectra.len() as f64;
            let rows = par::map_indices(n - 1, |j| {
                let k = j + 1;
                let w: Vec<f64> = (0..n - k).map(|i| 2.0 / norm2 * op[(i, i + k)].powi(2)).collect();
                grid.times()
                    .into_iter()
                    .map(|t| {
                        let mut total = 0.0;
                        for u in spectra {
                            let e = &u.energies;
                            for (i, wi) in w.iter().enumerate() {
                                total += wi * (t * (e[i + k] - e[i])).cos();
                            }
                        }
                        total / r
                    })
                    .collect::<Vec<_>>()
            });
            rows.into_iter()
                .enumerate()
                .map(|(j, v)| Curve::new(*grid, v, format!("C_k{}", j + 1)))
                .collect::<std::result::Result<_, _>>()?
        }
        AutocorrSource::Ensemble { kind, mode } => {
            let table = TransformTable::new(kind, n - 1, mode)?;
            let rows = par::try_map_indices(n - 1, |j| {
                let k = j + 1;
                grid.times()
                    .into_iter()
                    .map(|t| table.eval(k, t).map(|f| coefficients[j] * f))
                    .collect::<Result<Vec<_>>>()
            })?;
            rows.into_iter()
                .enumerate()
                .map(|(j, v)| Curve::new(*grid, v, format!("C_k{}", j + 1)))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let mut total = vec![diag_term; grid.len()];
    for c in &curves {
        for (v, x) in total.iter_mut().zip(&c.values) {
            *v += x;
        }
    }
    Ok(AutocorrDecomposition {
        diag_term,
        coefficients,
        total: Curve::new(*grid, total, "C")?,
        curves,
    })
}
