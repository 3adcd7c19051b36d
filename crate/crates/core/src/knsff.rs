//! k-th neighbor spectral form factors: Monte-Carlo estimates, closed forms,
//! and the location and depth of their first minimum.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Curve, GridError, TimeGrid};
use crate::ensembles::EnsembleKind;
use crate::par;
use crate::spacings::{spacings_of, surmise_params, SpacingError, SurmiseParams};
use crate::specfun::{gauss_legendre, log_gamma, scaled_laguerre, CompensatedSum, SpecfunError};
use crate::unfold::UnfoldedSpectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnsffError {
    #[error(transparent)]
    Spacing(#[from] SpacingError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("neighbor order k={k} must satisfy 1 <= k <= {max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("spectra have different dimensions ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("no spectra given")]
    Empty,
    #[error("exact transform lost precision at k={k}, beta={beta}, t={t} (error estimate {estimate:e})")]
    PrecisionLoss { k: usize, beta: u8, t: f64, estimate: f64 },
    #[error("no minimum: the k=1 Poisson form factor decreases monotonically")]
    NoMinimum,
    #[error("minimum lies on the grid boundary")]
    Boundary,
    #[error("operation requires a Gaussian ensemble")]
    NotGaussian,
}

pub type Result<T> = std::result::Result<T, KnsffError>;

/// Weight `2(N-k)/N²` of the k-th neighbor term.
pub fn weight(n: usize, k: usize) -> f64 {
    2.0 * (n as f64 - k as f64) / (n as f64 * n as f64)
}

fn check_spectra(spectra: &[UnfoldedSpectrum]) -> Result<usize> {
    let first = spectra.first().ok_or(KnsffError::Empty)?;
    let n = first.dim();
    if let Some(bad) = spectra.iter().find(|s| s.dim() != n) {
        return Err(KnsffError::DimMismatch(n, bad.dim()));
    }
    Ok(n)
}

/// `(2/N²) Σ_i cos(t s_i)` for one spectrum on every grid time.
pub fn knsff_single(u: &UnfoldedSpectrum, k: usize, times: &[f64]) -> Result<Vec<f64>> {
    let n = u.dim();
    let s = spacings_of(&u.energies, k)?;
    let w = 2.0 / (n as f64 * n as f64);
    Ok(times
        .iter()
        .map(|&t| w * s.values.iter().map(|x| (t * x).cos()).sum::<f64>())
        .collect())
}

/// Ensemble average of the k-th neighbor SFF.
pub fn knsff_numeric(spectra: &[UnfoldedSpectrum], k: usize, grid: &TimeGrid) -> Result<Curve> {
    let n = check_spectra(spectra)?;
    if k == 0 || k >= n {
        return Err(KnsffError::KOutOfRange { k, max: n - 1 });
    }
    let spacings: Vec<Vec<f64>> = spectra
        .iter()
        .map(|u| spacings_of(&u.energies, k).map(|s| s.values))
        .collect::<std::result::Result<_, _>>()?;
    let w = 2.0 / (n as f64 * n as f64);
    let r = spectra.len() as f64;
    let values = par::map_indices(grid.len(), |i| {
        let t = grid.at(i);
        let mut total = 0.0;
        for s in &spacings {
            total += s.iter().map(|x| (t * x).cos()).sum::<f64>();
        }
        w * total / r
    });
    Ok(Curve::new(*grid, values, format!("S_k{k}"))?)
}

/// Cosine transform of the k-th neighbor surmise, evaluated through the
/// Laguerre-function representation.
///
/// The degree recurrence behind the Laguerre form is unstable for large
/// `k` at moderate `t`; when its error estimate exceeds `1e-10` the
/// transform is integrated directly with panelled Gauss-Legendre quadrature.
pub fn f_exact(k: usize, beta: u8, t: f64) -> Result<f64> {
    let p = surmise_params(k, beta)?;
    let x = t * t / (4.0 * p.a_alpha);
    let mu = p.alpha / 2.0;
    let g = scaled_laguerre(mu, -0.5, x)?;
    let pref = (0.5 * PI.ln() + log_gamma(mu + 1.0)? - log_gamma(mu + 0.5)?).exp();
    let estimate = g.error_estimate * pref;
    if estimate <= 1e-10 {
        return Ok(g.value * pref);
    }
    let coarse = cosine_transform(&p, t, 1);
    let fine = cosine_transform(&p, t, 2);
    let estimate = (fine - coarse).abs();
    if estimate > 1e-10 {
        return Err(KnsffError::PrecisionLoss { k, beta, t, estimate });
    }
    Ok(fine)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// `∫ P(s) cos(ts) ds` over the region where `ln P` is within 50 of its peak.
fn cosine_transform(p: &SurmiseParams, t: f64, refine: usize) -> f64 {
    let ln_p = |s: f64| p.ln_c_alpha + p.alpha * s.ln() - p.a_alpha * s * s;
    let peak = (p.alpha / (2.0 * p.a_alpha)).sqrt();
    let floor = ln_p(peak) - 50.0;
    let bisect = |mut below: f64, mut above: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (below + above);
            if ln_p(mid) < floor {
                below = mid;
            } else {
                above = mid;
            }
        }
        0.5 * (below + above)
    };
    let mut far = 2.0 * peak;
    while ln_p(far) >= floor {
        far *= 2.0;
    }
    let hi = bisect(far, peak);
    let lo = bisect(0.0, peak);
    let panels = refine * (16 + ((hi - lo) * t / PI).ceil() as usize);
    let h = (hi - lo) / panels as f64;
    let (nodes, weights) = gl20();
    let mut acc = CompensatedSum::new(0.0);
    for j in 0..panels {
        let mid = lo + (j as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights) {
            let s = mid + 0.5 * h * x;
            acc.add(0.5 * h * w * ln_p(s).exp() * (t * s).cos());
        }
    }
    acc.value()
}

/// Large-`k` approximation of the cosine transform.
pub fn f_approx(k: usize, beta: u8, t: f64) -> Result<f64> {
    let p = surmise_params(k, beta)?;
    let (w, a) = (p.omega, p.alpha);
    let wt = w * t;
    let x = wt * wt / (2.0 * a);
    Ok((-x / 2.0).exp() * (wt.cos() + wt / (12.0 * a) * (x - 3.0) * wt.sin()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    Exact,
    Approx,
    /// Exact for `k <= 5`, approximate above.
    Auto,
}

pub fn f_with_mode(k: usize, beta: u8, t: f64, mode: TransformMode) -> Result<f64> {
    match mode {
        TransformMode::Exact => f_exact(k, beta, t),
        TransformMode::Approx => f_approx(k, beta, t),
        TransformMode::Auto if k <= 5 => f_exact(k, beta, t),
        TransformMode::Auto => f_approx(k, beta, t),
    }
}

/// Closed-form k-th neighbor SFF of a Gaussian ensemble.
pub fn knsff_analytic(k: usize, beta: u8, n: usize, grid: &TimeGrid, mode: TransformMode) -> Result<Curve> {
    if k == 0 || k >= n {
        return Err(KnsffError::KOutOfRange { k, max: n.saturating_sub(1) });
    }
    let c = weight(n, k);
    let values = grid
        .times()
        .into_iter()
        .map(|t| f_with_mode(k, beta, t, mode).map(|f| c * f))
        .collect::<Result<Vec<_>>>()?;
    Ok(Curve::new(*grid, values, format!("S_k{k}"))?)
}

/// Characteristic function real part `cos(k arctan t) / (1+t²)^{k/2}` of a Gamma(k) spacing.
pub fn f_poisson(k: usize, t: f64) -> f64 {
    let kf = k as f64;
    (kf * t.atan()).cos() * (-0.5 * kf * t.mul_add(t, 1.0).ln()).exp()
}

pub fn knsff_poisson(k: usize, n: usize, grid: &TimeGrid) -> Result<Curve> {
    if k == 0 || k >= n {
        return Err(KnsffError::KOutOfRange { k, max: n.saturating_sub(1) });
    }
    let c = weight(n, k);
    Ok(Curve::from_fn(*grid, format!("S_k{k}"), |t| c * f_poisson(k, t)))
}

/// Closed-form curve for any ensemble kind.
pub fn knsff_reference(kind: EnsembleKind, k: usize, n: usize, grid: &TimeGrid, mode: TransformMode) -> Result<Curve> {
    match kind {
        EnsembleKind::Poisson => knsff_poisson(k, n, grid),
        g => knsff_analytic(k, g.beta(), n, grid, mode),
    }
}

/// Predicted time of the first minimum.
pub fn min_time(k: usize, kind: EnsembleKind) -> Result<f64> {
    if k == 0 {
        return Err(KnsffError::KOutOfRange { k, max: usize::MAX });
    }
    match kind {
        EnsembleKind::Poisson if k == 1 => Err(KnsffError::NoMinimum),
        EnsembleKind::Poisson => Ok((PI / (1.0 + k as f64)).tan()),
        g => Ok(PI / surmise_params(k, g.beta())?.omega),
    }
}

/// Predicted depth of the first minimum.
pub fn min_value(k: usize, kind: EnsembleKind, n: usize) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(KnsffError::KOutOfRange { k, max: n.saturating_sub(1) });
    }
    let c = weight(n, k);
    let kf = k as f64;
    match kind {
        EnsembleKind::Poisson if k == 1 => Err(KnsffError::NoMinimum),
        EnsembleKind::Poisson => {
            let phase = PI / (1.0 + kf);
            Ok(c * phase.cos().powi(k as i32) * (kf * phase).cos())
        }
        g => {
            let b = g.beta() as f64;
            Ok(-c * (-PI * PI / (2.0 * kf * (b * kf + b + 2.0))).exp())
        }
    }
}

/// Grid argmin refined by a parabola through the bracketing samples.
pub fn min_time_numeric(curve: &Curve) -> Result<f64> {
    let (idx, _) = curve
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(KnsffError::Empty)?;
    if idx == 0 || idx + 1 >= curve.len() {
        return Err(KnsffError::Boundary);
    }
    let (t0, t1, t2) = (curve.grid.at(idx - 1), curve.grid.at(idx), curve.grid.at(idx + 1));
    let (f0, f1, f2) = (curve.values[idx - 1], curve.values[idx], curve.values[idx + 1]);
    let num = (t1 - t0).powi(2) * (f1 - f2) - (t1 - t2).powi(2) * (f1 - f0);
    let den = (t1 - t0) * (f1 - f2) - (t1 - t2) * (f1 - f0);
    if den == 0.0 || !den.is_finite() {
        return Ok(t1);
    }
    Ok((t1 - 0.5 * num / den).clamp(t0, t2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeepestMethod {
    AnalyticExpansion,
    CubicRoot,
    NumericArgmin,
}

/// Nearest integer with ties going down.
fn round_half_down(x: f64) -> usize {
    let c = x.ceil();
    let v = if c - x >= 0.5 { x.floor() } else { c };
    v.max(1.0) as usize
}

/// Large-`N` expansion of the deepest neighbor order (not rounded).
pub fn deepest_k_expansion(kind: EnsembleKind, n: usize) -> f64 {
    let nf = n as f64;
    match kind {
        EnsembleKind::Poisson => PI / 2f64.sqrt() * nf.sqrt() - (1.0 + PI * PI / 4.0),
        g => {
            let b = g.beta() as f64;
            let c1 = (PI * PI / b).cbrt();
            let c0 = -(b + 2.0) / (3.0 * b);
            let cm = ((2.0 + b).powi(2) - 3.0 * b * PI * PI) / (9.0 * b.powf(5.0 / 3.0) * PI.powf(2.0 / 3.0));
            c1 * nf.cbrt() + c0 + cm / nf.cbrt()
        }
    }
}

/// Largest positive root of the stationarity cubic (not rounded).
pub fn deepest_k_cubic(kind: EnsembleKind, n: usize) -> f64 {
    let nf = n as f64;
    // monic coefficients of k³ + p k² + q k + r
    let (p, q, r) = match kind {
        EnsembleKind::Poisson => {
            let a = PI * PI / 2.0;
            let b = (4.0 * PI * PI + PI.powi(4)) / 8.0;
            (0.0, -(a * nf + b), 2.0 * b * nf)
        }
        g => {
            let b = g.beta() as f64;
            ((2.0 + b) / b, 0.0, -nf * PI * PI / b)
        }
    };
    let f = |k: f64| ((k + p) * k + q) * k + r;
    let df = |k: f64| (3.0 * k + 2.0 * p) * k + q;
    // start right of every root and run Newton downhill
    let mut k = 1.0 + p.abs() + q.abs().sqrt() + r.abs().cbrt();
    for _ in 0..200 {
        let step = f(k) / df(k);
        k -= step;
        if step.abs() < 1e-13 * k.abs().max(1.0) {
            break;
        }
    }
    k
}

pub fn deepest_k(kind: EnsembleKind, n: usize, method: DeepestMethod) -> Result<usize> {
    if n < 10 {
        return Err(KnsffError::KOutOfRange { k: n, max: 10 });
    }
    Ok(match method {
        DeepestMethod::AnalyticExpansion => round_half_down(deepest_k_expansion(kind, n)),
        DeepestMethod::CubicRoot => round_half_down(deepest_k_cubic(kind, n)),
        DeepestMethod::NumericArgmin => {
            let start = if kind == EnsembleKind::Poisson { 2 } else { 1 };
            let mut best = (start, f64::INFINITY);
            for k in start..n {
                let v = min_value(k, kind, n)?;
                if v < best.1 {
                    best = (k, v);
                }
            }
            best.0
        }
    })
}

/// Standard deviation `√(2α)/ω_k` of the Gaussian envelope.
pub fn envelope_width(k: usize, beta: u8) -> Result<f64> {
    let p = surmise_params(k, beta)?;
    Ok((2.0 * p.alpha).sqrt() / p.omega)
}

/// Oscillations inside one envelope width, `√(2α)/(2π)`.
pub fn oscillation_count(k: usize, beta: u8) -> Result<f64> {
    let p = surmise_params(k, beta)?;
    Ok((2.0 * p.alpha).sqrt() / (2.0 * PI))
}

/// First minimum of a Monte-Carlo knSFF searched on `t ∈ [0, 3π/k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericMinimum {
    pub k: usize,
    /// Refined location, or `None` when the lowest sample sits on the window edge.
    pub t_min: Option<f64>,
    pub value: f64,
}

/// Search window `[0, 3π/k]` used for numeric minima.
pub fn minimum_window(k: usize, n_points: usize) -> Result<TimeGrid> {
    Ok(TimeGrid::linear(0.0, 3.0 * PI / k as f64, n_points)?)
}

/// Lowest sampled value and refined location of the k-th neighbor SFF, `k = 1..=k_max`.
pub fn numeric_minima(spectra: &[UnfoldedSpectrum], k_max: usize, n_points: usize) -> Result<Vec<NumericMinimum>> {
    (1..=k_max)
        .map(|k| {
            let curve = knsff_numeric(spectra, k, &minimum_window(k, n_points)?)?;
            let value = curve.values.iter().copied().fold(f64::INFINITY, f64::min);
            let t_min = match min_time_numeric(&curve) {
                Ok(t) => Some(t),
                Err(KnsffError::Boundary) => None,
                Err(e) => return Err(e),
            };
            Ok(NumericMinimum { k, t_min, value })
        })
        .collect()
}

/// Neighbor order whose Monte-Carlo knSFF dips lowest.
pub fn deepest_k_numeric(minima: &[NumericMinimum]) -> Result<usize> {
    minima
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .map(|m| m.k)
        .ok_or(KnsffError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacings::surmise_pdf;
    use crate::unfold::UnfoldingMethod;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn numeric_at_zero_and_lattice() {
        let n = 30;
        let lattice = UnfoldedSpectrum::from_levels((0..n).map(|i| i as f64).collect(), UnfoldingMethod::Identity);
        let grid = TimeGrid::linear(0.0, 6.0, 61).unwrap();
        let c = knsff_numeric(std::slice::from_ref(&lattice), 1, &grid).unwrap();
        for (t, v) in c.points() {
            assert!((v - weight(n, 1) * t.cos()).abs() < 1e-13);
        }
        assert_eq!(c.values[0], weight(n, 1));
        assert!(knsff_numeric(std::slice::from_ref(&lattice), n, &grid).is_err());
        let short = UnfoldedSpectrum::from_levels(vec![0.0, 1.0, 2.0], UnfoldingMethod::Identity);
        assert_eq!(knsff_numeric(&[lattice, short], 1, &grid).unwrap_err(), KnsffError::DimMismatch(30, 3));
        assert_eq!(knsff_numeric(&[], 1, &grid).unwrap_err(), KnsffError::Empty);
    }

    #[test]
    fn exact_starts_at_one() {
        for beta in [1u8, 2, 4] {
            for k in 1..=50 {
                let f0 = f_exact(k, beta, 0.0).unwrap();
                assert!((f0 - 1.0).abs() < 1e-9, "k={k} beta={beta} f0={f0}");
            }
        }
    }

    #[test]
    fn exact_matches_cosine_quadrature() {
        for beta in [1u8, 2, 4] {
            for k in [1usize, 2, 5] {
                let p = surmise_params(k, beta).unwrap();
                for i in 0..=12 {
                    let t = 0.25 * i as f64;
                    let want = simpson(|s| surmise_pdf(&p, s) * (t * s).cos(), 0.0, k as f64 + 15.0, 40_000);
                    let got = f_exact(k, beta, t).unwrap();
                    assert!((got - want).abs() < 1e-6, "k={k} beta={beta} t={t}");
                }
            }
        }
    }

    #[test]
    fn exact_decays_past_envelope() {
        for beta in [1u8, 2, 4] {
            for k in [1usize, 2, 3, 8, 20] {
                if (k, beta) == (1, 1) {
                    continue;
                }
                let p = surmise_params(k, beta).unwrap();
                let t0 = 4.0 * (2.0 * p.alpha).sqrt() / p.omega;
                for j in 0..20 {
                    let t = t0 * (1.0 + 0.1 * j as f64);
                    assert!(f_exact(k, beta, t).unwrap().abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn goe_nearest_neighbor_tail_is_algebraic() {
        // linear repulsion P(s) ~ (π/2) s gives f(t) ~ -(π/2)/t² at large t
        for &t in &[20.0, 40.0, 80.0] {
            let f = f_exact(1, 1, t).unwrap();
            assert!((f * t * t + PI / 2.0).abs() < 0.05, "t={t} f={f}");
        }
    }

    #[test]
    fn approx_properties() {
        assert_eq!(f_approx(7, 2, 0.0).unwrap(), 1.0);
        let mut sup: f64 = 0.0;
        for i in 0..=400 {
            let t = 2.0 * PI * i as f64 / 400.0;
            sup = sup.max((f_approx(20, 2, t).unwrap() - f_exact(20, 2, t).unwrap()).abs());
        }
        assert!(sup < 0.02, "sup {sup}");
        // sine term vanishes where ω²t²/(2α) = 3
        let p = surmise_params(6, 1).unwrap();
        let t = (6.0 * p.alpha).sqrt() / p.omega;
        let wt = p.omega * t;
        let envelope = (-(wt * wt) / (4.0 * p.alpha)).exp();
        assert!((f_approx(6, 1, t).unwrap() - envelope * wt.cos()).abs() < 1e-14);
    }

    #[test]
    fn gse_k1_approx_near_first_minimum() {
        let tm = min_time(1, EnsembleKind::Gse).unwrap();
        let exact = f_exact(1, 4, tm).unwrap();
        let approx = f_approx(1, 4, tm).unwrap();
        assert!(((approx - exact) / exact).abs() < 0.1);
    }

    #[test]
    fn analytic_curve_bounds() {
        let grid = TimeGrid::linear(0.0, 3.0, 31).unwrap();
        let c = knsff_analytic(4, 2, 100, &grid, TransformMode::Auto).unwrap();
        assert!((c.values[0] - weight(100, 4)).abs() < 1e-15);
        assert!(knsff_analytic(100, 2, 100, &grid, TransformMode::Auto).is_err());
    }

    #[test]
    fn poisson_closed_form() {
        let grid = TimeGrid::linear(0.0, 20.0, 2001).unwrap();
        let c1 = knsff_poisson(1, 100, &grid).unwrap();
        assert!(c1.values.windows(2).all(|w| w[1] < w[0]));
        assert!(c1.values.iter().all(|v| *v > 0.0));
        for (t, v) in c1.points() {
            assert!((v - weight(100, 1) / (1.0 + t * t)).abs() < 1e-15);
        }
        let c3 = knsff_poisson(3, 100, &grid).unwrap();
        assert_eq!(c3.values[0], weight(100, 3));
        let (i, vmin) = c3.values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((grid.at(i) - 1.0).abs() < 0.011);
        assert!((vmin + 4.85e-3).abs() < 1e-8);
    }

    #[test]
    fn minimum_predictions() {
        assert!((min_time(3, EnsembleKind::Poisson).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(min_time(1, EnsembleKind::Poisson).unwrap_err(), KnsffError::NoMinimum);
        for kind in EnsembleKind::GAUSSIAN {
            let t = min_time(10, kind).unwrap();
            assert!((t - PI / 10.0).abs() / (PI / 10.0) < 0.01);
        }
        let gap = |k: usize| (min_time(k, EnsembleKind::Poisson).unwrap() - PI / k as f64).abs();
        assert!(gap(10) < 0.05);
        assert!(gap(40) < gap(10) && gap(10) < gap(3));
        assert!((min_value(3, EnsembleKind::Poisson, 100).unwrap() + 4.85e-3).abs() < 1e-12);
        let ratio = min_value(1, EnsembleKind::Goe, 100).unwrap() / -weight(100, 1);
        assert!((ratio - (-PI * PI / 8.0).exp()).abs() < 1e-15);
        assert!((ratio - 0.2912).abs() < 1e-4);
        assert_eq!(min_value(1, EnsembleKind::Poisson, 100).unwrap_err(), KnsffError::NoMinimum);
        for k in 1..60 {
            for kind in EnsembleKind::ALL {
                if kind == EnsembleKind::Poisson && k == 1 {
                    continue;
                }
                assert!(min_value(k, kind, 100).unwrap() < 0.0);
            }
        }
        // both approach the bare prefactor at large k
        for kind in EnsembleKind::ALL {
            let r = min_value(90, kind, 100).unwrap() / -weight(100, 90);
            assert!(r > 0.94, "{kind} {r}");
        }
    }

    #[test]
    fn numeric_minimum_refinement() {
        let grid = TimeGrid::linear(0.0, 2.0 * PI, 201).unwrap();
        let c = Curve::from_fn(grid, "cos", f64::cos);
        assert!((min_time_numeric(&c).unwrap() - PI).abs() < grid.step());
        let mono = Curve::from_fn(grid, "dec", |t| -t);
        assert_eq!(min_time_numeric(&mono).unwrap_err(), KnsffError::Boundary);
        let g5 = TimeGrid::linear(0.0, 2.0, 2000).unwrap();
        let s5 = knsff_analytic(5, 2, 100, &g5, TransformMode::Auto).unwrap();
        let tm = min_time(5, EnsembleKind::Gue).unwrap();
        assert!((min_time_numeric(&s5).unwrap() - tm).abs() / tm < 0.1);
    }

    #[test]
    fn deepest_neighbor() {
        assert_eq!(deepest_k(EnsembleKind::Goe, 200, DeepestMethod::AnalyticExpansion).unwrap(), 11);
        assert_eq!(deepest_k(EnsembleKind::Poisson, 200, DeepestMethod::AnalyticExpansion).unwrap(), 28);
        let cubic = deepest_k(EnsembleKind::Gue, 200, DeepestMethod::CubicRoot).unwrap() as i64;
        let argmin = deepest_k(EnsembleKind::Gue, 200, DeepestMethod::NumericArgmin).unwrap() as i64;
        assert!((cubic - argmin).abs() <= 1);
        let kc = deepest_k_cubic(EnsembleKind::Goe, 200);
        assert!((kc * kc * (3.0 + kc) - 200.0 * PI * PI).abs() < 1e-8);
        assert!(deepest_k(EnsembleKind::Goe, 5, DeepestMethod::CubicRoot).is_err());
        assert_eq!(round_half_down(2.5), 2);
        assert_eq!(round_half_down(2.51), 3);
    }

    #[test]
    fn envelope_and_oscillations() {
        let count = oscillation_count(10, 4).unwrap();
        // exact value √(2α)/(2π) with α = 229
        assert!((count - (458f64).sqrt() / (2.0 * PI)).abs() < 1e-12);
        // ratio to the linear law tends to one
        let ratio = |k: usize| oscillation_count(k, 4).unwrap() / (2.0 * k as f64 / (2.0 * PI));
        assert!((ratio(10) - 1.0).abs() < 0.08);
        assert!((ratio(200) - 1.0).abs() < 0.005);
        for beta in [1u8, 2, 4] {
            let w = envelope_width(200, beta).unwrap();
            assert!((w / (beta as f64).sqrt() - 1.0).abs() < 0.02);
        }
        let p = surmise_params(1, 1).unwrap();
        assert!((envelope_width(1, 1).unwrap() - 2f64.sqrt() / p.omega).abs() < 1e-15);
    }
}
