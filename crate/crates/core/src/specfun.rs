//! Special functions used by the spacing surmise and its cosine transform.
//!
//! Everything here works on real arguments in double precision. Series are
//! summed with Neumaier compensation.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("argument {0} outside the domain of {1}")]
    Domain(f64, &'static str),
    #[error("series did not converge within {0} terms")]
    NoConvergence(usize),
    #[error("invalid series control: {0}")]
    InvalidControl(&'static str),
}

pub type Result<T> = std::result::Result<T, SpecfunError>;

/// Truncation policy for power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl SeriesControl {
    pub fn new(max_terms: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if max_terms == 0 {
            return Err(SpecfunError::InvalidControl("max_terms must be at least 1"));
        }
        if !(abs_tol >= 0.0 && rel_tol >= 0.0) || (abs_tol == 0.0 && rel_tol == 0.0) {
            return Err(SpecfunError::InvalidControl(
                "tolerances must be non-negative and not both zero",
            ));
        }
        Ok(Self {
            max_terms,
            abs_tol,
            rel_tol,
        })
    }

    fn small_enough(&self, term: f64, sum: f64) -> bool {
        let t = term.abs();
        t < self.abs_tol * sum.abs().max(1.0) || t < self.rel_tol * sum.abs()
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 10_000,
            abs_tol: 1e-15,
            rel_tol: 0.0,
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new(init: f64) -> Self {
        Self {
            sum: init,
            comp: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecfunError::Domain(x, "log_gamma"));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `ln|Γ(z)|` and the sign of `Γ(z)` for any real `z` off the poles.
fn log_abs_gamma(z: f64) -> (f64, f64) {
    if z > 0.0 {
        return (statrs::function::gamma::ln_gamma(z), 1.0);
    }
    // reflection: Γ(z) Γ(1-z) = π / sin(πz)
    let s = (PI * z).sin();
    let lg = PI.ln() - s.abs().ln() - statrs::function::gamma::ln_gamma(1.0 - z);
    (lg, s.signum())
}

/// Rising factorial `(a)_n`, evaluated as a direct product.
pub fn pochhammer(a: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (a + i as f64))
}

/// Result of a summed power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    /// Largest absolute term encountered (including the leading 1).
    pub max_term: f64,
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn hyp1f1_series(a: f64, b: f64, z: f64, ctrl: &SeriesControl) -> Result<SeriesSum> {
    if is_nonpositive_integer(b) {
        return Err(SpecfunError::Domain(b, "hyp1f1 (b is a pole)"));
    }
    let mut acc = CompensatedSum::new(1.0);
    let mut term = 1.0f64;
    let mut max_term = 1.0f64;
    if z == 0.0 {
        return Ok(SeriesSum {
            value: 1.0,
            terms: 1,
            max_term,
        });
    }
    // terms can grow until n passes |a| + |z|; do not stop before that
    let peak = a.abs() + z.abs();
    for n in 0..ctrl.max_terms {
        let nf = n as f64;
        term *= (a + nf) * z / ((b + nf) * (nf + 1.0));
        acc.add(term);
        max_term = max_term.max(term.abs());
        let s = acc.value();
        if term == 0.0 || (nf + 1.0 > peak && ctrl.small_enough(term, s)) {
            return Ok(SeriesSum {
                value: s,
                terms: n + 2,
                max_term,
            });
        }
    }
    Err(SpecfunError::NoConvergence(ctrl.max_terms))
}

/// Kummer's confluent hypergeometric function `₁F₁(a; b; z)` by its power series.
pub fn hyp1f1(a: f64, b: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    hyp1f1_series(a, b, z, ctrl).map(|s| s.value)
}

/// `₁F₁(a; b; -x)` for `x ≥ 0`, accurate for large `x` as well.
///
/// Uses Kummer's transformation `e^{-x} ₁F₁(b-a; b; x)` for moderate `x` and
/// the algebraic large-argument expansion beyond that.
pub fn hyp1f1_neg(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(SpecfunError::Domain(x, "hyp1f1_neg"));
    }
    if x <= 600.0 {
        let ctrl = SeriesControl {
            max_terms: 100_000,
            abs_tol: 1e-17,
            rel_tol: 0.0,
        };
        let s = hyp1f1_series(b - a, b, x, &ctrl)?;
        return Ok(s.value * (-x).exp());
    }
    if is_nonpositive_integer(b - a) {
        // exponentially small times a polynomial
        return Ok(0.0);
    }
    let mut acc = CompensatedSum::new(1.0);
    let mut term = 1.0f64;
    let c = a - b + 1.0;
    for s in 0..400 {
        let sf = s as f64;
        let r = (a + sf) * (c + sf) / ((sf + 1.0) * x);
        if r.abs() >= 1.0 {
            break;
        }
        term *= r;
        acc.add(term);
        if term.abs() < 1e-17 * acc.value().abs() {
            break;
        }
    }
    let (lgb, sb) = log_abs_gamma(b);
    let (lgba, sba) = log_abs_gamma(b - a);
    let mag = (lgb - lgba - a * x.ln()).exp();
    Ok(sb * sba * mag * acc.value())
}

/// Value of a Laguerre function together with a cancellation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreValue {
    pub value: f64,
    /// Set when the largest series term exceeds `1e12` times the result.
    pub precision_loss: bool,
}

/// Generalized Laguerre function `L_μ^a(z)` of real degree `μ ≥ 0`.
///
/// Evaluated as `binom(μ+a, μ) ₁F₁(-μ; a+1; z)`, which is the binomial series
/// with Gamma-ratio coefficients. For integer `μ` the series terminates and the
/// Laguerre polynomial is recovered.
pub fn laguerre_fn(mu: f64, a: f64, z: f64, ctrl: &SeriesControl) -> Result<LaguerreValue> {
    if !(mu >= 0.0) {
        return Err(SpecfunError::Domain(mu, "laguerre_fn degree"));
    }
    if !(a > -1.0) {
        return Err(SpecfunError::Domain(a, "laguerre_fn order"));
    }
    if !(z >= 0.0) {
        return Err(SpecfunError::Domain(z, "laguerre_fn argument"));
    }
    let binom = (log_gamma(mu + a + 1.0)? - log_gamma(mu + 1.0)? - log_gamma(a + 1.0)?).exp();
    let s = hyp1f1_series(-mu, a + 1.0, z, ctrl)?;
    Ok(LaguerreValue {
        value: binom * s.value,
        precision_loss: s.max_term > 1e12 * s.value.abs(),
    })
}

/// Phase `θ_{a,n}(x) = 2√(nx) - aπ/2 - π/4` of the large-degree expansion.
pub fn laguerre_phase(n: f64, a: f64, x: f64) -> f64 {
    2.0 * (n * x).sqrt() - a * PI / 2.0 - PI / 4.0
}

/// First-order correction coefficient `b_a(x)` of the large-degree expansion.
pub fn laguerre_correction(a: f64, x: f64) -> f64 {
    (4.0 * x * x - 12.0 * a * a - 24.0 * a * x - 24.0 * x + 3.0) / (48.0 * x.sqrt())
}

/// Two-term oscillatory approximation of `L_n^a(x)` for large degree `n`.
pub fn laguerre_asymptotic(n: f64, a: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(SpecfunError::Domain(x, "laguerre_asymptotic argument"));
    }
    if !(n >= 5.0) {
        return Err(SpecfunError::Domain(n, "laguerre_asymptotic degree"));
    }
    let theta = laguerre_phase(n, a, x);
    let amp = (n.ln() * (a / 2.0 - 0.25) - 0.5 * PI.ln() - (a / 2.0 + 0.25) * x.ln() + x / 2.0).exp();
    Ok(amp * (theta.cos() + theta.sin() * laguerre_correction(a, x) / n.sqrt()))
}

/// `e^{-x} L_μ^a(x)` with an estimate of its absolute rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledLaguerre {
    pub value: f64,
    pub error_estimate: f64,
}

/// Stable evaluation of `e^{-x} L_μ^a(x)` for large real degree.
///
/// The value is built by the three-term degree recurrence, started from the
/// fractional part of `μ`. Beyond the oscillatory region of a non-integer
/// degree the large-argument expansion is used instead. The error estimate
/// tracks how much the recurrence amplifies a unit perturbation of its seeds.
pub fn scaled_laguerre(mu: f64, a: f64, x: f64) -> Result<ScaledLaguerre> {
    if !(mu >= 0.0) {
        return Err(SpecfunError::Domain(mu, "scaled_laguerre degree"));
    }
    if !(a > -1.0) {
        return Err(SpecfunError::Domain(a, "scaled_laguerre order"));
    }
    if !(x >= 0.0) {
        return Err(SpecfunError::Domain(x, "scaled_laguerre argument"));
    }
    let b = a + 1.0;
    let log_binom = |n: f64| -> Result<f64> {
        Ok(log_gamma(n + a + 1.0)? - log_gamma(n + 1.0)? - log_gamma(b)?)
    };
    if x == 0.0 {
        return Ok(ScaledLaguerre {
            value: log_binom(mu)?.exp(),
            error_estimate: 0.0,
        });
    }
    let integer = mu == mu.floor();
    if x > 4.0 * mu + 1.0 && !integer {
        let v = log_binom(mu)?.exp() * hyp1f1_neg(mu + b, b, x)?;
        return Ok(ScaledLaguerre {
            value: v,
            error_estimate: 1e-15 * v.abs(),
        });
    }
    let frac = mu - mu.floor();
    let seed = |n: f64| -> Result<f64> {
        if integer && n == 0.0 {
            Ok((-x).exp())
        } else if integer && n == 1.0 {
            Ok((b - x) * (-x).exp())
        } else {
            Ok(log_binom(n)?.exp() * hyp1f1_neg(n + b, b, x)?)
        }
    };
    let mut g0 = seed(frac)?;
    if mu == frac {
        return Ok(ScaledLaguerre {
            value: g0,
            error_estimate: 1e-15 * g0.abs(),
        });
    }
    let mut g1 = seed(frac + 1.0)?;
    let mut d0 = 0.0;
    let mut d1 = g0.abs().max(g1.abs());
    let steps = (mu - frac).round() as usize - 1;
    let mut n = frac;
    for _ in 0..steps {
        let c1 = 2.0 * (n + 1.0) + b - x;
        let c0 = n + 1.0 + a;
        let den = n + 2.0;
        let g2 = (c1 * g1 - c0 * g0) / den;
        let d2 = (c1 * d1 - c0 * d0) / den;
        g0 = g1;
        g1 = g2;
        d0 = d1;
        d1 = d2;
        n += 1.0;
    }
    Ok(ScaledLaguerre {
        value: g1,
        error_estimate: 16.0 * f64::EPSILON * d1.abs(),
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, found by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
