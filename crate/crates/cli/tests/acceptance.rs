//! Acceptance gate: every criterion prints one PASS/FAIL line, then the test
//! fails if any criterion did.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use sfflab::assembly::{self, ConnectedKind, EvenOddSource};
use sfflab::ensembles::SamplerConfig;
use sfflab::knsff::{self, DeepestMethod, KnsffError, TransformMode};
use sfflab::selfavg;
use sfflab::spacings::surmise_params;
use sfflab::unfold;
use sfflab::xxz::{self, PipelineConfig, XxzParams};
use sfflab::{Curve, EnsembleKind, TimeGrid, UnfoldedSpectrum};

const SEED: u64 = 20_240_611;
const RMT: [EnsembleKind; 3] = [EnsembleKind::Goe, EnsembleKind::Gue, EnsembleKind::Gse];
const ALL: [EnsembleKind; 4] = [EnsembleKind::Goe, EnsembleKind::Gue, EnsembleKind::Gse, EnsembleKind::Poisson];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

#[derive(Default)]
struct Cache {
    spectra: HashMap<(&'static str, usize, usize), Arc<Vec<UnfoldedSpectrum>>>,
}

impl Cache {
    fn get(&mut self, kind: EnsembleKind, n: usize, r: usize) -> Arc<Vec<UnfoldedSpectrum>> {
        self.spectra
            .entry((kind.name(), n, r))
            .or_insert_with(|| {
                let raw = SamplerConfig::new(kind, n, r, SEED).unwrap().sample_all().unwrap();
                Arc::new(raw.iter().map(|s| unfold::unfold_default(s).unwrap()).collect())
            })
            .clone()
    }
}

// Independent oracles

/// Composite 5-point Gauss-Legendre on `[a, b]` with `panels` panels.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        let mut acc = 0.0;
        for (x, w) in X.iter().zip(W) {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Surmise density for `(k, β)` and a range holding all but a negligible tail.
fn surmise(k: usize, beta: u8) -> (impl Fn(f64) -> f64, f64, f64) {
    let p = surmise_params(k, beta).unwrap();
    let s0 = (p.alpha / (2.0 * p.a_alpha)).sqrt();
    let sigma = 0.5 / p.a_alpha.sqrt();
    let (lo, hi) = ((s0 - 40.0 * sigma).max(0.0), s0 + 40.0 * sigma);
    let f = move |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (p.ln_c_alpha + p.alpha * s.ln() - p.a_alpha * s * s).exp()
        }
    };
    (f, lo, hi)
}

fn rising(x: f64, n: u32) -> f64 {
    (0..n).map(|i| x + i as f64).product()
}

/// Mean and standard error of samples.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn local_extremum_near(curve: &Curve, t: f64, max: bool) -> Option<f64> {
    let step = curve.grid.step();
    (1..curve.len() - 1)
        .filter(|&i| (curve.grid.at(i) - t).abs() <= step * (1.0 + 1e-9))
        .find(|&i| {
            let (a, b, c) = (curve.values[i - 1], curve.values[i], curve.values[i + 1]);
            if max {
                b >= a && b >= c
            } else {
                b <= a && b <= c
            }
        })
        .map(|i| curve.grid.at(i))
}

// Criteria

fn c1_surmise() -> Outcome {
    let (mut norm, mut mean, mut moment) = (0.0f64, 0.0f64, 0.0f64);
    for beta in [1u8, 2, 4] {
        for k in 1..=50 {
            let p = surmise_params(k, beta).unwrap();
            let (f, lo, hi) = surmise(k, beta);
            norm = norm.max((integrate(&f, lo, hi, 400) - 1.0).abs());
            mean = mean.max((integrate(|s| s * f(s), lo, hi, 400) - k as f64).abs());
            for n in 1..=3u32 {
                let q = integrate(|s| s.powi(2 * n as i32) * f(s), lo, hi, 400);
                let want = rising((p.alpha + 1.0) / 2.0, n) / p.a_alpha.powi(n as i32);
                moment = moment.max((q / want - 1.0).abs());
            }
        }
    }
    outcome(
        norm < 1e-8 && mean < 1e-6 && moment < 1e-7,
        format!("max |∫P-1| = {norm:.1e}, max |<s>-k| = {mean:.1e}, max rel even-moment error = {moment:.1e}"),
    )
}

fn c2_exact_transform() -> Outcome {
    let mut at_zero = 0.0f64;
    for beta in [1u8, 2, 4] {
        for k in 1..=50 {
            at_zero = at_zero.max((knsff::f_exact(k, beta, 0.0).unwrap() - 1.0).abs());
        }
    }
    let mut cosine = 0.0f64;
    for beta in [1u8, 2, 4] {
        for k in [1, 2, 5] {
            let (f, lo, hi) = surmise(k, beta);
            for i in 0..=60 {
                let t = 3.0 * i as f64 / 60.0;
                let q = integrate(|s| f(s) * (t * s).cos(), lo, hi, 400);
                cosine = cosine.max((knsff::f_exact(k, beta, t).unwrap() - q).abs());
            }
        }
    }
    outcome(
        at_zero < 1e-9 && cosine < 1e-6,
        format!("max |f(0)-1| = {at_zero:.1e}, max |f - quadrature| on [0,3] = {cosine:.1e}"),
    )
}

/// `[0, min(2π, t_e)]` with `t_e` where the envelope falls to 1e-3.
fn fig1_window(kind: EnsembleKind, k: usize) -> f64 {
    let t_env = match kind {
        EnsembleKind::Poisson => (1e-3f64.powf(-2.0 / k as f64) - 1.0).sqrt(),
        g => knsff::envelope_width(k, g.beta()).unwrap() * (2.0 * 1e3f64.ln()).sqrt(),
    };
    t_env.min(2.0 * PI)
}

fn c3_fig1(cache: &mut Cache) -> Outcome {
    let n = 100;
    let mut worst = (0.0f64, "", 0);
    let mut pass = true;
    for kind in ALL {
        let s = cache.get(kind, n, 1000);
        for k in [1, 5, 20, 40] {
            let grid = TimeGrid::linear(0.0, fig1_window(kind, k), 400).unwrap();
            let num = knsff::knsff_numeric(&s, k, &grid).unwrap();
            let ana = knsff::knsff_reference(kind, k, n, &grid, TransformMode::Auto).unwrap();
            let dev = num.values.iter().zip(&ana.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                / knsff::weight(n, k);
            pass &= dev < 0.15;
            if dev > worst.0 {
                worst = (dev, kind.name(), k);
            }
        }
    }
    outcome(pass, format!("worst sup|num-ana|/C = {:.3} ({} k={}), bound 0.15", worst.0, worst.1, worst.2))
}

fn c4_minimum_time(cache: &mut Cache) -> Outcome {
    let n = 100;
    let mut worst = (0.0f64, "", 0);
    let mut pass = true;
    let mut failures = Vec::new();
    for kind in ALL {
        let s = cache.get(kind, n, 1000);
        let first = if kind == EnsembleKind::Poisson { 2 } else { 3 };
        for k in first..=40 {
            let want = match kind {
                EnsembleKind::Poisson => (PI / (1.0 + k as f64)).tan(),
                _ => PI / k as f64,
            };
            let curve = knsff::knsff_numeric(&s, k, &knsff::minimum_window(k, 150).unwrap()).unwrap();
            let rel = match knsff::min_time_numeric(&curve) {
                Ok(t) => (t / want - 1.0).abs(),
                Err(_) => f64::INFINITY,
            };
            if rel > 0.1 {
                pass = false;
                failures.push(format!("{} k={k}", kind.name()));
            }
            if rel > worst.0 {
                worst = (rel, kind.name(), k);
            }
        }
    }
    let no_min = matches!(knsff::min_time(1, EnsembleKind::Poisson), Err(KnsffError::NoMinimum));
    outcome(
        pass && no_min,
        format!(
            "worst |t_m/law-1| = {:.3} ({} k={}), Poisson k=1 NoMinimum: {no_min}{}",
            worst.0,
            worst.1,
            worst.2,
            if failures.is_empty() { String::new() } else { format!(", off: {}", failures.join(" ")) }
        ),
    )
}

fn c5_deepest(cache: &mut Cache) -> Outcome {
    let goe = knsff::deepest_k(EnsembleKind::Goe, 200, DeepestMethod::AnalyticExpansion).unwrap();
    let poi = knsff::deepest_k(EnsembleKind::Poisson, 200, DeepestMethod::AnalyticExpansion).unwrap();
    let analytic_ok = goe == 11 && poi == 28;

    let mut numeric = Vec::new();
    for (kind, want) in [(EnsembleKind::Goe, goe), (EnsembleKind::Poisson, poi)] {
        let s = cache.get(kind, 200, 200);
        let minima = knsff::numeric_minima(&s, 100, 120).unwrap();
        numeric.push((want, knsff::deepest_k_numeric(&minima).unwrap()));
    }
    let numeric_ok = numeric.iter().all(|(a, b)| a.abs_diff(*b) <= 2);

    let sizes = [50usize, 100, 200, 400];
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = |kind| {
        let ys: Vec<f64> = sizes
            .iter()
            .map(|&n| knsff::deepest_k(kind, n, DeepestMethod::AnalyticExpansion).unwrap() as f64)
            .collect();
        loglog_slope(&xs, &ys)
    };
    let rmt: Vec<f64> = RMT.iter().map(|&k| slope(k)).collect();
    let poisson = slope(EnsembleKind::Poisson);
    let slopes_ok = rmt.iter().all(|s| (s - 0.33).abs() <= 0.05) && (poisson - 0.5).abs() <= 0.05;
    outcome(
        analytic_ok && numeric_ok && slopes_ok,
        format!(
            "analytic k* GOE={goe} Poisson={poi}; numeric argmin GOE={} Poisson={}; \
             log-log slopes GOE/GUE/GSE = {:.3}/{:.3}/{:.3} (want 0.33±0.05), Poisson = {poisson:.3} (want 0.50±0.05)",
            numeric[0].1, numeric[1].1, rmt[0], rmt[1], rmt[2]
        ),
    )
}

fn c6_full_sff(cache: &mut Cache) -> Outcome {
    let n = 100;
    let grid = TimeGrid::logarithmic(0.1, 50.0, 400).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for kind in RMT {
        let s = cache.get(kind, n, 1000);
        let num = assembly::full_sff_numeric(&s, &grid).unwrap();
        let ana = assembly::full_sff_reference(kind, n, &grid, TransformMode::Auto).unwrap();
        let (mut worst, mut at) = (0.0f64, 0.0);
        for (i, (a, b)) in ana.values.iter().zip(&num.values).enumerate() {
            let d = if *a > 0.0 && *b > 0.0 { (a / b).log10().abs() } else { f64::INFINITY };
            if d > worst {
                (worst, at) = (d, grid.at(i));
            }
        }
        pass &= worst <= 0.1;
        parts.push(format!("{} max|log10| = {worst:.3} at t={at:.3}", kind.name()));
    }
    let s = cache.get(EnsembleKind::Gue, n, 1000);
    let plateau_grid = TimeGrid::linear(2.0 * PI, 4.0 * PI, 1000).unwrap();
    let num = assembly::full_sff_numeric(&s, &plateau_grid).unwrap();
    let avg = selfavg::plateau_average(&num, 2.0 * PI, 2.0 * PI).unwrap();
    let rel = (avg * n as f64 - 1.0).abs();
    pass &= rel <= 0.15;
    parts.push(format!("GUE plateau N·avg = {:.4}", avg * n as f64));
    outcome(pass, parts.join("; "))
}

fn c7_even_odd(cache: &mut Cache) -> Outcome {
    let n = 100;
    let grid = TimeGrid::linear(0.5, 8.0, 1500).unwrap();
    let gue = cache.get(EnsembleKind::Gue, n, 1000);
    let (even, odd) = assembly::even_odd_sums(n, EvenOddSource::Spectra(&gue), &grid).unwrap();
    let peak = local_extremum_near(&even, PI, true);
    let peak_positive = peak.is_some_and(|t| even.values[even.grid.times().partition_point(|&x| x < t)] > 0.0);
    let dip = local_extremum_near(&odd, PI, false);
    let gse = cache.get(EnsembleKind::Gse, n, 1000);
    let (ge, go) = assembly::even_odd_sums(n, EvenOddSource::Spectra(&gse), &grid).unwrap();
    // Sampling noise makes single-step extremum tests meaningless on top of the spike, so
    // locate its maximum within a window and require it to sit within 1% of 2π.
    let spike = (argmax_between(&ge, 2.0 * PI - 1.0, 2.0 * PI + 1.0), argmax_between(&go, 2.0 * PI - 1.0, 2.0 * PI + 1.0));
    let near = |t: f64| (t - 2.0 * PI).abs() <= 0.01 * 2.0 * PI;
    let pass = peak_positive && dip.is_some() && near(spike.0) && near(spike.1);
    outcome(
        pass,
        format!(
            "GUE even max at {peak:?} (positive: {peak_positive}), odd min at {dip:?}; GSE even/odd spike at {:.4}/{:.4}; step {:.4}",
            spike.0,
            spike.1,
            grid.step()
        ),
    )
}

fn argmax_between(c: &Curve, lo: f64, hi: f64) -> f64 {
    c.points()
        .filter(|p| p.0 >= lo && p.0 <= hi)
        .fold((f64::NAN, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
        .0
}

fn c8_time_scales() -> Outcome {
    let n = 200;
    let grid = TimeGrid::default_linear();
    let step = grid.step();
    let mut rows = Vec::new();
    for k in [10, 50, 100, 150, 199] {
        let c = assembly::partial_sff_reference(EnsembleKind::Gue, n, k, &grid, TransformMode::Auto).unwrap();
        let r = assembly::time_scales(&c, k, ConnectedKind::Gue, n, 0.1).unwrap();
        rows.push((k, r.t_dip, r.t_thouless));
    }
    let defined = rows.iter().all(|r| r.1.is_some() && r.2.is_some());
    let monotone = defined
        && rows.windows(2).all(|w| {
            w[1].1.unwrap() <= w[0].1.unwrap() + step && w[1].2.unwrap() <= w[0].2.unwrap() + step
        });
    let at150 = rows.iter().find(|r| r.0 == 150).unwrap();
    let ordered = matches!((at150.1, at150.2), (Some(d), Some(t)) if d < t);
    let listing: Vec<String> = rows
        .iter()
        .map(|(k, d, t)| format!("K={k}: {:.3}/{:.3}", d.unwrap_or(f64::NAN), t.unwrap_or(f64::NAN)))
        .collect();
    outcome(defined && monotone && ordered, format!("t_dip/t_Th {}", listing.join(", ")))
}

fn c9_poisson(cache: &mut Cache) -> Outcome {
    let n = 100;
    let dense = TimeGrid::logarithmic(1e-2, 1e3, 600).unwrap();
    let exact = assembly::full_sff_poisson(n, &dense).unwrap();
    let at_zero = assembly::full_sff_poisson(n, &TimeGrid::linear(0.0, 1e-2, 2).unwrap()).unwrap().values[0];
    let exact_min = exact.values.iter().copied().fold(at_zero, f64::min);
    let s = cache.get(EnsembleKind::Poisson, n, 1000);
    let num_min = assembly::full_sff_numeric(&s, &dense).unwrap().values.iter().copied().fold(f64::INFINITY, f64::min);

    let coarse = TimeGrid::logarithmic(1e-2, 1e3, 40).unwrap();
    let per: Vec<Vec<f64>> = s
        .iter()
        .map(|u| assembly::full_sff_numeric(std::slice::from_ref(u), &coarse).unwrap().values)
        .collect();
    let reference = assembly::full_sff_poisson(n, &coarse).unwrap();
    let mut worst_z = 0.0f64;
    for i in 0..coarse.len() {
        let column: Vec<f64> = per.iter().map(|v| v[i]).collect();
        let (m, se) = mean_se(&column);
        worst_z = worst_z.max((m - reference.values[i]).abs() / se);
    }
    let floor = 0.8 / n as f64;
    outcome(
        exact_min >= floor && num_min >= floor && worst_z <= 3.0,
        format!(
            "N·min exact = {:.3}, N·min Monte-Carlo = {:.3} (floor 0.8); worst |MC-exact|/SE = {worst_z:.2} over {} points",
            exact_min * n as f64,
            num_min * n as f64,
            coarse.len()
        ),
    )
}

fn c10_toy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let draws = 100_000;
    let times = [0.5, 1.0, 2.0, 3.0, PI, 5.0];
    let mut worst_z = 0.0f64;
    for (beta, a) in [(1u8, PI / 4.0), (2, 4.0 / PI), (4, 64.0 / (9.0 * PI))] {
        let gamma = Gamma::new((beta as f64 + 1.0) / 2.0, 1.0).unwrap();
        for k in [1usize, 2, 5, 10] {
            let sums: Vec<f64> = (0..draws)
                .map(|_| (0..k).map(|_| (gamma.sample(&mut rng) / a).sqrt()).sum())
                .collect();
            for &t in &times {
                let c: Vec<f64> = sums.iter().map(|s| (t * s).cos()).collect();
                let (m, se) = mean_se(&c);
                let z = (assembly::toy_term(k, beta, t).unwrap() - m).abs() / se;
                worst_z = worst_z.max(z);
            }
        }
    }

    let n = 100;
    let band = TimeGrid::linear(1.0, 2.0 * PI, 800).unwrap();
    let toy = assembly::toy_sff(2, n, &band).unwrap();
    let toy_delta = assembly::delta_sff(&toy, ConnectedKind::Gue, n).unwrap();
    let toy_max = toy_delta.values.iter().copied().filter(|v| !v.is_nan()).fold(0.0, f64::max);

    let grid = TimeGrid::default_linear();
    let full = assembly::full_sff_reference(EnsembleKind::Gue, n, &grid, TransformMode::Auto).unwrap();
    let t_th = assembly::time_scales(&full, n - 1, ConnectedKind::Gue, n, 0.1).unwrap().t_thouless;
    let late_max = t_th.map(|th| {
        let late = TimeGrid::logarithmic(th.max(1e-3), 1e3, 600).unwrap();
        let c = assembly::full_sff_reference(EnsembleKind::Gue, n, &late, TransformMode::Auto).unwrap();
        let d = assembly::delta_sff(&c, ConnectedKind::Gue, n).unwrap();
        d.values.iter().skip(1).copied().filter(|v| !v.is_nan()).fold(0.0, f64::max)
    });
    let pass = worst_z <= 3.0 && toy_max > 0.1 && late_max.is_some_and(|m| m <= 0.1);
    outcome(
        pass,
        format!(
            "worst toy-term |z| = {worst_z:.2} (72 checks, 1e5 draws); toy max Δ on [1,2π] = {toy_max:.3}; \
             GUE max Δ after t_Th={} is {}",
            t_th.map_or("none".into(), |t| format!("{t:.3}")),
            late_max.map_or("n/a".into(), |m| format!("{m:.4}"))
        ),
    )
}

fn c11_self_averaging(cache: &mut Cache) -> Outcome {
    let grid = TimeGrid::linear(0.0, 22.0 * PI, 3000).unwrap();
    let mut worst = (0.0f64, 0, 0, 0.0, 0.0);
    let mut r1 = Vec::new();
    for (n, ks) in [(50usize, vec![1, 5, 10, 15, 20, 25]), (100, vec![1, 5, 10, 20, 30, 40, 50])] {
        let s = cache.get(EnsembleKind::Gue, n, 1000);
        for k in ks {
            let rep = selfavg::relvar_report(&s, k, &grid, selfavg::DEFAULT_T_START, selfavg::DEFAULT_T_WINDOW).unwrap();
            let rel = (rep.plateau_avg / rep.formula_value - 1.0).abs();
            if rel > worst.0 {
                worst = (rel, n, k, rep.plateau_avg, rep.formula_value);
            }
            if k == 1 {
                r1.push(rep.plateau_avg);
            }
        }
    }
    let grows = r1[1] > r1[0];
    outcome(
        worst.0 <= 0.1 && grows,
        format!(
            "worst |R̄/formula-1| = {:.3} (N={} k={}: {:.2} vs {:.2}); R̄_1 N=50 {:.2} < N=100 {:.2}: {grows}",
            worst.0, worst.1, worst.2, worst.3, worst.4, r1[0], r1[1]
        ),
    )
}

fn l2(a: &Curve, b: &Curve) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn c12_xxz() -> Outcome {
    let grid = TimeGrid::default_linear();
    let window = 200;
    let goe = knsff::knsff_reference(EnsembleKind::Goe, 1, window, &grid, TransformMode::Auto).unwrap();
    let poi = knsff::knsff_reference(EnsembleKind::Poisson, 1, window, &grid, TransformMode::Auto).unwrap();
    let mut runs = Vec::new();
    for w in [1.0, 20.0] {
        let mut cfg = PipelineConfig::new(XxzParams::new(12, 1.0, w).unwrap(), window, 150, SEED);
        cfg.k_list = vec![1];
        cfg.grid = grid;
        let rep = xxz::disorder_pipeline(&cfg).unwrap();
        let (d_goe, d_poi) = (l2(&rep.curves[0], &goe), l2(&rep.curves[0], &poi));
        runs.push((w, rep.r_mean, rep.k_star, d_goe, d_poi));
    }
    let (a, b) = (runs[0], runs[1]);
    let pass = (a.1 - 0.53).abs() <= 0.03
        && (b.1 - 0.39).abs() <= 0.03
        && a.2 < b.2
        && a.3 < a.4
        && b.4 < b.3;
    let fmt = |r: (f64, f64, usize, f64, f64)| {
        format!("W={}: <r>={:.4} k*={} L2(GOE)={:.2e} L2(Poisson)={:.2e}", r.0, r.1, r.2, r.3, r.4)
    };
    outcome(pass, format!("{}; {}", fmt(a), fmt(b)))
}

fn run_cli(args: &[&str], out: &Path, workers: &str) {
    let o = Command::new(env!("CARGO_BIN_EXE_sfflab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SFFLAB_WORKERS", workers)
        .output()
        .unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "timing.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

fn c13_determinism() -> Outcome {
    let commands: [&[&str]; 13] = [
        &["sample", "--ensemble", "goe", "--dim", "10", "--realizations", "3"],
        &["unfold", "--ensemble", "gue", "--dim", "30", "--realizations", "4", "--method", "polynomial"],
        &["knls", "--ensemble", "gse", "--dim", "20", "--realizations", "5", "--k", "1,2"],
        &["knsff", "--ensemble", "poisson", "--dim", "20", "--realizations", "10", "--k", "1,5", "--points", "50"],
        &["sff", "--ensemble", "goe", "--dim", "20", "--realizations", "10", "--points", "50"],
        &["partial", "--ensemble", "gue", "--dim", "30", "--cutoff", "5", "--source", "numeric", "--realizations", "10", "--points", "60"],
        &["timescales", "--ensemble", "gse", "--dim", "40", "--kmax", "10,20", "--points", "300"],
        &["evenodd", "--ensemble", "gue", "--dim", "20", "--source", "numeric", "--realizations", "5", "--points", "40"],
        &["kstar", "--ensemble", "goe", "--dim", "40", "--method", "monte-carlo", "--realizations", "10", "--scan-points", "30"],
        &["selfavg", "--ensemble", "gue", "--dim", "20", "--realizations", "10", "--k", "1,2", "--points", "500"],
        &["xxz", "--length", "8", "--disorder", "2", "--window", "40", "--realizations", "3", "--k", "1,5", "--points", "100"],
        &["toy", "--ensemble", "goe", "--dim", "30", "--points", "50"],
        &["autocorr", "--ensemble", "gse", "--dim", "12", "--realizations", "5", "--operator", "random", "--points", "30"],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for args in commands {
        let runs: Vec<_> = ["1", "1", "4"]
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let dir = tmp.path().join(format!("{}_{i}", args[0]));
                run_cli(args, &dir, w);
                dir_contents(&dir)
            })
            .collect();
        if runs[0] != runs[1] || runs[0] != runs[2] {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("13 commands x (1 worker, 1 worker, 4 workers); differing: {differing:?}"),
    )
}

type Criterion = Box<dyn FnMut(&mut Cache) -> Outcome>;

#[test]
fn acceptance() {
    let mut cache = Cache::default();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("surmise normalization, mean and moments", Box::new(|_| c1_surmise())),
        ("exact knSFF transform identity", Box::new(|_| c2_exact_transform())),
        ("Monte-Carlo knSFF vs closed form, N=100", Box::new(c3_fig1)),
        ("minimum-time law", Box::new(c4_minimum_time)),
        ("deepest neighbor k* and its scaling", Box::new(c5_deepest)),
        ("full SFF accuracy and GUE plateau", Box::new(c6_full_sff)),
        ("even/odd resonance", Box::new(c7_even_odd)),
        ("partial SFF time scales", Box::new(|_| c8_time_scales())),
        ("Poisson SFF without correlation hole", Box::new(c9_poisson)),
        ("nearest-neighbor toy model", Box::new(|_| c10_toy())),
        ("self-averaging plateau", Box::new(c11_self_averaging)),
        ("XXZ chaos to integrability", Box::new(|_| c12_xxz())),
        ("CLI determinism", Box::new(|_| c13_determinism())),
    ];
    let mut failed = Vec::new();
    // Written straight to stderr so the lines survive output capture.
    let mut err = std::io::stderr();
    for (i, (name, mut run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let o = run(&mut cache);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        writeln!(err, "criterion {:>2} [{tag}] {name}: {} ({:.1}s)", i + 1, o.detail, started.elapsed().as_secs_f64()).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
