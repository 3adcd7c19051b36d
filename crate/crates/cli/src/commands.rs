//! Subcommand implementations.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;
use sfflab::assembly::{self, AutocorrSource, ConnectedKind, EvenOddSource};
use sfflab::ensembles::{derive_seed, SamplerConfig};
use sfflab::knsff::{self, DeepestMethod, KnsffError, TransformMode};
use sfflab::selfavg;
use sfflab::spacings::{self, SpacingSeries};
use sfflab::unfold::{self, UnfoldingMethod};
use sfflab::xxz::{self, PipelineConfig, XxzParams};
use sfflab::{Curve, EnsembleKind, SpectrumSample, TimeGrid, UnfoldedSpectrum};

use crate::args::*;
use crate::output::{fmt_f64, OutputDir};
use crate::{usage, Stage};

pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let (out, dir) = match &cli.command {
        Command::Sample(a) => (&a.out, sample(a)?),
        Command::Unfold(a) => (&a.out, unfold_cmd(a)?),
        Command::Knls(a) => (&a.out, knls(a)?),
        Command::Knsff(a) => (&a.out, knsff_cmd(a)?),
        Command::Sff(a) => (&a.out, sff(a)?),
        Command::Partial(a) => (&a.out, partial(a)?),
        Command::Timescales(a) => (&a.out, timescales(a)?),
        Command::Evenodd(a) => (&a.out, evenodd(a)?),
        Command::Kstar(a) => (&a.out, kstar(a)?),
        Command::Selfavg(a) => (&a.out, selfavg_cmd(a)?),
        Command::Xxz(a) => (&a.out, xxz_cmd(a)?),
        Command::Toy(a) => (&a.out, toy(a)?),
        Command::Autocorr(a) => (&a.out, autocorr(a)?),
    };
    let config = serde_json::to_value(&cli.command)?;
    dir.finish(cli.command.name(), config)?;
    // Wall-clock time varies between runs, so it stays out of the checksummed manifest.
    let timing = json!({ "wall_clock_seconds": started.elapsed().as_secs_f64() });
    std::fs::write(out.out.join("timing.json"), serde_json::to_vec_pretty(&timing)?)
        .context("writing timing.json")?;
    Ok(())
}

fn open(out: &OutArgs) -> Result<OutputDir> {
    OutputDir::create(&out.out, out.format)
}

fn check_ensemble(e: &EnsembleArgs) -> Result<()> {
    check_dim(e.dim)?;
    if e.realizations == 0 {
        return Err(usage("--realizations must be positive"));
    }
    Ok(())
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(usage(format!("--dim must be at least 2, got {n}")));
    }
    Ok(())
}

fn check_ks(ks: &[usize], n: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(usage("--k needs at least one value"));
    }
    for &k in ks {
        if k == 0 || k >= n {
            return Err(usage(format!("neighbor order {k} outside 1..={}", n - 1)));
        }
    }
    Ok(())
}

fn gaussian_only(kind: EnsembleKind, what: &str) -> Result<ConnectedKind> {
    ConnectedKind::try_from(kind).map_err(|_| usage(format!("{what} needs a Gaussian ensemble, not {}", kind.name())))
}

fn raw_spectra(e: &EnsembleArgs) -> Result<Vec<SpectrumSample>> {
    check_ensemble(e)?;
    SamplerConfig::new(e.ensemble, e.dim, e.realizations, e.seed)
        .stage("sampling")?
        .sample_all()
        .stage("sampling")
}

fn unfolded_spectra(e: &EnsembleArgs) -> Result<Vec<UnfoldedSpectrum>> {
    let raw = raw_spectra(e)?;
    sfflab::par::map_slice(&raw, unfold::unfold_default)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .stage("unfolding")
}

fn level_rows(levels: &[f64]) -> impl Iterator<Item = Vec<String>> + '_ {
    levels.iter().enumerate().map(|(i, &e)| vec![i.to_string(), fmt_f64(e)])
}

fn index_header() -> Vec<String> {
    vec!["index".into(), "energy".into()]
}

fn sample(a: &SampleArgs) -> Result<OutputDir> {
    let spectra = raw_spectra(&a.ens)?;
    let mut dir = open(&a.out)?;
    for (i, s) in spectra.iter().enumerate() {
        dir.write_rows(&format!("spectrum_{i:04}.csv"), &index_header(), level_rows(&s.energies))?;
    }
    dir.derive("seeds", spectra.iter().map(|s| s.seed).collect::<Vec<_>>())?;
    Ok(dir)
}

fn unfold_cmd(a: &UnfoldArgs) -> Result<OutputDir> {
    let raw = raw_spectra(&a.ens)?;
    let kind = a.ens.ensemble;
    if a.bins == 0 {
        return Err(usage("--bins must be positive"));
    }
    let method = match a.method {
        UnfoldMethodArg::Auto => UnfoldingMethod::for_kind(kind),
        UnfoldMethodArg::Analytic if !kind.is_gaussian() => {
            return Err(usage("analytic unfolding needs a Gaussian ensemble"));
        }
        UnfoldMethodArg::Analytic => UnfoldingMethod::AnalyticSemicircle,
        UnfoldMethodArg::Polynomial => UnfoldingMethod::PolynomialFit {
            eta: a.eta,
            n_bins: a.bins,
        },
        UnfoldMethodArg::Identity => UnfoldingMethod::Identity,
    };
    let unfolded = sfflab::par::map_slice(&raw, |s| match method {
        UnfoldingMethod::AnalyticSemicircle => unfold::unfold_analytic(s, kind.beta()),
        UnfoldingMethod::PolynomialFit { eta, n_bins } => unfold::unfold_polynomial(s, eta, n_bins),
        UnfoldingMethod::Identity => Ok(unfold::unfold_identity(s)),
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .stage("unfolding")?;

    let mut dir = open(&a.out)?;
    for (i, u) in unfolded.iter().enumerate() {
        dir.write_rows(&format!("unfolded_{i:04}.csv"), &index_header(), level_rows(&u.energies))?;
    }
    let r = unfolded.len() as f64;
    let mean_spacing = unfolded.iter().map(|u| u.mean_spacing()).sum::<f64>() / r;
    let flat: Vec<f64> = unfolded
        .iter()
        .map(|u| unfold::flatness(u, a.bins))
        .collect::<Result<_, _>>()
        .stage("unfolding quality")?;
    dir.derive("method", method)?;
    dir.derive("mean_spacing", mean_spacing)?;
    dir.derive("flatness", flat.iter().sum::<f64>() / r)?;
    dir.derive("resorted", unfolded.iter().filter(|u| u.resorted).count())?;
    if kind.is_gaussian() {
        let q: Vec<f64> = raw
            .iter()
            .map(|s| unfold::unfold_quality(s, kind.beta(), a.eta, a.bins))
            .collect::<Result<_, _>>()
            .stage("unfolding quality")?;
        dir.derive("quality", q.iter().sum::<f64>() / r)?;
    }
    Ok(dir)
}

fn knls(a: &KnlsArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    check_ks(&a.k, a.ens.dim)?;
    if a.bins == 0 {
        return Err(usage("--bins must be positive"));
    }
    let spectra = unfolded_spectra(&a.ens)?;
    let kind = a.ens.ensemble;
    let header: Vec<String> = ["bin_left", "bin_right", "density"].map(String::from).to_vec();
    let mut dir = open(&a.out)?;
    let mut means = Vec::new();
    for &k in &a.k {
        let mut values = Vec::new();
        for u in &spectra {
            values.extend(spacings::extract_spacings(u, k).stage("spacings")?.values);
        }
        let series = SpacingSeries { k, values };
        means.push(json!({ "k": k, "mean": series.mean() }));
        let hist = spacings::empirical_hist(&series, a.bins, None).stage("histogram")?;
        let reference: Vec<f64> = match kind {
            EnsembleKind::Poisson => hist.centers().map(|s| spacings::poisson_knls_pdf(k, s)).collect(),
            g => {
                let p = spacings::surmise_params(k, g.beta()).stage("surmise")?;
                hist.centers().map(|s| spacings::surmise_pdf(&p, s)).collect()
            }
        };
        let rows = |d: &[f64]| -> Vec<Vec<String>> {
            d.iter()
                .enumerate()
                .map(|(i, &v)| vec![fmt_f64(hist.edges[i]), fmt_f64(hist.edges[i + 1]), fmt_f64(v)])
                .collect()
        };
        dir.write_rows(&format!("knls_k{k}.csv"), &header, rows(&hist.densities))?;
        dir.write_rows(&format!("knls_k{k}_reference.csv"), &header, rows(&reference))?;
    }
    dir.derive("mean_spacing", means)?;
    Ok(dir)
}

fn k_names(ks: &[usize]) -> Vec<String> {
    ks.iter().map(|k| format!("S_k{k}")).collect()
}

fn write_multi(dir: &mut OutputDir, name: &str, names: &[String], curves: &[Curve]) -> Result<()> {
    let cols: Vec<(&str, &Curve)> = names.iter().map(String::as_str).zip(curves).collect();
    dir.write_curves(name, &cols)
}

fn knsff_cmd(a: &KnsffArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    check_ks(&a.k, a.ens.dim)?;
    let grid = a.grid.resolve(TimeGrid::default_log())?;
    let spectra = unfolded_spectra(&a.ens)?;
    let (kind, n) = (a.ens.ensemble, a.ens.dim);
    let numeric = a
        .k
        .iter()
        .map(|&k| knsff::knsff_numeric(&spectra, k, &grid))
        .collect::<Result<Vec<_>, _>>()
        .stage("knSFF")?;
    let analytic = a
        .k
        .iter()
        .map(|&k| knsff::knsff_reference(kind, k, n, &grid, a.mode.into()))
        .collect::<Result<Vec<_>, _>>()
        .stage("knSFF transform")?;
    let mut dir = open(&a.out)?;
    let names = k_names(&a.k);
    write_multi(&mut dir, "knsff_numeric.csv", &names, &numeric)?;
    write_multi(&mut dir, "knsff_analytic.csv", &names, &analytic)?;
    let mut minima = Vec::new();
    for (i, &k) in a.k.iter().enumerate() {
        let predicted = match (knsff::min_time(k, kind), knsff::min_value(k, kind, n)) {
            (Ok(t), Ok(v)) => Some((t, v)),
            (Err(KnsffError::NoMinimum), _) | (_, Err(KnsffError::NoMinimum)) => None,
            (Err(e), _) | (_, Err(e)) => return Err(e).stage("minimum prediction"),
        };
        let c = knsff::weight(n, k);
        let dev = numeric[i]
            .values
            .iter()
            .zip(&analytic[i].values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        minima.push(json!({
            "k": k,
            "t_min_predicted": predicted.map(|p| p.0),
            "min_value_predicted": predicted.map(|p| p.1),
            "max_relative_deviation": dev / c,
        }));
    }
    dir.derive("k_list", &a.k)?;
    dir.derive("minima", minima)?;
    Ok(dir)
}

fn plateau_value(curve: &Curve) -> Option<f64> {
    selfavg::plateau_average(curve, 2.0 * PI, 2.0 * PI).ok()
}

fn sff(a: &SffArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    let grid = a.grid.resolve(TimeGrid::default_log())?;
    let spectra = unfolded_spectra(&a.ens)?;
    let n = a.ens.dim;
    let numeric = assembly::full_sff_numeric(&spectra, &grid).stage("SFF")?;
    let analytic = assembly::full_sff_reference(a.ens.ensemble, n, &grid, a.mode.into()).stage("SFF transform")?;
    let mut dir = open(&a.out)?;
    dir.write_curve("sff_numeric.csv", "value", &numeric)?;
    dir.write_curve("sff_analytic.csv", "value", &analytic)?;
    dir.derive("plateau_numeric", plateau_value(&numeric))?;
    dir.derive("plateau_analytic", plateau_value(&analytic))?;
    dir.derive("inverse_dim", 1.0 / n as f64)?;
    Ok(dir)
}

fn check_cutoff(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(usage(format!("cutoff {k} outside 1..={}", n - 1)));
    }
    Ok(())
}

fn partial_curve(
    source: SourceArg,
    spectra: &mut Option<Vec<UnfoldedSpectrum>>,
    ens: &EnsembleArgs,
    cutoff: usize,
    grid: &TimeGrid,
    mode: TransformMode,
) -> Result<Curve> {
    match source {
        SourceArg::Analytic => {
            assembly::partial_sff_reference(ens.ensemble, ens.dim, cutoff, grid, mode).stage("partial SFF")
        }
        SourceArg::Numeric => {
            if spectra.is_none() {
                *spectra = Some(unfolded_spectra(ens)?);
            }
            let s = spectra.as_deref().expect("sampled above");
            assembly::partial_sff_numeric(s, cutoff, grid).stage("partial SFF")
        }
    }
}

fn partial(a: &PartialArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    check_cutoff(a.cutoff, a.ens.dim)?;
    let grid = a.grid.resolve(TimeGrid::default_linear())?;
    let curve = partial_curve(a.source, &mut None, &a.ens, a.cutoff, &grid, a.mode.into())?;
    let mut dir = open(&a.out)?;
    dir.write_curve(&format!("partial_K{}.csv", a.cutoff), "value", &curve)?;
    dir.derive("K", a.cutoff)?;
    Ok(dir)
}

fn timescales(a: &TimescalesArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    let ck = gaussian_only(a.ens.ensemble, "time scales")?;
    for &k in &a.kmax {
        check_cutoff(k, a.ens.dim)?;
    }
    let eps = a.epsilon.unwrap_or(ck.default_epsilon());
    if !(eps > 0.0) {
        return Err(usage("--epsilon must be positive"));
    }
    let grid = a.grid.resolve(TimeGrid::default_linear())?;
    let n = a.ens.dim;
    let mut spectra = None;
    let mut dir = open(&a.out)?;
    let mut reports = Vec::new();
    for &k in &a.kmax {
        let curve = partial_curve(a.source, &mut spectra, &a.ens, k, &grid, a.mode.into())?;
        let delta = assembly::delta_sff(&curve, ck, n).stage("connected SFF")?;
        let report = assembly::time_scales(&curve, k, ck, n, eps).stage("time scales")?;
        dir.write_curve(&format!("partial_K{k}.csv"), "value", &curve)?;
        dir.write_curve(&format!("delta_K{k}.csv"), "value", &delta)?;
        dir.write_json(&format!("timescales_K{k}.json"), &report)?;
        reports.push(report);
    }
    if let [only] = reports.as_slice() {
        dir.derive("t_dip", only.t_dip)?;
        dir.derive("t_thouless", only.t_thouless)?;
    }
    dir.derive("epsilon", eps)?;
    dir.derive("timescales", &reports)?;
    Ok(dir)
}

fn evenodd(a: &EvenOddArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    if a.ens.dim < 3 {
        return Err(usage("--dim must be at least 3 for even/odd sums"));
    }
    let grid = a.grid.resolve(TimeGrid::default_log())?;
    let spectra;
    let source = match a.source {
        SourceArg::Analytic => EvenOddSource::Analytic {
            kind: a.ens.ensemble,
            mode: a.mode.into(),
        },
        SourceArg::Numeric => {
            spectra = unfolded_spectra(&a.ens)?;
            EvenOddSource::Spectra(&spectra)
        }
    };
    let (even, odd) = assembly::even_odd_sums(a.ens.dim, source, &grid).stage("even/odd sums")?;
    let mut dir = open(&a.out)?;
    dir.write_curve("even.csv", "value", &even)?;
    dir.write_curve("odd.csv", "value", &odd)?;
    Ok(dir)
}

fn kstar(a: &KstarArgs) -> Result<OutputDir> {
    let (kind, n) = (a.ensemble, a.dim);
    if n < 10 {
        return Err(usage(format!("--dim must be at least 10, got {n}")));
    }
    let mut dir = open(&a.out)?;
    let analytic = |m| knsff::deepest_k(kind, n, m).stage("deepest k");
    let k_star = match a.method {
        KstarMethod::Expansion => analytic(DeepestMethod::AnalyticExpansion)?,
        KstarMethod::Cubic => analytic(DeepestMethod::CubicRoot)?,
        KstarMethod::Argmin => analytic(DeepestMethod::NumericArgmin)?,
        KstarMethod::MonteCarlo => {
            let k_scan = a.kscan.unwrap_or(n / 2);
            check_cutoff(k_scan, n)?;
            if a.scan_points < 3 {
                return Err(usage("--scan-points must be at least 3"));
            }
            let ens = EnsembleArgs {
                ensemble: kind,
                dim: n,
                realizations: a.realizations,
                seed: a.seed,
            };
            let spectra = unfolded_spectra(&ens)?;
            let minima = knsff::numeric_minima(&spectra, k_scan, a.scan_points).stage("knSFF minima")?;
            write_minima(&mut dir, &minima)?;
            knsff::deepest_k_numeric(&minima).stage("deepest k")?
        }
    };
    dir.derive("k_star", k_star)?;
    dir.derive("expansion_value", knsff::deepest_k_expansion(kind, n))?;
    dir.derive("cubic_value", knsff::deepest_k_cubic(kind, n))?;
    Ok(dir)
}

fn write_minima(dir: &mut OutputDir, minima: &[knsff::NumericMinimum]) -> Result<()> {
    let header: Vec<String> = ["k", "t_min", "value"].map(String::from).to_vec();
    let rows = minima
        .iter()
        .map(|m| vec![m.k.to_string(), m.t_min.map_or_else(|| "NaN".into(), fmt_f64), fmt_f64(m.value)]);
    dir.write_rows("minima.csv", &header, rows)
}

fn selfavg_cmd(a: &SelfavgArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    check_ks(&a.k, a.ens.dim)?;
    if a.ens.realizations < 2 {
        return Err(usage("--realizations must be at least 2 for a variance"));
    }
    if !(a.window > 0.0) || !(a.t_start >= 0.0) {
        return Err(usage("--t-start must be non-negative and --window positive"));
    }
    let t_end = a.t_start + a.window;
    let grid = a.grid.resolve(TimeGrid::linear(0.0, t_end, 4000).map_err(|e| usage(e.to_string()))?)?;
    if grid.t_min > a.t_start || grid.t_max < t_end {
        return Err(usage(format!("grid must cover [{}, {t_end}]", a.t_start)));
    }
    let spectra = unfolded_spectra(&a.ens)?;
    let mut dir = open(&a.out)?;
    let mut summary = Vec::new();
    for &k in &a.k {
        let report = selfavg::relvar_report(&spectra, k, &grid, a.t_start, a.window).stage("relative variance")?;
        let curve = report.curve.as_ref().expect("report carries its curve");
        dir.write_curve(&format!("relvar_k{k}.csv"), "R_k", curve)?;
        let short = json!({ "k": k, "plateau_avg": report.plateau_avg, "formula_value": report.formula_value });
        dir.write_json(&format!("selfavg_k{k}.json"), &short)?;
        summary.push(report);
    }
    dir.derive("selfavg", summary)?;
    Ok(dir)
}

fn xxz_cmd(a: &XxzArgs) -> Result<OutputDir> {
    let mut params = XxzParams::new(a.length, a.jz, a.disorder).map_err(|e| usage(e.to_string()))?;
    params.periodic = !a.open;
    params.validate().map_err(|e| usage(e.to_string()))?;
    if a.realizations == 0 {
        return Err(usage("--realizations must be positive"));
    }
    if !(a.epsilon > 0.0) {
        return Err(usage("--epsilon must be positive"));
    }
    let basis_dim = xxz::build_basis(a.length).map_err(|e| usage(e.to_string()))?.dim();
    if a.window < 3 || a.window > basis_dim {
        return Err(usage(format!("--window must lie in 3..={basis_dim} for L = {}", a.length)));
    }
    check_ks(&a.k, a.window)?;
    let mut cfg = PipelineConfig::new(params, a.window, a.realizations, a.seed);
    cfg.grid = a.grid.resolve(TimeGrid::default_linear())?;
    cfg.k_list = a.k.clone();
    cfg.epsilon = a.epsilon;
    if let Some(k) = a.kscan {
        check_cutoff(k, a.window)?;
        cfg.k_scan = k;
    }
    let report = xxz::disorder_pipeline(&cfg).stage("XXZ pipeline")?;
    let mut dir = open(&a.out)?;
    let names = k_names(&a.k);
    dir.derive("k_list", &a.k)?;
    write_multi(&mut dir, "knsff.csv", &names, &report.curves)?;
    if let Some(full) = &report.full_sff {
        dir.write_curve("sff.csv", "value", full)?;
    }
    write_minima(&mut dir, &report.minima)?;
    dir.derive("Jz", a.jz)?;
    dir.derive("W", a.disorder)?;
    dir.derive("dim", report.dim)?;
    dir.derive("r_mean", report.r_mean)?;
    dir.derive("r_excluded", report.r_excluded)?;
    dir.derive("resorted", report.resorted)?;
    dir.derive("k_star", report.k_star)?;
    dir.derive("t_dip", report.t_dip)?;
    dir.derive("t_thouless", report.t_thouless)?;
    dir.derive("epsilon", report.epsilon)?;
    dir.derive("edge_discard", xxz::EDGE_DISCARD)?;
    dir.derive("unfold_degree", xxz::UNFOLD_DEGREE)?;
    dir.derive("seeds", &report.seeds)?;
    Ok(dir)
}

fn toy(a: &ToyArgs) -> Result<OutputDir> {
    check_dim(a.dim)?;
    let ck = gaussian_only(a.ensemble, "the toy model")?;
    let grid = a.grid.resolve(TimeGrid::default_log())?;
    let beta = a.ensemble.beta();
    let toy = assembly::toy_sff(beta, a.dim, &grid).stage("toy SFF")?;
    let full = assembly::full_sff_reference(a.ensemble, a.dim, &grid, TransformMode::Auto).stage("SFF transform")?;
    let delta = assembly::delta_sff(&toy, ck, a.dim).stage("connected SFF")?;
    let mut dir = open(&a.out)?;
    dir.write_curves("toy.csv", &[("toy", &toy), ("full", &full)])?;
    dir.write_curve("toy_delta.csv", "value", &delta)?;
    let band = delta
        .points()
        .filter(|&(t, d)| (1.0..=2.0 * PI).contains(&t) && !d.is_nan())
        .map(|(_, d)| d.abs())
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    dir.derive("max_abs_delta_1_to_2pi", band)?;
    dir.derive("epsilon", a.epsilon)?;
    dir.derive("exceeds_epsilon", band.map(|b| b > a.epsilon))?;
    Ok(dir)
}

fn read_operator(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("parsing {}", path.display()))?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| usage(format!("operator entry '{c}' is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(usage(format!("operator rows need {n} entries, got {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(usage(format!("operator needs {n} rows, got {}", rows.len())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_operator(a: &AutocorrArgs) -> Result<DMatrix<f64>> {
    let n = a.ens.dim;
    Ok(match a.operator {
        OperatorArg::Identity => DMatrix::identity(n, n),
        OperatorArg::Neighbor => DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }),
        OperatorArg::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.ens.seed, u64::MAX));
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        }
        OperatorArg::File => {
            let path = a.operator_file.as_ref().ok_or_else(|| usage("--operator file needs --operator-file"))?;
            read_operator(path, n)?
        }
    })
}

fn autocorr(a: &AutocorrArgs) -> Result<OutputDir> {
    check_ensemble(&a.ens)?;
    check_ks(&a.k, a.ens.dim)?;
    let op = build_operator(a)?;
    let grid = a.grid.resolve(TimeGrid::default_log())?;
    let spectra;
    let source = match a.source {
        AutocorrSourceArg::Spectra => {
            spectra = unfolded_spectra(&a.ens)?;
            AutocorrSource::Spectra(&spectra)
        }
        AutocorrSourceArg::Ensemble => AutocorrSource::Ensemble {
            kind: a.ens.ensemble,
            mode: a.mode.into(),
        },
    };
    let dec = assembly::autocorr_decompose(&op, source, &grid).map_err(|e| match e {
        assembly::AssemblyError::NotHermitian(..) | assembly::AssemblyError::ZeroOperator => usage(e.to_string()),
        e => crate::NumericalFailure {
            stage: "autocorrelation",
            message: e.to_string(),
        }
        .into(),
    })?;
    let mut dir = open(&a.out)?;
    dir.write_curve("autocorr_total.csv", "value", &dec.total)?;
    let names: Vec<String> = a.k.iter().map(|k| format!("C_k{k}")).collect();
    let picked: Vec<Curve> = a.k.iter().map(|&k| dec.curves[k - 1].clone()).collect();
    write_multi(&mut dir, "autocorr_components.csv", &names, &picked)?;
    dir.derive("diag_term", dec.diag_term)?;
    dir.derive("coefficients", &dec.coefficients)?;
    Ok(dir)
}
