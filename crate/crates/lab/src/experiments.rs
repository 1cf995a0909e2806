//! One function per experiment. Each returns its artifacts and a JSON summary;
//! nothing touches the disk here.

use chiral_core::fit::linear_slope;
use chiral_core::greens::{
    apriori_scan, combes_thomas_scan, fermi_projection_decay, fm_estimate, greens_column, greens_zero_block,
    greens_zero_closed_form, kernel_dim, resolvent_convergence_scan, tolerance_scale, typical_decay, FmParams,
    FERMI_NOISE_FLOOR,
};
use chiral_core::linalg::C64;
use chiral_core::lyapunov::{
    estimate_spectrum, ginibre_closed_form, localized_at_zero, sector_spectrum_zero, Localization, SectorExponents,
};
use chiral_core::model::random::{ginibre, random_hermitian};
use chiral_core::model::{
    assemble_hamiltonian, bloch_spectrum, periodic_gap_bound, periodic_gap_bound_spectral, sample_hopping,
    sample_realization, ModelConfig,
};
use chiral_core::symplectic::{
    chart_from_matrix, is_symplectic, matrix_from_chart, product_chart_three, product_chart_two,
    spectral_symmetry_check, AsymmetryPolicy, DrsChart,
};
use chiral_core::transfer::transfer_matrix;
use chiral_core::{par, seed};
use serde_json::{json, Value};

use crate::config::*;
use crate::error::{Context, LabError};
use crate::output::{fl, flag, int, Artifact, Csv};

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn new(artifacts: Vec<Artifact>, summary: Value) -> Self {
        Self { artifacts, summary, warnings: Vec::new() }
    }
}

pub fn execute(cfg: &ExperimentConfig, hash: &str) -> Result<Outcome, LabError> {
    let model = cfg.model.to_model()?;
    match &cfg.params {
        Params::Lyapunov(p) => lyapunov(&model, p, hash),
        Params::SectorZero(p) => sector_zero(cfg, &model, p, hash),
        Params::FmDecay(p) => fm_decay(&model, p, hash),
        Params::Apriori(p) => apriori(&model, p, hash),
        Params::CombesThomas(p) => combes_thomas(&model, p, hash),
        Params::ZeroEnergyCheck(p) => zero_energy_check(cfg, p, hash),
        Params::ChartCheck(p) => chart_check(cfg, p, hash),
        Params::Bloch(p) => bloch(cfg, p, hash),
        Params::Fermi(p) => fermi(&model, p, hash),
        Params::Convergence(p) => convergence(&model, p, hash),
        Params::SqrtWSweep(p) => sqrt_w_sweep(&model, p, hash),
    }
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

fn lyapunov(model: &ModelConfig, p: &LyapunovParams, hash: &str) -> Result<Outcome, LabError> {
    let mut csv = Csv::new("lyapunov.csv", hash, "lyapunov", &["z_re", "z_im", "j", "gamma", "stderr", "steps", "realizations"]);
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    let k = p.k_sigma;
    for &lambda in &p.lambda_grid {
        let z = C64::new(lambda, p.z_im);
        let est = estimate_spectrum(model, z, p.steps, p.realizations).context("lyapunov")?;
        for (j, (g, se)) in est.gammas.iter().zip(&est.std_errors).enumerate() {
            csv.push(vec![fl(z.re), fl(z.im), int(j as u64 + 1), fl(*g), fl(*se), int(est.steps), int(est.realizations as u64)]);
        }
        let gaps = est.gaps();
        let real = p.z_im == 0.0;
        points.push(json!({
            "z_re": z.re,
            "z_im": z.im,
            "gammas": est.gammas,
            "std_errors": est.std_errors,
            "gamma_n": est.gamma_n(),
            "antisymmetry_defect": real.then(|| est.antisymmetry_defect()),
            "antisymmetric_within_k_sigma": real.then(|| est.antisymmetric_within(k)),
            "zero_sum": est.sum(),
            "sum_of_errors": est.sum_of_errors(),
            "zero_sum_within_k_sigma": est.sum().abs() <= k * est.sum_of_errors(),
            "gaps": gaps.iter().map(|g| g.0).collect::<Vec<_>>(),
            "gap_errors": gaps.iter().map(|g| g.1).collect::<Vec<_>>(),
            "simple": gaps.iter().all(|(g, se)| *g > k * se),
            "resamples": est.resamples,
        }));
        if est.resamples > 0 {
            warnings.push(format!("lambda {lambda}: {} hopping draws were resampled", est.resamples));
        }
    }
    let mut out = Outcome::new(vec![csv.into_artifact()], json!({ "points": points }));
    out.warnings = warnings;
    Ok(out)
}

fn verdict_name(v: Localization) -> &'static str {
    match v {
        Localization::Localized => "localized",
        Localization::Critical => "critical",
        Localization::Inconclusive => "inconclusive",
    }
}

/// Largest |ξ_j − target_j| and the same in units of SE_j, with a floor of `floor`
/// on the allowed band reported as the worst `|dev| / max(k·SE, floor)`.
fn deviations(side: &SectorExponents, target: &[f64], k: f64, floor: f64) -> (f64, f64) {
    let it = || side.xis.iter().zip(&side.std_errors).zip(target);
    let abs = max_of(it().map(|((x, _), t)| (x - t).abs()));
    let worst = max_of(it().map(|((x, s), t)| (x - t).abs() / (k * s).max(floor)));
    (abs, worst)
}

/// Comparison with the exact Ginibre spectrum and with the degenerate value
/// log(σ0/σ1) for every j. Allowed band per exponent is max(k·SE, 0.01).
fn ginibre_comparison(spec: &chiral_core::lyapunov::SectorSpectrum, s0: f64, s1: f64, k: f64) -> chiral_core::Result<Value> {
    let n = spec.plus.xis.len();
    let exact = ginibre_closed_form(s0, s1, n)?;
    let xi = (s0 / s1).ln();
    let (abs_p, band_p) = deviations(&spec.plus, &exact.plus.xis, k, 0.01);
    let (abs_m, band_m) = deviations(&spec.minus, &exact.minus.xis, k, 0.01);
    let (deg_p, deg_band_p) = deviations(&spec.plus, &vec![xi; n], k, 0.01);
    let (deg_m, deg_band_m) = deviations(&spec.minus, &vec![-xi; n], k, 0.01);
    let mean = spec.plus.xis.iter().sum::<f64>() / n as f64;
    let mean_se = spec.plus.std_errors.iter().map(|s| s * s).sum::<f64>().sqrt() / n as f64;
    Ok(json!({
        "log_ratio": xi,
        "exact_plus": exact.plus.xis,
        "max_abs_deviation": abs_p.max(abs_m),
        "max_deviation_over_band": band_p.max(band_m),
        "within_band": band_p.max(band_m) <= 1.0,
        "degenerate_max_abs_deviation": deg_p.max(deg_m),
        "degenerate_within_band": deg_band_p.max(deg_band_m) <= 1.0,
        "plus_mean": mean,
        "plus_mean_stderr": mean_se,
        "mean_within_band": (mean - xi).abs() <= (k * mean_se).max(0.01),
    }))
}

fn sector_zero(cfg: &ExperimentConfig, model: &ModelConfig, p: &SectorParams, hash: &str) -> Result<Outcome, LabError> {
    let spec = sector_spectrum_zero(model, p.steps, p.realizations).context("sector-zero")?;
    let mut csv = Csv::new("sector_zero.csv", hash, "sector-zero", &["sector", "j", "xi", "stderr", "steps", "realizations"]);
    for (name, side) in [("plus", &spec.plus), ("minus", &spec.minus)] {
        for (j, (x, s)) in side.xis.iter().zip(&side.std_errors).enumerate() {
            csv.push(vec![name.to_string(), int(j as u64 + 1), fl(*x), fl(*s), int(spec.steps), int(spec.realizations as u64)]);
        }
    }
    let (per_site, per_site_se) = spec.per_site_spectrum();
    let closed = match (cfg.model.alpha0.ginibre_sigma(), cfg.model.alpha1.ginibre_sigma()) {
        (Some(s0), Some(s1)) if cfg.model.onsite.is_none() => {
            ginibre_comparison(&spec, s0, s1, p.k_sigma).context("ginibre closed form")?
        }
        _ => Value::Null,
    };
    let summary = json!({
        "plus": { "xis": spec.plus.xis, "std_errors": spec.plus.std_errors },
        "minus": { "xis": spec.minus.xis, "std_errors": spec.minus.std_errors },
        "per_site_gammas": per_site,
        "per_site_std_errors": per_site_se,
        "localized_at_zero": verdict_name(localized_at_zero(&spec, p.k_sigma)),
        "ginibre_closed_form": closed,
        "steps": spec.steps,
        "realizations": spec.realizations,
        "resamples": spec.resamples,
    });
    let mut out = Outcome::new(vec![csv.into_artifact()], summary);
    if spec.resamples > 0 {
        out.warnings.push(format!("{} hopping draws were resampled", spec.resamples));
    }
    Ok(out)
}

fn fm_decay(model: &ModelConfig, p: &FmDecayParams, hash: &str) -> Result<Outcome, LabError> {
    let mut fp = FmParams::new(p.lambda, p.eta, p.s, p.window_len, p.realizations);
    fp.bootstrap = p.bootstrap;
    let hi = if p.fit_max < 0.0 { 0.9 * (p.window_len - 1) as f64 } else { p.fit_max };
    fp.fit_window = Some((p.fit_min, hi));
    let est = fm_estimate(model, &fp).context("fm-decay")?;
    let mut csv = Csv::new("fm_decay.csv", hash, "fm-decay", &["distance", "mean", "stderr", "n", "op_mean", "lambda_s_mean"]);
    let lam_s = p.lambda.abs().powf(p.s);
    for i in 0..est.distances.len() {
        csv.push(vec![
            int(est.distances[i] as u64),
            fl(est.sample_means[i]),
            fl(est.std_errors[i]),
            int(est.counts[i] as u64),
            fl(est.op_means[i]),
            fl(lam_s * est.sample_means[i]),
        ]);
    }
    let fit = json!({
        "config_hash": hash,
        "mu": est.mu,
        "intercept": est.fit.intercept,
        "r2": est.fit.r_squared,
        "band": est.mu_band,
        "slope_se": est.fit.slope_se,
        "fit_window": [est.fit.window.0, est.fit.window.1],
        "n_points": est.fit.n_points,
    });
    let comparison = if p.compare_lyapunov {
        let typ = typical_decay(model, p.lambda, p.window_len, p.realizations).context("typical decay")?;
        let lyap = estimate_spectrum(model, C64::new(p.lambda, 0.0), p.lyapunov_steps, p.lyapunov_realizations)
            .context("lyapunov reference")?;
        let g = lyap.gamma_n();
        json!({
            "typical_decay_median": typ.median,
            "gamma_n": g,
            "gamma_n_stderr": lyap.std_errors[lyap.gammas.len() / 2 - 1],
            "relative_deviation": (typ.median - g).abs() / g.abs(),
            "rejected": typ.rejected,
        })
    } else {
        Value::Null
    };
    let summary = json!({
        "mu": est.mu,
        "band": est.mu_band,
        "r2": est.fit.r_squared,
        "fit_window": [est.fit.window.0, est.fit.window.1],
        "positive_by_3_band": est.mu > 3.0 * est.mu_band,
        "rejected": est.rejected,
        "typical_vs_lyapunov": comparison,
    });
    let mut out = Outcome::new(vec![csv.into_artifact(), Artifact::json("fit.json", &fit)], summary);
    if est.rejected > 0 {
        out.warnings.push(format!("{} realizations had an eigenvalue at the energy and were replaced", est.rejected));
    }
    Ok(out)
}

fn apriori(model: &ModelConfig, p: &AprioriParams, hash: &str) -> Result<Outcome, LabError> {
    let zs: Vec<C64> = p.z_list.iter().map(|z| C64::new(z[0], z[1])).collect();
    let scan = apriori_scan(model, &zs, p.s, p.realizations, p.window_len).context("apriori")?;
    let mut csv = Csv::new(
        "apriori.csv",
        hash,
        "apriori",
        &["z_re", "z_im", "one_step_mean", "one_step_se", "diag_mean", "diag_se", "flagged"],
    );
    for r in &scan.rows {
        csv.push(vec![fl(r.z.re), fl(r.z.im), fl(r.one_step_mean), fl(r.one_step_se), fl(r.diag_mean), fl(r.diag_se), flag(r.flagged)]);
    }
    let spread = |v: f64, med: f64| (v / med).max(med / v);
    let summary = json!({
        "site": scan.site,
        "window": [scan.window.0, scan.window.1],
        "one_step_median": scan.one_step_median,
        "diag_median": scan.diag_median,
        "max_one_step_factor": max_of(scan.rows.iter().map(|r| spread(r.one_step_mean, scan.one_step_median))),
        "max_diag_factor": max_of(scan.rows.iter().map(|r| spread(r.diag_mean, scan.diag_median))),
        "any_flagged": scan.rows.iter().any(|r| r.flagged),
        "rejected": scan.rejected,
    });
    Ok(Outcome::new(vec![csv.into_artifact()], summary))
}

fn combes_thomas(model: &ModelConfig, p: &CombesThomasParams, hash: &str) -> Result<Outcome, LabError> {
    let scan = combes_thomas_scan(model, p.energy, &p.etas, p.s, p.window_len, p.realizations).context("combes-thomas")?;
    let mut csv =
        Csv::new("combes_thomas.csv", hash, "combes-thomas", &["eta", "mu", "band", "intercept", "r2", "mu_over_eta"]);
    for r in &scan.rows {
        let e = &r.estimate;
        csv.push(vec![fl(r.eta), fl(e.mu), fl(e.mu_band), fl(e.fit.intercept), fl(e.fit.r_squared), fl(r.mu_over_eta)]);
    }
    let summary = json!({
        "energy": scan.energy,
        "etas": scan.rows.iter().map(|r| r.eta).collect::<Vec<_>>(),
        "mus": scan.rows.iter().map(|r| r.estimate.mu).collect::<Vec<_>>(),
        "bands": scan.rows.iter().map(|r| r.estimate.mu_band).collect::<Vec<_>>(),
        "mu_over_eta": scan.rows.iter().map(|r| r.mu_over_eta).collect::<Vec<_>>(),
        "monotone_within_bands": scan.monotone,
    });
    Ok(Outcome::new(vec![csv.into_artifact()], summary))
}

/// Numerical-rank cut for kernel dimensions: exact zero modes come out near machine
/// precision while the even-window minimum is only exponentially small.
const KERNEL_TOL: f64 = 1e-12;

struct ZeroRow {
    scale: f64,
    g_max: f64,
    closed_form_dev: f64,
    same_parity_max: f64,
    diagonal_exact_zero: bool,
    kernel_even: usize,
    kernel_odd: usize,
}

fn zero_row(model: &ModelConfig, len: i64, index: u64) -> chiral_core::Result<ZeroRow> {
    let zero = C64::new(0.0, 0.0);
    let r = sample_realization(model, (1, len), index)?;
    let h = assemble_hamiltonian(&r)?;
    let scale = tolerance_scale(&h, zero);
    let (mut dev, mut same, mut diag, mut g_max) = (0.0f64, 0.0f64, true, 0.0f64);
    for y in 1..=len {
        let col = greens_column(&h, zero, y)?;
        for x in 1..=len {
            let got = &col[(x - 1) as usize];
            if (x - y) % 2 == 0 {
                same = same.max(got.norm_max());
                if x == y {
                    diag &= greens_zero_closed_form(&r, x, y)?.norm_max() == 0.0;
                }
            } else {
                let want = greens_zero_block(&r, x, y)?;
                g_max = g_max.max(want.norm_max());
                dev = dev.max(got.max_abs_diff(&want));
            }
        }
    }
    let odd = assemble_hamiltonian(&sample_realization(model, (1, len + 1), index)?)?;
    Ok(ZeroRow {
        scale,
        g_max,
        closed_form_dev: dev / scale,
        same_parity_max: same / scale,
        diagonal_exact_zero: diag,
        kernel_even: kernel_dim(&h, KERNEL_TOL),
        kernel_odd: kernel_dim(&odd, KERNEL_TOL),
    })
}

fn zero_energy_check(cfg: &ExperimentConfig, p: &ZeroEnergyParams, hash: &str) -> Result<Outcome, LabError> {
    let models: Vec<ModelConfig> = p.n_values.iter().map(|&n| cfg.model.with_n(n)).collect::<Result<_, _>>()?;
    let tasks: Vec<(usize, usize, u64)> = (0..models.len())
        .flat_map(|m| p.window_lens.iter().flat_map(move |&l| (0..p.samples as u64).map(move |i| (m, l, i))))
        .collect();
    let rows = par::collect_ordered(par::map_indices(tasks.len(), |t| {
        let (m, l, i) = tasks[t];
        zero_row(&models[m], l as i64, i)
    }))
    .context("zero-energy-check")?;

    let mut csv = Csv::new(
        "zero_energy.csv",
        hash,
        "zero-energy-check",
        &["n_internal", "window_len", "index", "scale", "g_max", "closed_form_dev", "same_parity_max", "diagonal_exact_zero", "kernel_even", "kernel_odd"],
    );
    let mut kernel_ok = true;
    for (&(m, l, i), r) in tasks.iter().zip(&rows) {
        let n = p.n_values[m];
        kernel_ok &= r.kernel_even == 0 && r.kernel_odd == n;
        csv.push(vec![
            int(n as u64),
            int(l as u64),
            int(i),
            fl(r.scale),
            fl(r.g_max),
            fl(r.closed_form_dev),
            fl(r.same_parity_max),
            flag(r.diagonal_exact_zero),
            int(r.kernel_even as u64),
            int(r.kernel_odd as u64),
        ]);
    }

    let len = p.window_lens[0] as i64;
    let r = sample_realization(&models[0], (1, len), p.dump_index).context("greens dump")?;
    let h = assemble_hamiltonian(&r).context("greens dump")?;
    let mut dump = Csv::new("greens_dump.csv", hash, "zero-energy-check", &["x", "y", "row", "col", "re", "im"]);
    for y in 1..=len {
        let col = greens_column(&h, C64::new(0.0, 0.0), y).context("greens dump")?;
        for x in 1..=len {
            let g = &col[(x - 1) as usize];
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    dump.push(vec![int(x), int(y), int(i as u64), int(j as u64), fl(g[(i, j)].re), fl(g[(i, j)].im)]);
                }
            }
        }
    }

    let summary = json!({
        "closed_form_max_dev": max_of(rows.iter().map(|r| r.closed_form_dev)),
        "closed_form_max_dev_conditioned": max_of(rows.iter().map(|r| r.closed_form_dev / r.g_max.max(1.0))),
        "g_max": max_of(rows.iter().map(|r| r.g_max)),
        "same_parity_max": max_of(rows.iter().map(|r| r.same_parity_max)),
        "diagonal_exact_zero": rows.iter().all(|r| r.diagonal_exact_zero),
        "kernel_dimensions_ok": kernel_ok,
        "cases": rows.len(),
        "tolerances_relative_to": "1 + |H| + |z|",
        "conditioned_also_relative_to": "max(1, max |G(x,y)|)",
        "kernel_tolerance": KERNEL_TOL,
    });
    Ok(Outcome::new(vec![csv.into_artifact(), dump.into_artifact()], summary))
}

struct ChartRow {
    n: usize,
    lambda: f64,
    round_trip: f64,
    product_two: f64,
    product_three: f64,
    symplectic_residual: f64,
    pairing_defect: f64,
}

fn chart_row(model: &ModelConfig, lambda: f64, index: u64) -> chiral_core::Result<ChartRow> {
    let n = model.n_internal;
    let mut rng = seed::stream(model.seed, index, 0, seed::tag::AUXILIARY);
    let c = DrsChart::new(ginibre(n, 1.0, &mut rng), random_hermitian(n, 1.0, &mut rng), random_hermitian(n, 1.0, &mut rng))?;
    let back = chart_from_matrix(&matrix_from_chart(&c)?, AsymmetryPolicy::default())?;
    let round_trip = back.chart.max_deviation(&c) / c.scale();

    let z = C64::new(lambda, 0.0);
    let t: Vec<_> = (1..=3).map(|s| model.sample_site_hopping(index, s).map(|h| h.matrix)).collect::<Result<_, _>>()?;
    let m: Vec<_> = t.iter().map(|ti| transfer_matrix(ti, z)).collect::<Result<_, _>>()?;
    let two = product_chart_two(&t[1], &t[2], lambda)?;
    let brute_two = chart_from_matrix(&m[1].matmul(&m[2]), AsymmetryPolicy::default())?;
    let three = product_chart_three(&t[0], &two, lambda)?;
    let prod = m[0].matmul(&m[1]).matmul(&m[2]);
    let brute_three = chart_from_matrix(&prod, AsymmetryPolicy::default())?;
    let member = is_symplectic(&prod, 1e-10)?;
    Ok(ChartRow {
        n,
        lambda,
        round_trip,
        product_two: two.max_deviation(&brute_two.chart) / brute_two.chart.scale(),
        product_three: three.max_deviation(&brute_three.chart) / brute_three.chart.scale(),
        symplectic_residual: member.residual / member.scale,
        pairing_defect: spectral_symmetry_check(&prod)?.singular_defect,
    })
}

fn chart_check(cfg: &ExperimentConfig, p: &ChartParams, hash: &str) -> Result<Outcome, LabError> {
    let models: Vec<ModelConfig> = p.n_values.iter().map(|&n| cfg.model.with_n(n)).collect::<Result<_, _>>()?;
    let rows = par::collect_ordered(par::map_indices(p.samples, |i| {
        chart_row(&models[i % models.len()], p.lambdas[i % p.lambdas.len()], i as u64)
    }))
    .context("chart-check")?;
    let mut csv = Csv::new(
        "chart_check.csv",
        hash,
        "chart-check",
        &["index", "n", "lambda", "round_trip", "product_two", "product_three", "symplectic_residual", "pairing_defect"],
    );
    for (i, r) in rows.iter().enumerate() {
        csv.push(vec![
            int(i as u64),
            int(r.n as u64),
            fl(r.lambda),
            fl(r.round_trip),
            fl(r.product_two),
            fl(r.product_three),
            fl(r.symplectic_residual),
            fl(r.pairing_defect),
        ]);
    }
    let rt = max_of(rows.iter().map(|r| r.round_trip));
    let p2 = max_of(rows.iter().map(|r| r.product_two));
    let p3 = max_of(rows.iter().map(|r| r.product_three));
    let summary = json!({
        "max_chart_defect": rt.max(p2).max(p3),
        "max_round_trip": rt,
        "max_product_two": p2,
        "max_product_three": p3,
        "max_symplectic_residual": max_of(rows.iter().map(|r| r.symplectic_residual)),
        "max_pairing_defect": max_of(rows.iter().map(|r| r.pairing_defect)),
        "samples": rows.len(),
        "chart_defects_relative_to": "max(1, |D|, |R|, |S|)",
        "symplectic_residual_relative_to": "max(1, |M|^2)",
    });
    Ok(Outcome::new(vec![csv.into_artifact()], summary))
}

struct BlochRow {
    n: usize,
    inf_h2: f64,
    literal: f64,
    spectral: f64,
}

fn bloch(cfg: &ExperimentConfig, p: &BlochParams, hash: &str) -> Result<Outcome, LabError> {
    let models: Vec<ModelConfig> = p.n_values.iter().map(|&n| cfg.model.with_n(n)).collect::<Result<_, _>>()?;
    let rows = par::collect_ordered(par::map_indices(p.samples, |i| -> chiral_core::Result<BlochRow> {
        let m = &models[i % models.len()];
        let n = m.n_internal;
        let mut rng = seed::stream(m.seed, i as u64, 0, seed::tag::AUXILIARY);
        let a = sample_hopping(&m.alpha0, n, &mut rng)?.matrix;
        let b = sample_hopping(&m.alpha1, n, &mut rng)?.matrix;
        Ok(BlochRow {
            n,
            inf_h2: bloch_spectrum(&a, &b, p.k_grid)?.inf_h_squared(),
            literal: periodic_gap_bound(&a, &b)?,
            spectral: periodic_gap_bound_spectral(&a, &b)?,
        })
    }))
    .context("bloch")?;
    let mut csv = Csv::new("bloch.csv", hash, "bloch", &["index", "n", "inf_h2", "bound_literal", "bound_spectral"]);
    for (i, r) in rows.iter().enumerate() {
        csv.push(vec![int(i as u64), int(r.n as u64), fl(r.inf_h2), fl(r.literal), fl(r.spectral)]);
    }
    let one = chiral_core::linalg::CMatrix::identity(1);
    let mut unit = Csv::new("bloch_unit.csv", hash, "bloch", &["k_grid", "grid_min", "refined_min"]);
    let mut unit_mins = Vec::new();
    for &g in &p.unit_grids {
        let bands = bloch_spectrum(&one, &one, g).context("bloch unit chain")?;
        unit.push(vec![int(g as u64), fl(bands.grid_min), fl(bands.refined_min)]);
        unit_mins.push(json!({ "k_grid": g, "grid_min": bands.grid_min }));
    }
    let violations = |f: &dyn Fn(&BlochRow) -> f64, n: Option<usize>| {
        rows.iter().filter(|r| n.is_none_or(|n| r.n == n)).filter(|r| r.inf_h2 > f(r) + 1e-8).count()
    };
    let literal_by_n: serde_json::Map<String, Value> =
        p.n_values.iter().map(|&n| (n.to_string(), json!(violations(&|r| r.literal, Some(n))))).collect();
    let summary = json!({
        "samples": rows.len(),
        "spectral_bound_violations": violations(&|r| r.spectral, None),
        "literal_bound_violations": violations(&|r| r.literal, None),
        "literal_bound_violations_by_n": literal_by_n,
        "unit_chain": unit_mins,
    });
    Ok(Outcome::new(vec![csv.into_artifact(), unit.into_artifact()], summary))
}

fn fermi(model: &ModelConfig, p: &FermiParams, hash: &str) -> Result<Outcome, LabError> {
    let window = (p.window_start, p.window_start + p.window_len as i64 - 1);
    let r = sample_realization(model, window, p.index).context("fermi")?;
    let h = assemble_hamiltonian(&r).context("fermi")?;
    let rep = fermi_projection_decay(&h, p.fermi_energy).context("fermi")?;
    let mut csv = Csv::new("fermi.csv", hash, "fermi", &["distance", "norm", "used_in_fit"]);
    for (d, v) in rep.distances.iter().zip(&rep.norms) {
        csv.push(vec![int(*d as u64), fl(*v), flag(*v >= FERMI_NOISE_FLOOR)]);
    }
    let summary = json!({
        "site": rep.site,
        "window": [window.0, window.1],
        "slope": rep.fit.slope,
        "band": rep.band,
        "r2": rep.fit.r_squared,
        "decaying_by_3_band": rep.fit.slope < -3.0 * rep.band,
        "fit_points": rep.fit.n_points,
        "idempotency_defect": rep.idempotency_defect,
        "chirality_defect": rep.chirality_defect,
        "kernel_dim": kernel_dim(&h, KERNEL_TOL),
    });
    Ok(Outcome::new(vec![csv.into_artifact()], summary))
}

fn convergence(model: &ModelConfig, p: &ConvergenceParams, hash: &str) -> Result<Outcome, LabError> {
    let z = C64::new(p.z_re, p.z_im);
    let scan = resolvent_convergence_scan(model, z, &p.half_widths, p.index).context("convergence")?;
    let mut csv = Csv::new("convergence.csv", hash, "convergence", &["half_width", "g00_trace_norm", "diff_prev"]);
    for r in &scan.rows {
        let diff = r.diff_prev.map(fl).unwrap_or_default();
        csv.push(vec![int(r.half_width), fl(chiral_core::linalg::trace_norm(&r.g00)), diff]);
    }
    let summary = json!({
        "differences": scan.rows.iter().filter_map(|r| r.diff_prev).collect::<Vec<_>>(),
        "cauchy_decreasing": scan.cauchy_decreasing,
    });
    Ok(Outcome::new(vec![csv.into_artifact()], summary))
}

fn sqrt_w_sweep(model: &ModelConfig, p: &SqrtWParams, hash: &str) -> Result<Outcome, LabError> {
    let mut csv = Csv::new(
        "sqrt_w.csv",
        hash,
        "sqrt-w-sweep",
        &["w", "sigma0", "sigma1", "min_abs_xi", "stderr", "exact_min_abs_xi", "w_times_min", "w_times_stderr", "steps", "realizations"],
    );
    let mut points = Vec::new();
    let (mut log_w, mut log_min) = (Vec::new(), Vec::new());
    for &w in &p.w_list {
        let wf = w as f64;
        let (s0, s1) = ((-1.0 / wf).exp(), (-2.0 / wf).exp());
        let cfg = ModelConfig::ginibre_pair(w, s0, s1, model.seed);
        let spec = sector_spectrum_zero(&cfg, p.steps, p.realizations).context("sqrt-w-sweep")?;
        let (m, se) = spec.min_abs_xi();
        let exact = ginibre_closed_form(s0, s1, w).context("sqrt-w-sweep")?.min_abs_xi().0;
        csv.push(vec![int(w as u64), fl(s0), fl(s1), fl(m), fl(se), fl(exact), fl(wf * m), fl(wf * se), int(spec.steps), int(spec.realizations as u64)]);
        points.push(json!({
            "w": w,
            "min_abs_xi": m,
            "stderr": se,
            "exact_min_abs_xi": exact,
            "w_times_min": wf * m,
            "w_times_exact_min": wf * exact,
            "within_k_sigma_of_one": (wf * m - 1.0).abs() <= p.k_sigma * wf * se,
            "within_k_sigma_of_exact": (m - exact).abs() <= p.k_sigma * se,
        }));
        log_w.push(wf.ln());
        log_min.push(m.ln());
    }
    let finite = log_min.iter().all(|v: &f64| v.is_finite());
    let slope = if log_w.len() >= 2 && finite { Some(linear_slope(&log_w, &log_min).context("sqrt-w-sweep")?.0) } else { None };
    let mut out = Outcome::new(vec![csv.into_artifact()], json!({ "points": points, "log_log_slope": slope }));
    out.warnings.push("model laws and n_internal are replaced by N = W with sigma0 = e^(-1/W), sigma1 = e^(-2/W); only model.seed is used".into());
    Ok(out)
}
