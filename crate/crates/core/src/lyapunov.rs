//! Lyapunov spectra from QR-deflated transfer products.
//!
//! The full spectrum γ_1 ≥ … ≥ γ_2N is normalized per site. At zero energy the
//! chiral model splits into two N×N sector products; their exponents ξ are
//! normalized per sector step, i.e. per two sites, so γ(0) = {ξ/2}.

use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix};
use crate::model::ModelConfig;
use crate::par;
use crate::stats;
use crate::transfer::{transfer_matrix, transfer_matrix_onsite, zero_energy_sector_step, ProductAccumulator};

/// Smallest accepted step count.
pub const MIN_STEPS: u64 = 1_000;
/// Batches per realization for the batch-means error estimate.
pub const BATCHES: usize = 32;
/// Realizations needed before the across-realization spread is used for errors.
pub const MIN_REALIZATIONS_FOR_SPREAD: usize = 8;
pub const DEFAULT_K_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Full,
    Sector,
}

#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub z: C64,
    /// Descending.
    pub gammas: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub steps: u64,
    pub realizations: usize,
    pub method: Method,
    /// Rejected hopping draws across all realizations.
    pub resamples: usize,
}

impl LyapunovEstimate {
    /// max_j |γ_j + γ_{2N+1−j}|; only meaningful for real z.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.gammas.len();
        (0..d).map(|j| (self.gammas[j] + self.gammas[d - 1 - j]).abs()).fold(0.0, f64::max)
    }

    /// True when every pair satisfies |γ_j + γ_{2N+1−j}| ≤ k·(SE_j + SE_{2N+1−j}).
    pub fn antisymmetric_within(&self, k_sigma: f64) -> bool {
        let d = self.gammas.len();
        (0..d).all(|j| {
            (self.gammas[j] + self.gammas[d - 1 - j]).abs() <= k_sigma * (self.std_errors[j] + self.std_errors[d - 1 - j])
        })
    }

    pub fn sum(&self) -> f64 {
        self.gammas.iter().sum()
    }

    pub fn sum_of_errors(&self) -> f64 {
        self.std_errors.iter().sum()
    }

    /// γ_j − γ_{j+1} and the combined error √(SE_j² + SE_{j+1}²).
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.gammas
            .windows(2)
            .zip(self.std_errors.windows(2))
            .map(|(g, s)| (g[0] - g[1], s[0].hypot(s[1])))
            .collect()
    }

    /// γ_N, the smallest non-negative exponent for real z.
    pub fn gamma_n(&self) -> f64 {
        self.gammas[self.gammas.len() / 2 - 1]
    }

    /// Fails with `InsufficientSteps` if some error exceeds half of |γ_N|.
    pub fn require_gap(&self) -> Result<()> {
        let g = self.gamma_n().abs();
        match self.std_errors.iter().position(|&se| se > 0.5 * g) {
            Some(j) => Err(Error::InsufficientSteps(format!(
                "standard error {:e} of exponent {} exceeds half of |γ_N| = {:e}",
                self.std_errors[j],
                j + 1,
                g
            ))),
            None => Ok(()),
        }
    }
}

/// Per-sector exponents, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorExponents {
    pub xis: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Zero-energy exponents of the sector maps −T_{2x+1}° T_{2x} (plus) and
/// −T_{2x+2}° T_{2x+1} (minus), per two-site step.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSpectrum {
    pub plus: SectorExponents,
    pub minus: SectorExponents,
    pub steps: u64,
    pub realizations: usize,
    pub resamples: usize,
}

impl SectorSpectrum {
    /// The per-site zero-energy spectrum implied by both sectors, descending.
    pub fn per_site_spectrum(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pairs: Vec<(f64, f64)> = self
            .plus
            .xis
            .iter()
            .zip(&self.plus.std_errors)
            .chain(self.minus.xis.iter().zip(&self.minus.std_errors))
            .map(|(x, s)| (x / 2.0, s / 2.0))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs.into_iter().unzip()
    }

    /// min_j |ξ_j| over the plus sector.
    pub fn min_abs_xi(&self) -> (f64, f64) {
        self.plus
            .xis
            .iter()
            .zip(&self.plus.std_errors)
            .map(|(x, s)| (x.abs(), *s))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("non-empty sector")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Localization {
    Localized,
    Critical,
    Inconclusive,
}

fn check_steps(steps: u64, realizations: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::InsufficientSteps(format!("{steps} steps, need at least {MIN_STEPS}")));
    }
    if steps % 2 != 0 {
        return Err(Error::InsufficientSteps(format!("{steps} steps; the count must be even")));
    }
    if realizations == 0 {
        return Err(Error::InvalidParameter("at least one realization is needed".into()));
    }
    Ok(())
}

/// Growth rates of one accumulator plus per-batch increments.
struct Run {
    rates: Vec<f64>,
    batches: Vec<Vec<f64>>,
    resamples: usize,
}

struct BatchRecorder {
    batch_len: u64,
    last: Vec<f64>,
    batches: Vec<Vec<f64>>,
}

impl BatchRecorder {
    fn new(steps: u64, k: usize) -> Self {
        Self { batch_len: (steps / BATCHES as u64).max(1), last: vec![0.0; k], batches: Vec::with_capacity(BATCHES) }
    }

    fn observe(&mut self, step: u64, acc: &mut ProductAccumulator) -> Result<()> {
        if step % self.batch_len == 0 && self.batches.len() < BATCHES {
            acc.flush()?;
            let now = acc.log_sums();
            let rates = now.iter().zip(&self.last).map(|(n, l)| (n - l) / self.batch_len as f64).collect();
            self.batches.push(rates);
            self.last = now.to_vec();
        }
        Ok(())
    }
}

fn run_full(config: &ModelConfig, z: C64, steps: u64, index: u64) -> Result<Run> {
    let dim = 2 * config.n_internal;
    let mut acc = ProductAccumulator::new(dim, dim);
    let mut rec = BatchRecorder::new(steps, dim);
    let mut resamples = 0;
    for step in 1..=steps {
        let n = step as i64;
        let t = config.sample_site_hopping(index, n)?;
        resamples += t.resamples;
        let a = match config.sample_site_onsite(index, n) {
            Some(v) => transfer_matrix_onsite(&t.matrix, &v, z)?,
            None => transfer_matrix(&t.matrix, z)?,
        };
        acc.propagate(&a)?;
        rec.observe(step, &mut acc)?;
    }
    Ok(Run { rates: acc.exponents()?, batches: rec.batches, resamples })
}

/// Aggregates per-realization rates into (means, SEs), column by column.
fn aggregate(runs: &[Run]) -> (Vec<f64>, Vec<f64>) {
    let k = runs[0].rates.len();
    let mut means = Vec::with_capacity(k);
    let mut errors = Vec::with_capacity(k);
    for j in 0..k {
        let per_run: Vec<f64> = runs.iter().map(|r| r.rates[j]).collect();
        means.push(stats::mean(&per_run));
        if runs.len() >= MIN_REALIZATIONS_FOR_SPREAD {
            errors.push(stats::std_error(&per_run));
        } else {
            let pooled: Vec<f64> = runs.iter().flat_map(|r| r.batches.iter().map(move |b| b[j])).collect();
            errors.push(stats::std_error(&pooled));
        }
    }
    (means, errors)
}

fn sort_descending(values: Vec<f64>, errors: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(errors).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.into_iter().unzip()
}

/// Full 2N-frame estimate over `realizations` independent chains of `steps` sites.
pub fn estimate_spectrum(config: &ModelConfig, z: C64, steps: u64, realizations: usize) -> Result<LyapunovEstimate> {
    config.validate()?;
    check_steps(steps, realizations)?;
    let runs = par::collect_ordered(par::map_indices(realizations, |i| run_full(config, z, steps, i as u64)))?;
    let (means, errors) = aggregate(&runs);
    let (gammas, std_errors) = sort_descending(means, errors);
    Ok(LyapunovEstimate {
        z,
        gammas,
        std_errors,
        steps,
        realizations,
        method: Method::Full,
        resamples: runs.iter().map(|r| r.resamples).sum(),
    })
}

fn run_sectors(config: &ModelConfig, steps: u64, index: u64) -> Result<(Run, Run)> {
    let n = config.n_internal;
    let mut plus = ProductAccumulator::new(n, n);
    let mut minus = ProductAccumulator::new(n, n);
    let mut rec_plus = BatchRecorder::new(steps, n);
    let mut rec_minus = BatchRecorder::new(steps, n);
    let first = config.sample_site_hopping(index, 2)?;
    let mut resamples = first.resamples;
    let mut t_even = first.matrix;
    for x in 1..=steps {
        let site = 2 * x as i64;
        let t_odd = config.sample_site_hopping(index, site + 1)?;
        let t_next = config.sample_site_hopping(index, site + 2)?;
        resamples += t_odd.resamples + t_next.resamples;
        plus.propagate(&zero_energy_sector_step(&t_odd.matrix, &t_even)?)?;
        minus.propagate(&zero_energy_sector_step(&t_next.matrix, &t_odd.matrix)?)?;
        rec_plus.observe(x, &mut plus)?;
        rec_minus.observe(x, &mut minus)?;
        t_even = t_next.matrix;
    }
    Ok((
        Run { rates: plus.exponents()?, batches: rec_plus.batches, resamples },
        Run { rates: minus.exponents()?, batches: rec_minus.batches, resamples: 0 },
    ))
}

/// Both zero-energy sector spectra from one pass over `steps` two-site steps.
pub fn sector_spectrum_zero(config: &ModelConfig, steps: u64, realizations: usize) -> Result<SectorSpectrum> {
    config.validate()?;
    if !config.is_chiral() {
        return Err(Error::NotChiral);
    }
    check_steps(steps, realizations)?;
    let runs = par::collect_ordered(par::map_indices(realizations, |i| run_sectors(config, steps, i as u64)))?;
    let (plus_runs, minus_runs): (Vec<Run>, Vec<Run>) = runs.into_iter().unzip();
    let resamples = plus_runs.iter().map(|r| r.resamples).sum();
    let side = |runs: &[Run]| {
        let (m, e) = aggregate(runs);
        let (xis, std_errors) = sort_descending(m, e);
        SectorExponents { xis, std_errors }
    };
    Ok(SectorSpectrum { plus: side(&plus_runs), minus: side(&minus_runs), steps, realizations, resamples })
}

/// Exact zero-energy spectrum for Ginibre laws,
/// ξ_j = log(σ0/σ1) + (ψ(N+1−j) − ψ(j))/2 with ψ the digamma function, in the plus
/// sector and the same with −log(σ0/σ1) in the minus sector. The spectrum is not
/// degenerate for N > 1; only its mean equals ±log(σ0/σ1).
pub fn ginibre_closed_form(sigma0: f64, sigma1: f64, n_internal: usize) -> Result<SectorSpectrum> {
    if !(sigma0 > 0.0 && sigma1 > 0.0) {
        return Err(Error::InvalidParameter("Ginibre standard deviations must be positive".into()));
    }
    let xi = (sigma0 / sigma1).ln();
    // ψ(a+1) − ψ(b+1) = H_a − H_b for integers.
    let harmonic: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n_internal).scan(0.0, |h, k| {
            *h += 1.0 / k as f64;
            Some(*h)
        }))
        .collect();
    let spread: Vec<f64> = (1..=n_internal).map(|j| 0.5 * (harmonic[n_internal - j] - harmonic[j - 1])).collect();
    let side = |x: f64| SectorExponents {
        xis: spread.iter().map(|d| x + d).collect(),
        std_errors: vec![0.0; n_internal],
    };
    Ok(SectorSpectrum { plus: side(xi), minus: side(-xi), steps: 0, realizations: 0, resamples: 0 })
}

/// Decision rule on both sectors: Localized if every |ξ_j| > k·SE_j, Critical if
/// some |ξ_j| ≤ SE_j, Inconclusive otherwise.
pub fn localized_at_zero(spec: &SectorSpectrum, k_sigma: f64) -> Localization {
    let all: Vec<(f64, f64)> = spec
        .plus
        .xis
        .iter()
        .zip(&spec.plus.std_errors)
        .chain(spec.minus.xis.iter().zip(&spec.minus.std_errors))
        .map(|(x, s)| (x.abs(), *s))
        .collect();
    if all.iter().any(|&(x, s)| x <= s) {
        Localization::Critical
    } else if all.iter().all(|&(x, s)| x > k_sigma * s) {
        Localization::Localized
    } else {
        Localization::Inconclusive
    }
}

/// One estimate per real energy. Every point reuses the same seeds.
pub fn spectrum_vs_energy(
    config: &ModelConfig,
    lambda_grid: &[f64],
    steps: u64,
    realizations: usize,
) -> Result<Vec<LyapunovEstimate>> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("energy grid is empty".into()));
    }
    lambda_grid.iter().map(|&l| estimate_spectrum(config, C64::new(l, 0.0), steps, realizations)).collect()
}

/// Deterministic constant-hopping chain: exponents are log moduli of the
/// eigenvalues of the single transfer matrix, ± paired.
pub fn constant_chain_exponents(t: &CMatrix, z: C64) -> Result<Vec<f64>> {
    let a = transfer_matrix(t, z)?;
    let mut logs: Vec<f64> = a.to_nalgebra().eigenvalues().map(|v| v.iter().map(|e| e.norm().ln()).collect()).ok_or(
        Error::DimensionMismatch("eigenvalue iteration did not converge".into()),
    )?;
    logs.sort_by(|a, b| b.total_cmp(a));
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistributionSpec;

    fn unit_chain(seed: u64) -> ModelConfig {
        ModelConfig::chiral(1, DistributionSpec::diagonal_uniform(1.0, 1.0), DistributionSpec::diagonal_uniform(1.0, 1.0), seed)
    }

    #[test]
    fn step_validation() {
        let cfg = ModelConfig::ginibre_pair(1, 1.0, 1.0, 0);
        assert!(matches!(estimate_spectrum(&cfg, C64::new(1.0, 0.0), 999, 1), Err(Error::InsufficientSteps(_))));
        assert!(matches!(estimate_spectrum(&cfg, C64::new(1.0, 0.0), 1001, 1), Err(Error::InsufficientSteps(_))));
        assert!(matches!(sector_spectrum_zero(&ModelConfig::wegner(1, 1.0, 1.0, 0), 1000, 1), Err(Error::NotChiral)));
    }

    #[test]
    fn constant_phase_chain_matches_free_chain() {
        // unit-modulus scalar hoppings are gauge-equivalent to T ≡ 1
        let est = estimate_spectrum(&unit_chain(3), C64::new(3.0, 0.0), 1_000_000, 1).unwrap();
        let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((est.gammas[0] - expect).abs() < 1e-6);
        assert!((est.gammas[1] + expect).abs() < 1e-6);
        let closed = constant_chain_exponents(&CMatrix::identity(1), C64::new(3.0, 0.0)).unwrap();
        assert!((closed[0] - expect).abs() < 1e-12);

        let zero = estimate_spectrum(&unit_chain(3), C64::new(0.0, 0.0), 2_000, 2).unwrap();
        assert!(zero.gammas.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn structure_at_real_energy() {
        let cfg = ModelConfig::ginibre_pair(2, 1.0, 1.0, 17);
        let est = estimate_spectrum(&cfg, C64::new(1.0, 0.0), 20_000, 8).unwrap();
        assert!(est.antisymmetric_within(3.0), "{est:?}");
        assert!(est.sum().abs() <= 3.0 * est.sum_of_errors());
        assert!(est.gammas.windows(2).all(|w| w[0] >= w[1]));
        assert!(est.gamma_n() > 0.0);
        est.require_gap().unwrap();
    }

    #[test]
    fn batch_means_fallback() {
        let cfg = ModelConfig::ginibre_pair(1, 1.0, 1.0, 18);
        let est = estimate_spectrum(&cfg, C64::new(0.5, 0.0), 64_000, 1).unwrap();
        assert!(est.std_errors.iter().all(|&s| s > 0.0 && s < 0.05));
    }

    #[test]
    fn scalar_sector_closed_form() {
        let cfg = ModelConfig::ginibre_pair(1, 2.0, 1.0, 19);
        let s = sector_spectrum_zero(&cfg, 100_000, 8).unwrap();
        let expect = 2f64.ln();
        assert!((s.plus.xis[0] - expect).abs() <= 3.0 * s.plus.std_errors[0], "{s:?}");
        assert!((s.minus.xis[0] + expect).abs() <= 3.0 * s.minus.std_errors[0], "{s:?}");
    }

    #[test]
    fn sectors_reconstruct_full_spectrum() {
        let cfg = ModelConfig::ginibre_pair(2, 1.0, 0.5, 20);
        let sectors = sector_spectrum_zero(&cfg, 20_000, 8).unwrap();
        let full = estimate_spectrum(&cfg, C64::new(0.0, 0.0), 40_000, 8).unwrap();
        let (per_site, se) = sectors.per_site_spectrum();
        for j in 0..4 {
            let tol = 3.0 * (se[j] + full.std_errors[j]) + 1e-12;
            assert!((per_site[j] - full.gammas[j]).abs() <= tol, "j={j} {per_site:?} {:?}", full.gammas);
        }
    }

    #[test]
    fn decision_rule() {
        assert_eq!(localized_at_zero(&ginibre_closed_form(2.0, 1.0, 3).unwrap(), 3.0), Localization::Localized);
        assert_eq!(localized_at_zero(&ginibre_closed_form(1.0, 1.0, 3).unwrap(), 3.0), Localization::Critical);
        let side = SectorExponents { xis: vec![0.2, 0.2], std_errors: vec![0.1, 0.1] };
        let spec = SectorSpectrum { plus: side.clone(), minus: side, steps: 0, realizations: 0, resamples: 0 };
        assert_eq!(localized_at_zero(&spec, 3.0), Localization::Inconclusive);
    }

    #[test]
    fn ginibre_closed_form_values() {
        let s = ginibre_closed_form(1.0, 1.0, 8).unwrap();
        // top exponent is H_7 / 2, the middle pair ±1/8
        assert!((s.plus.xis[0] - 363.0 / 280.0).abs() < 1e-14);
        assert!((s.plus.xis[3] - 0.125).abs() < 1e-14 && (s.plus.xis[4] + 0.125).abs() < 1e-14);
        let r = ginibre_closed_form(2.0, 1.0, 5).unwrap();
        let mean = r.plus.xis.iter().sum::<f64>() / 5.0;
        assert!((mean - 2f64.ln()).abs() < 1e-14);
        assert!(r.plus.xis.windows(2).all(|w| w[0] > w[1]));
        assert!(r.minus.xis.iter().zip(r.plus.xis.iter().rev()).all(|(m, p)| (m + p).abs() < 1e-14));
        for w in [3usize, 5, 9] {
            let wf = w as f64;
            let s = ginibre_closed_form((-1.0 / wf).exp(), (-2.0 / wf).exp(), w).unwrap();
            assert!((wf * s.min_abs_xi().0 - 1.0).abs() < 1e-12);
        }
        for w in [2usize, 4, 8] {
            let wf = w as f64;
            let s = ginibre_closed_form((-1.0 / wf).exp(), (-2.0 / wf).exp(), w).unwrap();
            assert!(s.min_abs_xi().0 < 1e-14);
        }
        assert_eq!(ginibre_closed_form(std::f64::consts::E, 1.0, 1).unwrap().plus.xis, vec![1.0]);
    }

    #[test]
    fn energy_scan_common_seeds() {
        let cfg = ModelConfig::ginibre_pair(1, 1.0, 1.0, 21);
        let scan = spectrum_vs_energy(&cfg, &[1.0, 1.01], 10_000, 8).unwrap();
        assert!((scan[0].gammas[0] - scan[1].gammas[0]).abs() <= 0.1);
        let single = estimate_spectrum(&cfg, C64::new(1.0, 0.0), 10_000, 8).unwrap();
        assert_eq!(single.gammas, scan[0].gammas);
    }
}
