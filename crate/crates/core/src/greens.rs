//! Finite-volume Green's functions G_[a,b](x, y; z) = ⟨δ_x, (H_[a,b] − z)⁻¹ δ_y⟩ and the
//! Monte Carlo quantities built on them.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::fit::{fit_exponential, DecayFit};
use crate::linalg::{
    elementary_symmetric, herm_eig, inverse, inverse_adjoint, op_norm, qr_thin, singular_values, trace_norm, BandLu,
    CMatrix, C64,
};
use crate::model::{assemble_hamiltonian, sample_realization, FiniteHamiltonian, ModelConfig, Realization, SeedPath};
use crate::transfer::explicit_product;
use crate::{par, seed, stats};

/// Real-axis solves with smallest/largest pivot below this count as hitting the spectrum.
pub const NEAR_SINGULAR_PIVOT_RATIO: f64 = 1e-14;
/// Residual tolerance relative to `scale·max(1, ‖X‖)`.
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const MIN_BUCKET: usize = 8;
pub const DEFAULT_BOOTSTRAP: usize = 200;
/// Distances below this are left out of default FM fits.
pub const FIT_MIN_DISTANCE: f64 = 10.0;
pub const MAX_WEDGE_STEPS: i64 = 20;

/// Tolerance scale 1 + ‖H‖ + |z|.
pub fn tolerance_scale(h: &FiniteHamiltonian, z: C64) -> f64 {
    1.0 + h.norm() + z.norm()
}

#[derive(Debug, Clone)]
pub struct GreensTable {
    pub window: (i64, i64),
    pub z: C64,
    pub entries: BTreeMap<(i64, i64), CMatrix>,
    pub seed_path: Option<SeedPath>,
}

impl GreensTable {
    pub fn get(&self, x: i64, y: i64) -> Option<&CMatrix> {
        self.entries.get(&(x, y))
    }
}

/// Banded factorization of H − z with column solves.
struct Resolvent<'h> {
    h: &'h FiniteHamiltonian,
    shifted: CMatrix,
    lu: BandLu,
    z: C64,
    scale: f64,
}

impl<'h> Resolvent<'h> {
    fn new(h: &'h FiniteHamiltonian, z: C64) -> Result<Self> {
        let shifted = h.shifted(z);
        let bw = 2 * h.n_internal() - 1;
        let real_axis = z.im == 0.0;
        let lu = match BandLu::factor(h.dim(), bw, bw, |i, j| shifted[(i, j)]) {
            Ok(lu) => lu,
            Err(Error::Singular(_)) if real_axis => return Err(Error::NearSingular(0.0)),
            Err(e) => return Err(e),
        };
        if real_axis && lu.pivot_ratio() < NEAR_SINGULAR_PIVOT_RATIO {
            return Err(Error::NearSingular(lu.pivot_ratio()));
        }
        let scale = tolerance_scale(h, z);
        Ok(Self { h, shifted, lu, z, scale })
    }

    /// Block column G(·, y), all sites of the window stacked.
    fn column(&self, y: i64) -> Result<CMatrix> {
        let n = self.h.n_internal();
        let oy = self.h.offset(y)?;
        let mut rhs = CMatrix::zeros(self.h.dim(), n);
        for i in 0..n {
            rhs[(oy + i, i)] = C64::new(1.0, 0.0);
        }
        let x = self.lu.solve(&rhs)?;
        if !x.is_finite() {
            return Err(Error::NearSingular(self.lu.pivot_ratio()));
        }
        let residual = (&self.shifted.matmul(&x) - &rhs).norm_inf();
        if residual > RESIDUAL_TOL * self.scale * x.norm_inf().max(1.0) {
            return Err(if self.z.im == 0.0 {
                Error::NearSingular(self.lu.pivot_ratio())
            } else {
                Error::NonFinite
            });
        }
        Ok(x)
    }

    fn block(&self, column: &CMatrix, x: i64) -> Result<CMatrix> {
        let n = self.h.n_internal();
        Ok(column.block(self.h.offset(x)?, 0, n, n))
    }
}

/// Blocks of (H − z)⁻¹ at the requested (x, y) pairs, one banded solve per distinct y.
pub fn greens_finite(h: &FiniteHamiltonian, z: C64, pairs: &[(i64, i64)]) -> Result<GreensTable> {
    let res = Resolvent::new(h, z)?;
    let mut by_column: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for &(x, y) in pairs {
        h.offset(x)?;
        by_column.entry(y).or_default().push(x);
    }
    let mut entries = BTreeMap::new();
    for (y, xs) in by_column {
        let col = res.column(y)?;
        for x in xs {
            entries.insert((x, y), res.block(&col, x)?);
        }
    }
    Ok(GreensTable { window: h.window(), z, entries, seed_path: None })
}

/// As [`greens_finite`] for a realization, recording its seed path.
pub fn greens_of(r: &Realization, z: C64, pairs: &[(i64, i64)]) -> Result<GreensTable> {
    let h = assemble_hamiltonian(r)?;
    let mut t = greens_finite(&h, z, pairs)?;
    t.seed_path = r.seed_path();
    Ok(t)
}

/// G(x, y; z) for every x in the window.
pub fn greens_column(h: &FiniteHamiltonian, z: C64, y: i64) -> Result<Vec<CMatrix>> {
    let res = Resolvent::new(h, z)?;
    let col = res.column(y)?;
    let (a, b) = h.window();
    (a..=b).map(|x| res.block(&col, x)).collect()
}

/// G(x, y; z) for every y, as adjoints of the column G(·, x; z̄).
pub fn greens_row(h: &FiniteHamiltonian, z: C64, x: i64) -> Result<Vec<CMatrix>> {
    Ok(greens_column(h, z.conj(), x)?.iter().map(CMatrix::adjoint).collect())
}

fn check_zero_window(r: &Realization) -> Result<()> {
    let (a, b) = r.window();
    if a.rem_euclid(2) != 1 || (b - a + 1) % 2 != 0 {
        return Err(Error::WindowMismatch(format!(
            "zero-energy closed form needs an odd start and even length, got [{a}, {b}]"
        )));
    }
    Ok(())
}

fn circ(t: &CMatrix) -> Result<CMatrix> {
    inverse_adjoint(t).map_err(|_| Error::SingularHopping)
}

/// G(x, y; 0) on an even chiral window from the hoppings alone:
/// (−T_{2k}°T_{2k−1})···(−T_{2l+4}°T_{2l+3})·T_{2l+2}° for x = 2k > y = 2l+1.
/// Same-parity pairs give the zero block.
pub fn greens_zero_closed_form(r: &Realization, x: i64, y: i64) -> Result<CMatrix> {
    check_zero_window(r)?;
    if !r.is_chiral() {
        return Err(Error::NotChiral);
    }
    for s in [x, y] {
        if !r.contains(s) {
            return Err(Error::WindowMismatch(format!("site {s} outside the window")));
        }
    }
    let n = r.n_internal();
    if (x - y).rem_euclid(2) == 0 {
        return Ok(CMatrix::zeros(n, n));
    }
    if x.rem_euclid(2) != 0 || x < y {
        return Err(Error::ParityError(x, y));
    }
    let mut m = circ(r.hopping(y + 1)?)?;
    let mut j = y + 2;
    while j < x {
        let step = circ(r.hopping(j + 1)?)?.matmul(r.hopping(j)?);
        m = -&step.matmul(&m);
        j += 2;
    }
    Ok(m)
}

/// Every block of G(·, ·; 0) on an even chiral window: the closed form, its adjoint for
/// (odd, even) with x < y, zero elsewhere.
pub fn greens_zero_block(r: &Realization, x: i64, y: i64) -> Result<CMatrix> {
    let n = r.n_internal();
    let x_even = x.rem_euclid(2) == 0;
    let y_even = y.rem_euclid(2) == 0;
    if x_even && !y_even && x > y {
        greens_zero_closed_form(r, x, y)
    } else if !x_even && y_even && x < y {
        Ok(greens_zero_closed_form(r, y, x)?.adjoint())
    } else {
        check_zero_window(r)?;
        Ok(CMatrix::zeros(n, n))
    }
}

/// Number of singular values of H below `tol_rel` times the largest.
pub fn kernel_dim(h: &FiniteHamiltonian, tol_rel: f64) -> usize {
    let s = singular_values(h.matrix()).values;
    let cut = tol_rel * s[0];
    s.iter().filter(|&&v| v < cut).count()
}

/// Runs `eval` on indices 0..n, replacing every index that reports `None` by fresh
/// indices n, n+1, … in order. Returns the accepted samples and the rejection count.
fn sample_with_replacement<T, F>(n: usize, eval: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(u64) -> Result<Option<T>> + Sync + Send,
{
    let limit = 10 * n as u64 + 100;
    let mut out = Vec::with_capacity(n);
    let mut rejected = 0;
    let mut next = 0u64;
    let mut missing = n;
    while missing > 0 {
        if next >= limit {
            return Err(Error::NearSingular(0.0));
        }
        let start = next;
        let batch = par::collect_ordered(par::map_indices(missing, |i| eval(start + i as u64)))?;
        next += missing as u64;
        for s in batch {
            match s {
                Some(v) => out.push(v),
                None => rejected += 1,
            }
        }
        missing = n - out.len();
    }
    Ok((out, rejected))
}

fn near_singular_as_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NearSingular(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct FmParams {
    pub lambda: f64,
    pub eta: f64,
    pub s: f64,
    pub window_len: usize,
    pub n_realizations: usize,
    /// Defaults to (1 + d, 1) for d = 1..window_len−1 (odd d only at z = 0 on chiral models).
    pub pairs: Option<Vec<(i64, i64)>>,
    /// Defaults to [10, 0.9·max distance].
    pub fit_window: Option<(f64, f64)>,
    pub bootstrap: usize,
}

impl FmParams {
    pub fn new(lambda: f64, eta: f64, s: f64, window_len: usize, n_realizations: usize) -> Self {
        Self { lambda, eta, s, window_len, n_realizations, pairs: None, fit_window: None, bootstrap: DEFAULT_BOOTSTRAP }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {}", self.s)));
        }
        if !(self.eta >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("need finite lambda and eta >= 0".into()));
        }
        if self.window_len < 2 || self.n_realizations == 0 {
            return Err(Error::InvalidParameter("window_len >= 2 and n_realizations >= 1 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FmEstimate {
    pub s: f64,
    pub lambda: f64,
    pub eta: f64,
    pub distances: Vec<usize>,
    /// Mean of ‖G(x, y)‖^s in trace norm, per distance.
    pub sample_means: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Same with the operator norm.
    pub op_means: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit: DecayFit,
    pub mu: f64,
    /// Standard deviation of μ over bootstrap resamples of realizations.
    pub mu_band: f64,
    pub rejected: usize,
}

fn default_pairs(config: &ModelConfig, p: &FmParams) -> Vec<(i64, i64)> {
    let at_zero = config.is_chiral() && p.lambda == 0.0 && p.eta == 0.0;
    (1..p.window_len as i64).filter(|d| !at_zero || d % 2 == 1).map(|d| (1 + d, 1)).collect()
}

fn bucket_means(distances: &[usize], pair_distance: &[usize], samples: &[&Vec<(f64, f64)>]) -> Vec<f64> {
    let mut sums = vec![0.0; distances.len()];
    let mut counts = vec![0usize; distances.len()];
    for s in samples {
        for (k, &d) in pair_distance.iter().enumerate() {
            let b = distances.binary_search(&d).expect("distance bucket");
            sums[b] += s[k].0;
            counts[b] += 1;
        }
    }
    sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect()
}

/// Fractional moments E‖G(x, y; λ + iη)‖^s over the window [1, window_len] with an
/// exponential fit in the distance.
pub fn fm_estimate(config: &ModelConfig, p: &FmParams) -> Result<FmEstimate> {
    config.validate()?;
    p.validate()?;
    let pairs = p.pairs.clone().unwrap_or_else(|| default_pairs(config, p));
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no pairs requested".into()));
    }
    let window = (1, p.window_len as i64);
    let z = C64::new(p.lambda, p.eta);
    let s = p.s;
    let eval = |idx: u64| -> Result<Option<Vec<(f64, f64)>>> {
        let r = sample_realization(config, window, idx)?;
        let table = match near_singular_as_none(greens_of(&r, z, &pairs))? {
            Some(t) => t,
            None => return Ok(None),
        };
        Ok(Some(
            pairs
                .iter()
                .map(|&(x, y)| {
                    let g = table.get(x, y).expect("requested pair");
                    (trace_norm(g).powf(s), op_norm(g).powf(s))
                })
                .collect(),
        ))
    };
    let (samples, rejected) = sample_with_replacement(p.n_realizations, eval)?;

    let pair_distance: Vec<usize> = pairs.iter().map(|&(x, y)| (x - y).unsigned_abs() as usize).collect();
    let distances: Vec<usize> = pair_distance.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut per_bucket: Vec<Vec<f64>> = vec![Vec::new(); distances.len()];
    let mut per_bucket_op: Vec<Vec<f64>> = vec![Vec::new(); distances.len()];
    for sample in &samples {
        for (k, &d) in pair_distance.iter().enumerate() {
            let b = distances.binary_search(&d).expect("distance bucket");
            per_bucket[b].push(sample[k].0);
            per_bucket_op[b].push(sample[k].1);
        }
    }
    for (b, v) in per_bucket.iter().enumerate() {
        if v.len() < MIN_BUCKET {
            return Err(Error::TooFewSamples { distance: distances[b], count: v.len() });
        }
    }
    let sample_means: Vec<f64> = per_bucket.iter().map(|v| stats::mean(v)).collect();
    let std_errors: Vec<f64> = per_bucket.iter().map(|v| stats::std_error(v)).collect();
    let op_means: Vec<f64> = per_bucket_op.iter().map(|v| stats::mean(v)).collect();
    let counts: Vec<usize> = per_bucket.iter().map(Vec::len).collect();

    let xs: Vec<f64> = distances.iter().map(|&d| d as f64).collect();
    let max_d = xs.last().copied().unwrap_or(0.0);
    let fit_window = p.fit_window.unwrap_or((FIT_MIN_DISTANCE, 0.9 * max_d));
    let mut fit = fit_exponential(&xs, &sample_means, Some(fit_window))?;
    fit.label = format!("fractional moment s={s}");

    let mut rng = seed::stream(config.seed, 0, 0, seed::tag::BOOTSTRAP);
    let mut rates = Vec::with_capacity(p.bootstrap);
    for _ in 0..p.bootstrap {
        let pick: Vec<&Vec<(f64, f64)>> = (0..samples.len()).map(|_| &samples[rng.random_range(0..samples.len())]).collect();
        let means = bucket_means(&distances, &pair_distance, &pick);
        if let Ok(f) = fit_exponential(&xs, &means, Some(fit_window)) {
            rates.push(f.rate());
        }
    }
    let mu_band = if rates.len() >= 2 { stats::variance(&rates).sqrt() } else { f64::NAN };

    Ok(FmEstimate {
        s,
        lambda: p.lambda,
        eta: p.eta,
        distances,
        sample_means,
        std_errors,
        op_means,
        counts,
        mu: fit.rate(),
        fit,
        mu_band,
        rejected,
    })
}

#[derive(Debug, Clone)]
pub struct TypicalDecay {
    pub lambda: f64,
    pub window_len: usize,
    /// −log‖G_[1,n](1, n; λ)‖ / n per realization, index order.
    pub values: Vec<f64>,
    pub median: f64,
    pub rejected: usize,
}

/// Median over realizations of −log‖G_[1,n](1, n; λ)‖/n.
pub fn typical_decay(config: &ModelConfig, lambda: f64, window_len: usize, n_realizations: usize) -> Result<TypicalDecay> {
    config.validate()?;
    if window_len < 2 || n_realizations == 0 {
        return Err(Error::InvalidParameter("window_len >= 2 and n_realizations >= 1 required".into()));
    }
    let n = window_len as i64;
    let z = C64::new(lambda, 0.0);
    let (values, rejected) = sample_with_replacement(n_realizations, |idx| {
        let r = sample_realization(config, (1, n), idx)?;
        Ok(near_singular_as_none(greens_of(&r, z, &[(1, n)]))?
            .map(|t| -trace_norm(t.get(1, n).expect("requested pair")).ln() / n as f64))
    })?;
    let median = stats::median(&values);
    Ok(TypicalDecay { lambda, window_len, values, median, rejected })
}

#[derive(Debug, Clone)]
pub struct AprioriRow {
    pub z: C64,
    /// Mean of ‖G(x, x−1; z)‖^s.
    pub one_step_mean: f64,
    pub one_step_se: f64,
    /// |z| times the mean of ‖G(x, x; z)‖^s.
    pub diag_mean: f64,
    pub diag_se: f64,
    /// One-step mean above `BLOWUP_FACTOR` times the median over the scan.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct AprioriScan {
    pub s: f64,
    pub site: i64,
    pub window: (i64, i64),
    pub rows: Vec<AprioriRow>,
    pub one_step_median: f64,
    pub diag_median: f64,
    pub rejected: usize,
}

pub const APRIORI_DEFAULT_WINDOW: usize = 16;
pub const BLOWUP_FACTOR: f64 = 10.0;

/// One-step and diagonal fractional moments at an even mid-window site for each z,
/// with realization indices shared across z. At an odd site the one-step block is of
/// (odd, even) type and vanishes as z → 0, which would hide a blow-up behind a
/// shrinking median.
pub fn apriori_scan(
    config: &ModelConfig,
    z_list: &[C64],
    s: f64,
    n_realizations: usize,
    window_len: usize,
) -> Result<AprioriScan> {
    config.validate()?;
    if !(s > 0.0 && s < 1.0) || z_list.is_empty() || n_realizations == 0 || window_len < 4 {
        return Err(Error::InvalidParameter("apriori scan needs s in (0,1), z values, samples, window >= 4".into()));
    }
    let window = (1, window_len as i64);
    let x = (window_len as i64 / 2) & !1;
    let mut rows = Vec::with_capacity(z_list.len());
    let mut rejected = 0;
    for &z in z_list {
        let (samples, rej) = sample_with_replacement(n_realizations, |idx| {
            let r = sample_realization(config, window, idx)?;
            Ok(near_singular_as_none(greens_of(&r, z, &[(x, x - 1), (x, x)]))?.map(|t| {
                (trace_norm(t.get(x, x - 1).expect("pair")).powf(s), trace_norm(t.get(x, x).expect("pair")).powf(s))
            }))
        })?;
        rejected += rej;
        let one: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let diag: Vec<f64> = samples.iter().map(|p| p.1).collect();
        rows.push(AprioriRow {
            z,
            one_step_mean: stats::mean(&one),
            one_step_se: stats::std_error(&one),
            diag_mean: z.norm() * stats::mean(&diag),
            diag_se: z.norm() * stats::std_error(&diag),
            flagged: false,
        });
    }
    let one_step_median = stats::median(&rows.iter().map(|r| r.one_step_mean).collect::<Vec<_>>());
    let diag_median = stats::median(&rows.iter().map(|r| r.diag_mean).collect::<Vec<_>>());
    for r in &mut rows {
        r.flagged = r.one_step_mean > BLOWUP_FACTOR * one_step_median;
    }
    Ok(AprioriScan { s, site: x, window, rows, one_step_median, diag_median, rejected })
}

#[derive(Debug, Clone)]
pub struct CombesThomasRow {
    pub eta: f64,
    pub estimate: FmEstimate,
    pub mu_over_eta: f64,
}

#[derive(Debug, Clone)]
pub struct CombesThomasScan {
    pub energy: f64,
    pub rows: Vec<CombesThomasRow>,
    /// μ(η_{i+1}) ≥ μ(η_i) − (band_i + band_{i+1}) for consecutive η in the given order.
    pub monotone: bool,
}

/// Fractional-moment decay rates μ(η) at E + iη for each η.
pub fn combes_thomas_scan(
    config: &ModelConfig,
    energy: f64,
    etas: &[f64],
    s: f64,
    window_len: usize,
    n_realizations: usize,
) -> Result<CombesThomasScan> {
    if etas.is_empty() || etas.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("eta list must be non-empty and positive".into()));
    }
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        let est = fm_estimate(config, &FmParams::new(energy, eta, s, window_len, n_realizations))?;
        rows.push(CombesThomasRow { eta, mu_over_eta: est.mu / eta, estimate: est });
    }
    let monotone = rows.windows(2).all(|w| {
        let (a, b) = (&w[0].estimate, &w[1].estimate);
        b.mu >= a.mu - (a.mu_band + b.mu_band)
    });
    Ok(CombesThomasScan { energy, rows, monotone })
}

pub const FERMI_EIGEN_GAP: f64 = 1e-10;
/// Projection entries below this are treated as numerical noise in decay fits.
pub const FERMI_NOISE_FLOOR: f64 = 1e-12;

/// P = χ_(−∞, E)(H) from the eigendecomposition.
pub fn fermi_projection(h: &FiniteHamiltonian, fermi_energy: f64) -> Result<CMatrix> {
    let eig = herm_eig(h.matrix())?;
    if let Some(v) = eig.values.iter().find(|v| (**v - fermi_energy).abs() < FERMI_EIGEN_GAP) {
        return Err(Error::EigenfailureAtFermi((v - fermi_energy).abs()));
    }
    let occupied: Vec<usize> = (0..eig.values.len()).filter(|&j| eig.values[j] < fermi_energy).collect();
    let u = CMatrix::from_fn(h.dim(), occupied.len(), |i, k| eig.vectors[(i, occupied[k])]);
    Ok(u.matmul(&u.adjoint()))
}

#[derive(Debug, Clone)]
pub struct FermiReport {
    pub fermi_energy: f64,
    pub site: i64,
    pub distances: Vec<usize>,
    /// ‖P(x, x + d)‖ in trace norm.
    pub norms: Vec<f64>,
    pub fit: DecayFit,
    /// Standard error of the fitted slope.
    pub band: f64,
    pub idempotency_defect: f64,
    /// ‖ΠPΠ − (1 − P)‖_max, for chiral models at E = 0.
    pub chirality_defect: Option<f64>,
}

/// Decay of the Fermi projection along a row from the middle of the window.
pub fn fermi_projection_decay(h: &FiniteHamiltonian, fermi_energy: f64) -> Result<FermiReport> {
    let p = fermi_projection(h, fermi_energy)?;
    let n = h.n_internal();
    let (a, b) = h.window();
    let x = a + h.sites() as i64 / 2;
    let ox = h.offset(x)?;
    let mut distances = Vec::new();
    let mut norms = Vec::new();
    for y in x + 1..=b {
        let v = trace_norm(&p.block(ox, h.offset(y)?, n, n));
        distances.push((y - x) as usize);
        norms.push(v);
    }
    let (fx, fy): (Vec<f64>, Vec<f64>) = distances
        .iter()
        .zip(&norms)
        .filter(|(_, &v)| v >= FERMI_NOISE_FLOOR)
        .map(|(&d, &v)| (d as f64, v))
        .unzip();
    let mut fit = fit_exponential(&fx, &fy, None)?;
    fit.label = "Fermi projection".into();
    let band = fit.slope_se;

    let p2 = p.matmul(&p);
    let idempotency_defect = p2.max_abs_diff(&p);
    let chirality_defect = (h.is_chiral() && fermi_energy == 0.0).then(|| {
        let pi = h.chirality();
        let d = h.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let lhs = p[(i, j)] * (pi[i] * pi[j]);
                let rhs = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - p[(i, j)];
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    });
    Ok(FermiReport { fermi_energy, site: x, distances, norms, fit, band, idempotency_defect, chirality_defect })
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub half_width: i64,
    /// G_[−n+1, n](0, 0; z).
    pub g00: CMatrix,
    /// Trace-norm distance to the previous row's block.
    pub diff_prev: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceScan {
    pub z: C64,
    pub rows: Vec<ConvergenceRow>,
    /// Consecutive differences never increase.
    pub cauchy_decreasing: bool,
}

/// G(0, 0; z) on nested windows [−n+1, n] cut from one realization.
pub fn resolvent_convergence_scan_on(r: &Realization, z: C64, half_widths: &[i64]) -> Result<ConvergenceScan> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter("convergence scan needs Im z != 0".into()));
    }
    if half_widths.is_empty() || half_widths.iter().any(|&n| n < 1) {
        return Err(Error::InvalidParameter("half widths must be positive".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(half_widths.len());
    for &n in half_widths {
        let sub = r.restrict(-n + 1, n)?;
        let g00 = greens_of(&sub, z, &[(0, 0)])?.entries.remove(&(0, 0)).expect("pair");
        let diff_prev = rows.last().map(|p| trace_norm(&(&g00 - &p.g00)));
        rows.push(ConvergenceRow { half_width: n, g00, diff_prev });
    }
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.diff_prev).collect();
    let cauchy_decreasing = diffs.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConvergenceScan { z, rows, cauchy_decreasing })
}

/// Samples realization `index` on [−n_max+1, n_max] and scans the nested windows.
pub fn resolvent_convergence_scan(config: &ModelConfig, z: C64, half_widths: &[i64], index: u64) -> Result<ConvergenceScan> {
    let n_max = half_widths.iter().copied().max().unwrap_or(0);
    if n_max < 1 {
        return Err(Error::InvalidParameter("half widths must be positive".into()));
    }
    let r = sample_realization(config, (-n_max + 1, n_max), index)?;
    resolvent_convergence_scan_on(&r, z, half_widths)
}

/// Both sides of |G_{m−1,k}|² ≤ ratio·|𝒢_{k−1,k}|² with 𝒢_{n,k} = (T_{n+1}*G_{n+1,k}, G_{n,k}),
/// B = A_{k−1}···A_m and P the projector onto the range of 𝒢_{m−1,k}.
#[derive(Debug, Clone)]
pub struct WedgeReport {
    pub k: i64,
    pub m: i64,
    /// tr|∧^{N−1}BP|² / tr|∧^N BP|², computed as tr((U*B*BU)⁻¹).
    pub ratio: f64,
    /// The same ratio from elementary symmetric functions of σ(BU)².
    pub ratio_oracle: f64,
    /// ‖G_{m−1,k}‖² (operator norm).
    pub lhs: f64,
    /// ratio·‖𝒢_{k−1,k}‖².
    pub rhs: f64,
    /// Smallest eigenvalue of ratio·|𝒢_{k−1,k}|² − |G_{m−1,k}|².
    pub loewner_min: f64,
    /// ‖B𝒢_{m−1,k} − 𝒢_{k−1,k}‖ relative to ‖𝒢_{k−1,k}‖.
    pub propagation_defect: f64,
    pub holds: bool,
}

pub const WEDGE_SLACK: f64 = 1e-9;

fn super_column(r: &Realization, col: &[CMatrix], a: i64, n: i64) -> Result<CMatrix> {
    let g = &col[(n - a) as usize];
    let top = r.hopping(n + 1)?.adjoint().matmul(&col[(n + 1 - a) as usize]);
    let d = g.rows();
    let mut out = CMatrix::zeros(2 * d, d);
    out.set_block(0, 0, &top);
    out.set_block(d, 0, g);
    Ok(out)
}

pub fn wedge_ratio_bound_check(r: &Realization, z: C64, k: i64, m: i64) -> Result<WedgeReport> {
    let (a, b) = r.window();
    if !(a < m && m <= k && k < b) {
        return Err(Error::WindowMismatch(format!("need {a} < m <= k < {b}, got m = {m}, k = {k}")));
    }
    if k - m > MAX_WEDGE_STEPS {
        return Err(Error::InvalidParameter(format!("at most {MAX_WEDGE_STEPS} transfer steps, got {}", k - m)));
    }
    let h = assemble_hamiltonian(r)?;
    let col = greens_column(&h, z, k)?;
    let psi_start = super_column(r, &col, a, m - 1)?;
    let psi_end = super_column(r, &col, a, k - 1)?;
    let bmat = if m <= k - 1 { explicit_product(r, z, m, k - 1)? } else { CMatrix::identity(2 * r.n_internal()) };

    let u = qr_thin(&psi_start)?.q;
    let bu = bmat.matmul(&u);
    let gram = bu.adjoint_mul(&bu);
    let ratio = inverse(&gram)?.trace().re;
    let sq: Vec<f64> = singular_values(&bu).values.iter().map(|v| v * v).collect();
    let e = elementary_symmetric(&sq);
    let l = sq.len();
    let ratio_oracle = e[l - 1] / e[l];

    let g = &col[(m - 1 - a) as usize];
    let x = g.adjoint_mul(g);
    let y = psi_end.adjoint_mul(&psi_end);
    let diff = &y.scale_real(ratio) - &x;
    let loewner_min = herm_eig(&diff.hermitian_part())?.values[0];
    let lhs = op_norm(g).powi(2);
    let rhs = ratio * op_norm(&psi_end).powi(2);
    let propagation_defect = (&bmat.matmul(&psi_start) - &psi_end).norm_inf() / psi_end.norm_inf().max(f64::MIN_POSITIVE);
    let holds = loewner_min >= -WEDGE_SLACK * rhs.max(1.0);
    Ok(WedgeReport { k, m, ratio, ratio_oracle, lhs, rhs, loewner_min, propagation_defect, holds })
}
