//! Disorder ensembles, realizations and Hamiltonian assembly for
//! `(Hψ)_n = T_{n+1}* ψ_{n+1} + T_n ψ_{n−1} (+ V_n ψ_n)`.
//!
//! Even sites draw their hopping from `alpha0`, odd sites from `alpha1`; parity is
//! absolute, not relative to the window. Each block comes from a stream keyed by
//! `(seed, realization, site, tag)` (see [`crate::seed`]), so any window of any
//! realization can be regenerated independently and in any order.

mod bloch;
mod hamiltonian;
pub mod random;

pub use bloch::{bloch_spectrum, periodic_gap_bound, periodic_gap_bound_spectral, periodic_hamiltonian, ring_momenta, BlochBands};
pub use hamiltonian::{assemble_hamiltonian, FiniteHamiltonian};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, CMatrix, LuFactor};
use crate::seed::{self, tag};

/// Consecutive rejections after which a hopping law is declared degenerate.
pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    Ginibre { sigma: f64 },
    DiagonalComplexUniform { radius_min: f64, radius_max: f64 },
    ShiftedGinibre { base: CMatrix, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    /// Draws with smallest singular value below this are rejected.
    pub resample_threshold: f64,
}

impl DistributionSpec {
    pub const DEFAULT_THRESHOLD: f64 = 1e-8;

    pub fn ginibre(sigma: f64) -> Self {
        Self { kind: DistributionKind::Ginibre { sigma }, resample_threshold: Self::DEFAULT_THRESHOLD }
    }

    pub fn diagonal_uniform(radius_min: f64, radius_max: f64) -> Self {
        Self {
            kind: DistributionKind::DiagonalComplexUniform { radius_min, radius_max },
            resample_threshold: Self::DEFAULT_THRESHOLD,
        }
    }

    pub fn shifted_ginibre(base: CMatrix, sigma: f64) -> Self {
        Self {
            kind: DistributionKind::ShiftedGinibre { base, sigma },
            resample_threshold: Self::DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.resample_threshold > 0.0) {
            return Err(Error::InvalidParameter("resample_threshold must be positive".into()));
        }
        match &self.kind {
            DistributionKind::Ginibre { sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!("Ginibre sigma must be positive, got {sigma}")));
                }
            }
            DistributionKind::DiagonalComplexUniform { radius_min, radius_max } => {
                if !(*radius_min > 0.0 && radius_max >= radius_min && radius_max.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "need 0 < radius_min <= radius_max, got [{radius_min}, {radius_max}]"
                    )));
                }
            }
            DistributionKind::ShiftedGinibre { base, sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
                }
                if base.rows() != n || base.cols() != n {
                    return Err(Error::InvalidParameter(format!("shift base must be {n}x{n}")));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> CMatrix {
        match &self.kind {
            DistributionKind::Ginibre { sigma } => random::ginibre(n, *sigma, rng),
            DistributionKind::DiagonalComplexUniform { radius_min, radius_max } => {
                random::diagonal_complex_uniform(n, *radius_min, *radius_max, rng)
            }
            DistributionKind::ShiftedGinibre { base, sigma } => base + &random::ginibre(n, *sigma, rng),
        }
    }
}

/// Onsite law for the Wegner orbital variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OnsiteSpec {
    Gue { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n_internal: usize,
    pub alpha0: DistributionSpec,
    pub alpha1: DistributionSpec,
    /// Present for the Wegner orbital model; absent for the chiral model.
    pub onsite: Option<OnsiteSpec>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn chiral(n_internal: usize, alpha0: DistributionSpec, alpha1: DistributionSpec, seed: u64) -> Self {
        Self { n_internal, alpha0, alpha1, onsite: None, seed }
    }

    /// Both parities Ginibre with the given standard deviations.
    pub fn ginibre_pair(n_internal: usize, sigma0: f64, sigma1: f64, seed: u64) -> Self {
        Self::chiral(n_internal, DistributionSpec::ginibre(sigma0), DistributionSpec::ginibre(sigma1), seed)
    }

    pub fn wegner(n_internal: usize, sigma: f64, onsite_scale: f64, seed: u64) -> Self {
        Self {
            n_internal,
            alpha0: DistributionSpec::ginibre(sigma),
            alpha1: DistributionSpec::ginibre(sigma),
            onsite: Some(OnsiteSpec::Gue { scale: onsite_scale }),
            seed,
        }
    }

    pub fn is_chiral(&self) -> bool {
        self.onsite.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_internal == 0 {
            return Err(Error::InvalidParameter("n_internal must be at least 1".into()));
        }
        self.alpha0.validate(self.n_internal)?;
        self.alpha1.validate(self.n_internal)?;
        if let Some(OnsiteSpec::Gue { scale }) = self.onsite {
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!("onsite scale must be non-negative, got {scale}")));
            }
        }
        Ok(())
    }

    /// Law of T_n: even n ↔ alpha0, odd n ↔ alpha1.
    pub fn law_for_site(&self, n: i64) -> &DistributionSpec {
        if n.rem_euclid(2) == 0 {
            &self.alpha0
        } else {
            &self.alpha1
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// T_n of realization `index`, from its own stream.
    pub fn sample_site_hopping(&self, index: u64, n: i64) -> Result<SampledHopping> {
        let parity = if n.rem_euclid(2) == 0 { tag::HOPPING_EVEN } else { tag::HOPPING_ODD };
        let mut rng = seed::stream(self.seed, index, n, parity);
        sample_hopping(self.law_for_site(n), self.n_internal, &mut rng)
    }

    /// V_n of realization `index` (Wegner variant only).
    pub fn sample_site_onsite(&self, index: u64, n: i64) -> Option<CMatrix> {
        self.onsite.map(|OnsiteSpec::Gue { scale }| {
            let mut rng = seed::stream(self.seed, index, n, tag::ONSITE);
            random::gue(self.n_internal, scale, &mut rng)
        })
    }
}

#[derive(Debug, Clone)]
pub struct SampledHopping {
    pub matrix: CMatrix,
    /// Rejected draws before acceptance.
    pub resamples: usize,
}

fn smallest_singular_at_least(m: &CMatrix, threshold: f64) -> bool {
    if m.rows() == 1 {
        return m[(0, 0)].norm() >= threshold;
    }
    // 1/‖M⁻¹‖_F ≤ σ_min, so passing this test is sufficient.
    if let Ok(lu) = LuFactor::new(m) {
        if 1.0 / lu.inverse().norm_fro() >= threshold {
            return true;
        }
    }
    singular_values(m).smallest() >= threshold
}

/// Draws one hopping block, rejecting nearly singular draws.
pub fn sample_hopping<R: Rng + ?Sized>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Result<SampledHopping> {
    for resamples in 0..=MAX_RESAMPLES {
        let m = spec.draw(n, rng);
        if smallest_singular_at_least(&m, spec.resample_threshold) {
            return Ok(SampledHopping { matrix: m, resamples });
        }
    }
    Err(Error::ResampleLimit(MAX_RESAMPLES))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedPath {
    pub master: u64,
    pub realization_index: u64,
}

/// Hopping blocks T_n (and onsite V_n) for every n in the closed window [a, b].
#[derive(Debug, Clone)]
pub struct Realization {
    window: (i64, i64),
    n_internal: usize,
    hopping: Vec<CMatrix>,
    onsite: Option<Vec<CMatrix>>,
    seed_path: Option<SeedPath>,
    resamples: usize,
}

impl Realization {
    /// Builds a realization from explicit blocks, e.g. a deterministic chain.
    pub fn from_blocks(window: (i64, i64), hopping: Vec<CMatrix>, onsite: Option<Vec<CMatrix>>) -> Result<Self> {
        let (a, b) = window;
        if b < a {
            return Err(Error::WindowMismatch(format!("empty window [{a}, {b}]")));
        }
        let len = (b - a + 1) as usize;
        if hopping.len() != len || onsite.as_ref().is_some_and(|v| v.len() != len) {
            return Err(Error::WindowMismatch(format!("expected {len} blocks for window [{a}, {b}]")));
        }
        let n = hopping[0].rows();
        for t in &hopping {
            if t.rows() != n || t.cols() != n {
                return Err(Error::DimensionMismatch("hopping blocks must share one square size".into()));
            }
        }
        if let Some(v) = &onsite {
            for vn in v {
                if vn.rows() != n || vn.hermitian_defect() > 1e-12 * vn.norm_inf().max(1.0) {
                    return Err(Error::NotHermitian(vn.hermitian_defect()));
                }
            }
        }
        Ok(Self { window, n_internal: n, hopping, onsite, seed_path: None, resamples: 0 })
    }

    /// The same block at every site of the window.
    pub fn constant(window: (i64, i64), t: &CMatrix) -> Result<Self> {
        let len = (window.1 - window.0 + 1).max(0) as usize;
        Self::from_blocks(window, vec![t.clone(); len], None)
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.hopping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hopping.is_empty()
    }

    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    pub fn seed_path(&self) -> Option<SeedPath> {
        self.seed_path
    }

    pub fn resamples(&self) -> usize {
        self.resamples
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.window.0 && n <= self.window.1
    }

    pub fn hopping(&self, n: i64) -> Result<&CMatrix> {
        if !self.contains(n) {
            return Err(Error::WindowMismatch(format!(
                "site {n} outside [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        Ok(&self.hopping[(n - self.window.0) as usize])
    }

    pub fn onsite(&self, n: i64) -> Option<&CMatrix> {
        if !self.contains(n) {
            return None;
        }
        self.onsite.as_ref().map(|v| &v[(n - self.window.0) as usize])
    }

    pub fn is_chiral(&self) -> bool {
        self.onsite.is_none()
    }

    /// Restriction to a sub-window (same blocks).
    pub fn restrict(&self, a: i64, b: i64) -> Result<Self> {
        if a > b || !self.contains(a) || !self.contains(b) {
            return Err(Error::WindowMismatch(format!(
                "[{a}, {b}] is not inside [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        let lo = (a - self.window.0) as usize;
        let hi = (b - self.window.0) as usize;
        Ok(Self {
            window: (a, b),
            n_internal: self.n_internal,
            hopping: self.hopping[lo..=hi].to_vec(),
            onsite: self.onsite.as_ref().map(|v| v[lo..=hi].to_vec()),
            seed_path: self.seed_path,
            resamples: self.resamples,
        })
    }
}

/// Samples realization `index` of `config` on the closed window `[a, b]`.
pub fn sample_realization(config: &ModelConfig, window: (i64, i64), index: u64) -> Result<Realization> {
    config.validate()?;
    let (a, b) = window;
    if b < a {
        return Err(Error::WindowMismatch(format!("empty window [{a}, {b}]")));
    }
    let mut hopping = Vec::with_capacity((b - a + 1) as usize);
    let mut resamples = 0;
    for n in a..=b {
        let s = config.sample_site_hopping(index, n)?;
        resamples += s.resamples;
        hopping.push(s.matrix);
    }
    let onsite = config
        .onsite
        .map(|_| (a..=b).map(|n| config.sample_site_onsite(index, n).expect("onsite law present")).collect());
    Ok(Realization {
        window,
        n_internal: config.n_internal,
        hopping,
        onsite,
        seed_path: Some(SeedPath { master: config.seed, realization_index: index }),
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ginibre_second_moment() {
        // E|T|² = σ² = 1, checked to 3 standard errors over 1e5 draws.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let spec = DistributionSpec::ginibre(1.0);
        let xs: Vec<f64> =
            (0..100_000).map(|_| sample_hopping(&spec, 1, &mut rng).unwrap().matrix[(0, 0)].norm_sqr()).collect();
        assert!((stats::mean(&xs) - 1.0).abs() < 3.0 * stats::std_error(&xs));
    }

    #[test]
    fn ginibre_log_modulus_mean() {
        // |T|²/σ² is unit exponential, so E log|T| − log σ = −γ_Euler/2.
        let euler_gamma = 0.577_215_664_901_532_9_f64;
        let sigma = 2.5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = DistributionSpec::ginibre(sigma);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_hopping(&spec, 1, &mut rng).unwrap().matrix[(0, 0)].norm().ln() - sigma.ln())
            .collect();
        assert!((-euler_gamma / 2.0 - (-0.288608)).abs() < 1e-6);
        assert!((stats::mean(&xs) + euler_gamma / 2.0).abs() < 3.0 * stats::std_error(&xs));
    }

    #[test]
    fn degenerate_radius_gives_unit_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = sample_hopping(&DistributionSpec::diagonal_uniform(1.0, 1.0), 2, &mut rng).unwrap().matrix;
        assert!((t[(0, 0)].norm() - 1.0).abs() < 1e-15 && (t[(1, 1)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(t[(0, 1)], C64::new(0.0, 0.0));
        assert_eq!(t[(1, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn resample_limit_on_degenerate_law() {
        let mut spec = DistributionSpec::diagonal_uniform(1.0, 1.0);
        spec.resample_threshold = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        assert_eq!(sample_hopping(&spec, 1, &mut rng).unwrap_err(), Error::ResampleLimit(MAX_RESAMPLES));
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::ginibre_pair(0, 1.0, 1.0, 0).validate().is_err());
        assert!(ModelConfig::ginibre_pair(1, -1.0, 1.0, 0).validate().is_err());
        let bad = ModelConfig::chiral(1, DistributionSpec::diagonal_uniform(0.0, 1.0), DistributionSpec::ginibre(1.0), 0);
        assert!(bad.validate().is_err());
        let shifted = DistributionSpec::shifted_ginibre(CMatrix::identity(3), 0.1);
        assert!(shifted.validate(2).is_err());
        assert!(shifted.validate(3).is_ok());
    }

    #[test]
    fn realization_is_deterministic() {
        let cfg = ModelConfig::ginibre_pair(2, 1.0, 0.5, 99);
        let r1 = sample_realization(&cfg, (-3, 10), 4).unwrap();
        let r2 = sample_realization(&cfg, (-3, 10), 4).unwrap();
        for n in -3..=10 {
            assert_eq!(r1.hopping(n).unwrap(), r2.hopping(n).unwrap());
        }
        // sub-windows regenerate the same blocks
        let r3 = sample_realization(&cfg, (2, 5), 4).unwrap();
        assert_eq!(r3.hopping(4).unwrap(), r1.hopping(4).unwrap());
        let other = sample_realization(&cfg, (2, 5), 5).unwrap();
        assert_ne!(other.hopping(4).unwrap(), r1.hopping(4).unwrap());
    }

    #[test]
    fn single_site_window_is_odd_law() {
        let cfg = ModelConfig::chiral(1, DistributionSpec::ginibre(1.0), DistributionSpec::diagonal_uniform(3.0, 3.0), 0);
        let r = sample_realization(&cfg, (1, 1), 0).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.hopping(1).unwrap()[(0, 0)].norm() - 3.0).abs() < 1e-14);
        assert!(r.hopping(2).is_err());
    }

    #[test]
    fn parity_laws_differ_in_log_norm() {
        // α0 = Ginibre(e⁻¹), α1 = Ginibre(e⁻²): mean log‖T‖ differs by 1 between parities.
        let cfg = ModelConfig::ginibre_pair(1, (-1.0f64).exp(), (-2.0f64).exp(), 5);
        let r = sample_realization(&cfg, (0, 19_999), 0).unwrap();
        let logs = |parity: i64| -> Vec<f64> {
            (0..20_000).filter(|n| n % 2 == parity).map(|n| r.hopping(n).unwrap()[(0, 0)].norm().ln()).collect()
        };
        let (even, odd) = (logs(0), logs(1));
        let diff = stats::mean(&even) - stats::mean(&odd);
        let se = (stats::std_error(&even).powi(2) + stats::std_error(&odd).powi(2)).sqrt();
        assert!((diff - 1.0).abs() < 3.0 * se, "diff {diff} se {se}");
    }

    #[test]
    fn disjoint_indices_are_uncorrelated() {
        let cfg = ModelConfig::ginibre_pair(1, 1.0, 1.0, 7);
        let a = sample_realization(&cfg, (0, 999), 0).unwrap();
        let b = sample_realization(&cfg, (0, 999), 1).unwrap();
        let xa: Vec<f64> = (0..1000).map(|n| a.hopping(n).unwrap()[(0, 0)].re).collect();
        let xb: Vec<f64> = (0..1000).map(|n| b.hopping(n).unwrap()[(0, 0)].re).collect();
        assert!(stats::correlation(&xa, &xb).abs() < 0.05);
    }

    #[test]
    fn onsite_blocks_are_hermitian() {
        let cfg = ModelConfig::wegner(3, 1.0, 0.7, 1);
        let r = sample_realization(&cfg, (0, 20), 0).unwrap();
        for n in 0..=20 {
            assert!(r.onsite(n).unwrap().hermitian_defect() <= 1e-12);
        }
        assert!(!r.is_chiral());
    }
}
