use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::linalg::{CMatrix, C64};

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix: i.i.d. centred complex Gaussian entries with E|entry|² = σ².
pub fn ginibre<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_normal(rng) * sigma)
}

/// GUE matrix with E|V_ij|² = scale² for every entry.
pub fn gue<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CMatrix {
    let g = ginibre(n, 1.0, rng);
    (&g + &g.adjoint()).scale_real(scale * std::f64::consts::FRAC_1_SQRT_2)
}

/// Random Hermitian matrix (GUE-distributed), used for chart sampling.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CMatrix {
    gue(n, scale, rng).hermitian_part()
}

/// Diagonal matrix with entries r·e^{iθ}, r uniform in [r_min, r_max], θ uniform.
pub fn diagonal_complex_uniform<R: Rng + ?Sized>(n: usize, r_min: f64, r_max: f64, rng: &mut R) -> CMatrix {
    let phase = Uniform::new(0.0, std::f64::consts::TAU).expect("valid phase range");
    let diag: Vec<C64> = (0..n)
        .map(|_| {
            let r = if r_max > r_min { rng.random_range(r_min..=r_max) } else { r_min };
            C64::from_polar(r, phase.sample(rng))
        })
        .collect();
    CMatrix::from_diag(&diag)
}
