//! 2-periodic chains. With T_{2x} = A and T_{2x+1} = B* the odd→even block of the
//! Bloch-reduced Hamiltonian is S(k) = A e^{−ik} + B, and σ(H²) = ∪_k σ(|S(k)|²).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{inverse, singular_values, CMatrix, C64};

/// Singular values of S(k) on a uniform momentum grid.
#[derive(Debug, Clone)]
pub struct BlochBands {
    pub momenta: Vec<f64>,
    /// `singular_values[i]` is the descending spectrum of S(momenta[i]).
    pub singular_values: Vec<Vec<f64>>,
    /// Smallest singular value over the grid.
    pub grid_min: f64,
    /// Grid minimum refined by golden-section search around the best grid points.
    pub refined_min: f64,
}

impl BlochBands {
    /// inf σ(H²), from the refined minimum.
    pub fn inf_h_squared(&self) -> f64 {
        self.refined_min * self.refined_min
    }
}

fn bloch_block(a: &CMatrix, b: &CMatrix, k: f64) -> CMatrix {
    &a.scale(C64::from_polar(1.0, -k)) + b
}

fn smallest_sv(a: &CMatrix, b: &CMatrix, k: f64) -> f64 {
    singular_values(&bloch_block(a, b, k)).smallest()
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

pub fn bloch_spectrum(a: &CMatrix, b: &CMatrix, k_grid: usize) -> Result<BlochBands> {
    if k_grid < 2 {
        return Err(Error::InvalidParameter(format!("k_grid must be at least 2, got {k_grid}")));
    }
    if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch("A and B must be square of equal size".into()));
    }
    let momenta: Vec<f64> = (0..k_grid).map(|j| TAU * j as f64 / k_grid as f64).collect();
    let singular: Vec<Vec<f64>> = momenta.iter().map(|&k| singular_values(&bloch_block(a, b, k)).values).collect();
    let mins: Vec<f64> = singular.iter().map(|s| *s.last().expect("non-empty spectrum")).collect();
    let grid_min = mins.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut order: Vec<usize> = (0..k_grid).collect();
    order.sort_by(|&i, &j| mins[i].total_cmp(&mins[j]));
    let h = TAU / k_grid as f64;
    let mut refined_min = grid_min;
    for &i in order.iter().take(3) {
        let k = momenta[i];
        refined_min = refined_min.min(golden_min(|q| smallest_sv(a, b, q), k - h, k + h));
    }
    Ok(BlochBands { momenta, singular_values: singular, grid_min, refined_min })
}

fn dist_to_one(values: &[f64]) -> f64 {
    values.iter().map(|s| (s - 1.0).abs()).fold(f64::INFINITY, f64::min)
}

/// ‖A‖‖B‖·dist(σ(|A⁻¹B|), 1)·dist(σ(|AB⁻¹|), 1), an upper bound on inf σ(H²).
pub fn periodic_gap_bound(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let a_inv = inverse(a).map_err(|_| Error::SingularHopping)?;
    let b_inv = inverse(b).map_err(|_| Error::SingularHopping)?;
    // σ(|X|) are the singular values of X
    let left = dist_to_one(&singular_values(&a_inv.matmul(b)).values);
    let right = dist_to_one(&singular_values(&a.matmul(&b_inv)).values);
    let na = singular_values(a).largest();
    let nb = singular_values(b).largest();
    Ok(na * nb * left * right)
}

fn eigen_moduli(m: &CMatrix) -> Result<Vec<f64>> {
    if m.rows() == 1 {
        return Ok(vec![m[(0, 0)].norm()]);
    }
    let ev = m.to_nalgebra().eigenvalues().ok_or_else(|| Error::InvalidParameter("eigenvalues did not converge".into()))?;
    Ok(ev.iter().map(|z: &C64| z.norm()).collect())
}

/// The same product with eigenvalue moduli of A⁻¹B and AB⁻¹ in place of singular values.
/// For an eigenvalue μ of M, S(k) = A(e^{−ik} + M) has s_min ≤ ‖A‖·||μ| − 1| at e^{−ik} = −μ/|μ|,
/// so this version bounds inf σ(H²) for every invertible pair. It coincides with
/// [`periodic_gap_bound`] when A⁻¹B is normal, in particular for N = 1.
pub fn periodic_gap_bound_spectral(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let a_inv = inverse(a).map_err(|_| Error::SingularHopping)?;
    let b_inv = inverse(b).map_err(|_| Error::SingularHopping)?;
    let left = dist_to_one(&eigen_moduli(&a_inv.matmul(b))?);
    let right = dist_to_one(&eigen_moduli(&a.matmul(&b_inv))?);
    Ok(singular_values(a).largest() * singular_values(b).largest() * left * right)
}

/// Ring of `cells` unit cells (2·cells sites) with T_{2x} = A, T_{2x+1} = B*, periodic wrap.
pub fn periodic_hamiltonian(a: &CMatrix, b: &CMatrix, cells: usize) -> CMatrix {
    let n = a.rows();
    let sites = 2 * cells;
    let mut h = CMatrix::zeros(n * sites, n * sites);
    let b_star = b.adjoint();
    for site in 0..sites {
        let t = if site % 2 == 0 { a } else { &b_star };
        let prev = (site + sites - 1) % sites;
        let blk = h.block(site * n, prev * n, n, n);
        h.set_block(site * n, prev * n, &(&blk + t));
        let blk = h.block(prev * n, site * n, n, n);
        h.set_block(prev * n, site * n, &(&blk + &t.adjoint()));
    }
    h
}

/// k values at which the ring Hamiltonian samples S(k).
pub fn ring_momenta(cells: usize) -> Vec<f64> {
    (0..cells).map(|j| 2.0 * PI * j as f64 / cells as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::herm_eig;
    use crate::model::random::ginibre;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: f64) -> CMatrix {
        CMatrix::scalar(C64::new(x, 0.0))
    }

    #[test]
    fn unit_blocks_close_gap() {
        let bands = bloch_spectrum(&scalar(1.0), &scalar(1.0), 16).unwrap();
        for (k, s) in bands.momenta.iter().zip(&bands.singular_values) {
            assert!((s[0] - 2.0 * (k / 2.0).cos().abs()).abs() < 1e-12);
        }
        let fine = bloch_spectrum(&scalar(1.0), &scalar(1.0), 4096).unwrap();
        assert!(fine.grid_min <= 1e-3);
        assert_eq!(periodic_gap_bound(&scalar(1.0), &scalar(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn scalar_gap_closed_form() {
        let bands = bloch_spectrum(&scalar(1.0), &scalar(2.0), 64).unwrap();
        assert!((bands.grid_min - 1.0).abs() < 1e-12);
        let bound = periodic_gap_bound(&scalar(1.0), &scalar(2.0)).unwrap();
        assert!((bound - 1.0).abs() < 1e-12);
        assert!(bands.inf_h_squared() <= bound + 1e-8);
    }

    #[test]
    fn singular_value_bound_fails_for_non_normal_pair() {
        // A⁻¹B has singular values {1, 0.01} but eigenvalues 0.1, 0.1
        let a = CMatrix::identity(2);
        let b = CMatrix::from_real_rows(&[&[0.1, 0.99], &[0.0, 0.1]]).unwrap();
        assert!(periodic_gap_bound(&a, &b).unwrap() < 1e-12);
        let inf = bloch_spectrum(&a, &b, 1024).unwrap().inf_h_squared();
        assert!(inf > 1e-3);
        assert!(inf <= periodic_gap_bound_spectral(&a, &b).unwrap() + 1e-8);
    }

    #[test]
    fn bounds_agree_for_scalars() {
        let (a, b) = (scalar(0.7), CMatrix::scalar(C64::new(1.5, -0.4)));
        let lit = periodic_gap_bound(&a, &b).unwrap();
        assert!((lit - periodic_gap_bound_spectral(&a, &b).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn grid_min_below_ring_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (a, b) = (ginibre(2, 1.0, &mut rng), ginibre(2, 1.0, &mut rng));
        let cells = 128;
        let h = periodic_hamiltonian(&a, &b, cells);
        assert_eq!(h.hermitian_defect(), 0.0);
        let eig = herm_eig(&h).unwrap();
        let min_abs = eig.values.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        let bands = bloch_spectrum(&a, &b, 1024).unwrap();
        assert!(bands.grid_min <= min_abs + 1e-6);
        // ring momenta are on the 1024 grid, so the ring spectrum is reproduced exactly
        let ring: Vec<f64> = ring_momenta(cells).iter().map(|&k| smallest_sv(&a, &b, k)).collect();
        let ring_min = ring.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((ring_min - min_abs).abs() < 1e-9);
    }
}
