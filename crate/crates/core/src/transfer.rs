//! Transfer matrices A_n(z) = [[(z − V_n) T_n°, −T_n], [T_n°, 0]] acting on the
//! super wave function Ψ_n = (T_{n+1}* ψ_{n+1}, ψ_n), so that Ψ_n = A_n Ψ_{n−1}.

use crate::error::{Error, Result};
use crate::linalg::{inverse_adjoint, qr_thin, CMatrix, LuFactor, C64};
use crate::model::Realization;

/// Column norm above which the accumulator deflates regardless of its period.
pub const OVERFLOW_GUARD: f64 = 1e100;

fn circ(t: &CMatrix) -> Result<CMatrix> {
    inverse_adjoint(t).map_err(|_| Error::SingularHopping)
}

/// A_n(z) for the chiral model.
pub fn transfer_matrix(t: &CMatrix, z: C64) -> Result<CMatrix> {
    let tc = circ(t)?;
    Ok(CMatrix::from_blocks(&tc.scale(z), &-t, &tc, &CMatrix::zeros(t.rows(), t.cols())))
}

/// A_n(z) with an onsite block V_n.
pub fn transfer_matrix_onsite(t: &CMatrix, v: &CMatrix, z: C64) -> Result<CMatrix> {
    let tc = circ(t)?;
    let mut zv = -v;
    for i in 0..zv.rows() {
        zv[(i, i)] += z;
    }
    Ok(CMatrix::from_blocks(&zv.matmul(&tc), &-t, &tc, &CMatrix::zeros(t.rows(), t.cols())))
}

/// The deterministic factor S(z) = [[z, −1], [1, 0]].
pub fn s_factor(n: usize, z: C64) -> CMatrix {
    let id = CMatrix::identity(n);
    CMatrix::from_blocks(&id.scale(z), &-&id, &id, &CMatrix::zeros(n, n))
}

/// The random factor a(T) = diag(T°, T), so that A(z) = S(z)·a(T).
pub fn a_factor(t: &CMatrix) -> Result<CMatrix> {
    let n = t.rows();
    Ok(CMatrix::from_blocks(&circ(t)?, &CMatrix::zeros(n, n), &CMatrix::zeros(n, n), t))
}

/// A transfer matrix together with its site and energy.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub z: C64,
    pub n: i64,
    pub matrix: CMatrix,
}

impl TransferMatrix {
    /// A_n(z) built from the blocks of `r` at site n.
    pub fn at_site(r: &Realization, n: i64, z: C64) -> Result<Self> {
        let t = r.hopping(n)?;
        let matrix = match r.onsite(n) {
            Some(v) => transfer_matrix_onsite(t, v, z)?,
            None => transfer_matrix(t, z)?,
        };
        Ok(Self { z, n, matrix })
    }
}

/// B_{n,m}(z) = A_n(z)···A_m(z) materialized. Only meant for short diagnostic windows.
pub fn explicit_product(r: &Realization, z: C64, m: i64, n: i64) -> Result<CMatrix> {
    let mut b = CMatrix::identity(2 * r.n_internal());
    for site in m..=n {
        b = TransferMatrix::at_site(r, site, z)?.matrix.matmul(&b);
    }
    Ok(b)
}

/// The N×N zero-energy sector map −T_odd° T_even.
pub fn zero_energy_sector_step(t_odd: &CMatrix, t_even: &CMatrix) -> Result<CMatrix> {
    let lu = LuFactor::new(&t_odd.adjoint()).map_err(|_| Error::SingularHopping)?;
    Ok(-&lu.solve(t_even)?)
}

/// QR-deflated running product of transfer matrices applied to a frame.
#[derive(Debug, Clone)]
pub struct ProductAccumulator {
    frame: CMatrix,
    log_sums: Vec<f64>,
    steps: u64,
    reorth_period: usize,
    pending: usize,
}

impl ProductAccumulator {
    /// Every step for dimension ≤ 8, every fifth step above.
    pub fn default_period(dim: usize) -> usize {
        if dim <= 8 {
            1
        } else {
            5
        }
    }

    /// Frame = first `k` columns of the identity of order `dim`.
    pub fn new(dim: usize, k: usize) -> Self {
        let frame = CMatrix::from_fn(dim, k, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        Self::with_frame(frame, Self::default_period(dim))
    }

    pub fn with_frame(frame: CMatrix, reorth_period: usize) -> Self {
        let k = frame.cols();
        Self { frame, log_sums: vec![0.0; k], steps: 0, reorth_period: reorth_period.max(1), pending: 0 }
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Accumulated log growth per frame column; call [`flush`](Self::flush) first
    /// for an up-to-date value.
    pub fn log_sums(&self) -> &[f64] {
        &self.log_sums
    }

    pub fn propagate(&mut self, a: &CMatrix) -> Result<()> {
        if a.cols() != self.frame.rows() || a.rows() != self.frame.rows() {
            return Err(Error::DimensionMismatch(format!(
                "step of order {} against frame of {} rows",
                a.rows(),
                self.frame.rows()
            )));
        }
        self.frame = a.matmul(&self.frame);
        self.steps += 1;
        self.pending += 1;
        if self.pending >= self.reorth_period || self.max_column_norm() > OVERFLOW_GUARD {
            self.flush()?;
        }
        Ok(())
    }

    fn max_column_norm(&self) -> f64 {
        let (rows, cols) = (self.frame.rows(), self.frame.cols());
        (0..cols)
            .map(|j| (0..rows).map(|i| self.frame[(i, j)].norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Re-orthonormalizes the frame and moves log R_ii into the running sums.
    pub fn flush(&mut self) -> Result<()> {
        if self.pending == 0 {
            return Ok(());
        }
        let qr = qr_thin(&self.frame)?;
        for (s, l) in self.log_sums.iter_mut().zip(qr.log_diag()) {
            *s += l;
        }
        self.frame = qr.q;
        self.pending = 0;
        Ok(())
    }

    /// log_sums / steps after a final flush.
    pub fn exponents(&mut self) -> Result<Vec<f64>> {
        self.flush()?;
        let n = self.steps.max(1) as f64;
        Ok(self.log_sums.iter().map(|s| s / n).collect())
    }
}

/// A matrix-valued solution of the recursion, one block per site.
#[derive(Debug, Clone)]
pub struct SiteSequence {
    pub first_site: i64,
    pub values: Vec<CMatrix>,
}

impl SiteSequence {
    pub fn last_site(&self) -> i64 {
        self.first_site + self.values.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> Result<&CMatrix> {
        if n < self.first_site || n > self.last_site() {
            return Err(Error::WindowMismatch(format!(
                "site {n} outside solution range [{}, {}]",
                self.first_site,
                self.last_site()
            )));
        }
        Ok(&self.values[(n - self.first_site) as usize])
    }
}

/// Column solution of T_{n+1}*ψ_{n+1} + T_nψ_{n−1} + V_nψ_n = zψ_n for sites
/// a−1..=b, from initial data ψ_{a−1}, ψ_a (a = window start).
pub fn column_solution(r: &Realization, z: C64, psi_before: &CMatrix, psi_start: &CMatrix) -> Result<SiteSequence> {
    let (a, b) = r.window();
    let mut values = vec![psi_before.clone(), psi_start.clone()];
    for n in a..b {
        let (prev, cur) = (&values[values.len() - 2], &values[values.len() - 1]);
        let mut rhs = &cur.scale(z) - &r.hopping(n)?.matmul(prev);
        if let Some(v) = r.onsite(n) {
            rhs = &rhs - &v.matmul(cur);
        }
        let next = circ(r.hopping(n + 1)?)?.matmul(&rhs);
        values.push(next);
    }
    Ok(SiteSequence { first_site: a - 1, values })
}

/// Row solution of φ_{n+1}T_{n+1} + φ_{n−1}T_n* + φ_nV_n = zφ_n, the adjoint of a
/// column solution at z̄. Sites a−1..=b from φ_{a−1}, φ_a.
pub fn row_solution(r: &Realization, z: C64, phi_before: &CMatrix, phi_start: &CMatrix) -> Result<SiteSequence> {
    let (a, b) = r.window();
    let mut values = vec![phi_before.clone(), phi_start.clone()];
    for n in a..b {
        let (prev, cur) = (&values[values.len() - 2], &values[values.len() - 1]);
        let mut lhs = &cur.scale(z) - &prev.matmul(&r.hopping(n)?.adjoint());
        if let Some(v) = r.onsite(n) {
            lhs = &lhs - &cur.matmul(v);
        }
        // φ_{n+1} = lhs·T_{n+1}⁻¹ = (T_{n+1}°·lhs*)*
        let next = circ(r.hopping(n + 1)?)?.matmul(&lhs.adjoint()).adjoint();
        values.push(next);
    }
    Ok(SiteSequence { first_site: a - 1, values })
}

/// C_n(φ, ψ) = φ_n T_{n+1}* ψ_{n+1} − φ_{n+1} T_{n+1} ψ_n.
#[derive(Debug, Clone)]
pub struct WronskianValue {
    pub site: i64,
    pub value: CMatrix,
}

pub fn wronskian(phi: &SiteSequence, psi: &SiteSequence, r: &Realization, n: i64) -> Result<WronskianValue> {
    let t = r.hopping(n + 1)?;
    let first = phi.get(n)?.matmul(&t.adjoint()).matmul(psi.get(n + 1)?);
    let second = phi.get(n + 1)?.matmul(t).matmul(psi.get(n)?);
    Ok(WronskianValue { site: n, value: &first - &second })
}

/// Ψ_n = (T_{n+1}*ψ_{n+1}, ψ_n). At the right edge, where T_{n+1} is outside the
/// realization, the top block is set to zero.
pub fn super_wave(r: &Realization, psi: &SiteSequence, n: i64) -> Result<CMatrix> {
    let bottom = psi.get(n)?;
    let top = match (r.hopping(n + 1), psi.get(n + 1)) {
        (Ok(t), Ok(next)) => t.adjoint().matmul(next),
        _ => CMatrix::zeros(bottom.rows(), bottom.cols()),
    };
    let mut out = CMatrix::zeros(2 * bottom.rows(), bottom.cols());
    out.set_block(0, 0, &top);
    out.set_block(bottom.rows(), 0, bottom);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det, singular_values};
    use crate::model::random::ginibre;
    use crate::model::{sample_realization, ModelConfig};
    use crate::symplectic::is_symplectic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn scalar_examples() {
        let a = transfer_matrix(&CMatrix::identity(1), c(0.0)).unwrap();
        assert_eq!(a, CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap());
        let a = transfer_matrix(&CMatrix::scalar(c(2.0)), c(3.0)).unwrap();
        assert_eq!(a, CMatrix::from_real_rows(&[&[1.5, -2.0], &[0.5, 0.0]]).unwrap());
    }

    #[test]
    fn factorization_determinant_and_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for n in 1..=3 {
            let t = ginibre(n, 1.0, &mut rng);
            let z = C64::new(0.7, 0.3);
            let a = transfer_matrix(&t, z).unwrap();
            let sa = s_factor(n, z).matmul(&a_factor(&t).unwrap());
            assert!(a.max_abs_diff(&sa) <= 1e-12 * a.norm_inf());
            assert!((det(&a).unwrap().norm() - 1.0).abs() < 1e-8);
            let real = transfer_matrix(&t, c(-1.3)).unwrap();
            assert!(is_symplectic(&real, 1e-10).unwrap().is_member);
        }
    }

    #[test]
    fn sector_step_examples() {
        let s = zero_energy_sector_step(&CMatrix::scalar(c(2.0)), &CMatrix::scalar(c(1.0))).unwrap();
        assert!((s[(0, 0)] - c(-0.5)).norm() < 1e-15);
        let s = zero_energy_sector_step(&CMatrix::identity(2), &CMatrix::identity(2)).unwrap();
        assert!(s.max_abs_diff(&-&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn sector_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (t_even, t_odd) = (ginibre(2, 1.0, &mut rng), ginibre(2, 1.0, &mut rng));
        let two = transfer_matrix(&t_odd, c(0.0)).unwrap().matmul(&transfer_matrix(&t_even, c(0.0)).unwrap());
        let sector = zero_energy_sector_step(&t_odd, &t_even).unwrap();
        assert!(two.block(2, 2, 2, 2).max_abs_diff(&sector) <= 1e-12);
        assert_eq!(two.block(0, 2, 2, 2).norm_max(), 0.0);
        assert_eq!(two.block(2, 0, 2, 2).norm_max(), 0.0);
    }

    #[test]
    fn accumulator_free_chain() {
        // [[3, −1], [1, 0]] has eigenvalues (3 ± √5)/2
        let a = transfer_matrix(&CMatrix::identity(1), c(3.0)).unwrap();
        let mut acc = ProductAccumulator::new(2, 2);
        // the initial frame contributes O(1/steps); 10⁶ steps bring it below 1e-6
        for _ in 0..1_000_000 {
            acc.propagate(&a).unwrap();
        }
        let g = acc.exponents().unwrap();
        let expect = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((g[0] - expect).abs() < 1e-6 && (g[1] + expect).abs() < 1e-6);

        let j = transfer_matrix(&CMatrix::identity(1), c(0.0)).unwrap();
        let mut acc = ProductAccumulator::new(2, 2);
        for _ in 0..100 {
            acc.propagate(&j).unwrap();
        }
        assert!(acc.exponents().unwrap().iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn accumulator_preserves_determinant_and_frame() {
        let cfg = ModelConfig::ginibre_pair(3, 1.0, 1.0, 8);
        let r = sample_realization(&cfg, (1, 100), 0).unwrap();
        let mut acc = ProductAccumulator::with_frame(CMatrix::identity(6), 5);
        for n in 1..=100 {
            acc.propagate(&TransferMatrix::at_site(&r, n, c(0.4)).unwrap().matrix).unwrap();
        }
        acc.flush().unwrap();
        assert!(acc.log_sums().iter().sum::<f64>().abs() < 1e-6);
        let q = acc.frame();
        assert!(q.adjoint_mul(q).max_abs_diff(&CMatrix::identity(6)) < 1e-10);
    }

    #[test]
    fn short_products_are_symplectic_and_checkerboard() {
        let cfg = ModelConfig::ginibre_pair(2, 1.0, 0.5, 9);
        let r = sample_realization(&cfg, (1, 20), 0).unwrap();
        let b = explicit_product(&r, c(0.8), 1, 20).unwrap();
        assert!(is_symplectic(&b, 1e-8).unwrap().is_member);
        let sv = singular_values(&b).values;
        assert!((sv[0] * sv[3] - 1.0).abs() < 1e-6);
        let b0 = explicit_product(&r, c(0.0), 1, 20).unwrap();
        assert_eq!(b0.block(0, 2, 2, 2).norm_max(), 0.0);
        assert_eq!(b0.block(2, 0, 2, 2).norm_max(), 0.0);
    }

    #[test]
    fn wronskian_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for cfg in [ModelConfig::ginibre_pair(2, 1.0, 0.8, 10), ModelConfig::wegner(2, 1.0, 0.5, 10)] {
            let r = sample_realization(&cfg, (1, 100), 0).unwrap();
            let z = C64::new(0.3, 0.2);
            let psi = column_solution(&r, z, &ginibre(2, 1.0, &mut rng), &ginibre(2, 1.0, &mut rng)).unwrap();
            let phi = row_solution(&r, z, &ginibre(2, 1.0, &mut rng), &ginibre(2, 1.0, &mut rng)).unwrap();
            let c0 = wronskian(&phi, &psi, &r, 1).unwrap().value;
            // size of the individual terms, which grow with the solutions
            let scale = (1..100)
                .map(|n| {
                    let t = r.hopping(n + 1).unwrap().norm_inf();
                    let a = phi.get(n).unwrap().norm_inf() * t * psi.get(n + 1).unwrap().norm_inf();
                    let b = phi.get(n + 1).unwrap().norm_inf() * t * psi.get(n).unwrap().norm_inf();
                    a.max(b)
                })
                .fold(1.0, f64::max);
            for n in 2..100 {
                let cn = wronskian(&phi, &psi, &r, n).unwrap().value;
                assert!(cn.max_abs_diff(&c0) <= 1e-9 * scale, "site {n}");
            }
            assert!(wronskian(&phi, &psi, &r, 100).is_err());
        }
    }

    #[test]
    fn wronskian_trivial_cases() {
        let r = Realization::constant((1, 6), &CMatrix::identity(1)).unwrap();
        let zero = CMatrix::zeros(1, 1);
        let one = CMatrix::identity(1);
        // free chain at z = 0: ψ = (1, 0, −1, 0, …), φ = (0, 1, 0, −1, …)
        let psi = column_solution(&r, c(0.0), &one, &zero).unwrap();
        let phi = row_solution(&r, c(0.0), &zero, &one).unwrap();
        assert_eq!(psi.get(1).unwrap()[(0, 0)], c(0.0));
        assert_eq!(psi.get(2).unwrap()[(0, 0)], c(-1.0));
        for n in 0..6 {
            assert_eq!(wronskian(&phi, &psi, &r, n).unwrap().value[(0, 0)], c(-1.0));
        }
        let phi0 = row_solution(&r, c(0.0), &zero, &zero).unwrap();
        for n in 0..6 {
            assert_eq!(wronskian(&phi0, &psi, &r, n).unwrap().value.norm_max(), 0.0);
        }
    }

    #[test]
    fn super_wave_steps_by_transfer_matrix() {
        let cfg = ModelConfig::ginibre_pair(2, 1.0, 1.0, 11);
        let r = sample_realization(&cfg, (1, 12), 0).unwrap();
        let z = C64::new(0.5, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let psi = column_solution(&r, z, &ginibre(2, 1.0, &mut rng), &ginibre(2, 1.0, &mut rng)).unwrap();
        for n in 2..12 {
            let lhs = super_wave(&r, &psi, n).unwrap();
            let rhs = TransferMatrix::at_site(&r, n, z).unwrap().matrix.matmul(&super_wave(&r, &psi, n - 1).unwrap());
            assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * lhs.norm_max().max(1.0));
        }
        let edge = super_wave(&r, &psi, 12).unwrap();
        assert_eq!(edge.block(0, 0, 2, 2).norm_max(), 0.0);
    }
}
