use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

use super::Realization;

/// Dirichlet restriction H_[a,b] as a dense matrix of order N·(b−a+1).
#[derive(Debug, Clone)]
pub struct FiniteHamiltonian {
    window: (i64, i64),
    n_internal: usize,
    chiral: bool,
    matrix: CMatrix,
}

impl FiniteHamiltonian {
    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    pub fn sites(&self) -> usize {
        (self.window.1 - self.window.0 + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_chiral(&self) -> bool {
        self.chiral
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Row offset of site `n` in the assembled matrix.
    pub fn offset(&self, n: i64) -> Result<usize> {
        if n < self.window.0 || n > self.window.1 {
            return Err(Error::WindowMismatch(format!(
                "site {n} outside [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        Ok((n - self.window.0) as usize * self.n_internal)
    }

    /// N×N block ⟨δ_x, H δ_y⟩.
    pub fn block(&self, x: i64, y: i64) -> Result<CMatrix> {
        let (ox, oy) = (self.offset(x)?, self.offset(y)?);
        Ok(self.matrix.block(ox, oy, self.n_internal, self.n_internal))
    }

    /// Π = (−1)^X, block diagonal, using absolute site parity.
    pub fn chirality(&self) -> Vec<f64> {
        let n = self.n_internal;
        (self.window.0..=self.window.1)
            .flat_map(|x| std::iter::repeat_n(if x.rem_euclid(2) == 0 { 1.0 } else { -1.0 }, n))
            .collect()
    }

    /// max |(HΠ + ΠH)_ij|; exactly zero for chiral assemblies.
    pub fn anticommutator_defect(&self) -> f64 {
        let pi = self.chirality();
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.matrix[(i, j)] * (pi[i] + pi[j])).norm());
            }
        }
        worst
    }

    /// Max-row-sum norm, the scale used for tolerances.
    pub fn norm(&self) -> f64 {
        self.matrix.norm_inf()
    }
}

/// Assembles H_[a,b]: block (n, n−1) = T_n, block (n−1, n) = T_n*, diagonal V_n or 0.
/// T_a is not used (Dirichlet boundary).
pub fn assemble_hamiltonian(r: &Realization) -> Result<FiniteHamiltonian> {
    let (a, b) = r.window();
    let n = r.n_internal();
    let sites = (b - a + 1) as usize;
    let mut h = CMatrix::zeros(n * sites, n * sites);
    for site in a + 1..=b {
        let t = r.hopping(site)?;
        let row = (site - a) as usize * n;
        let col = row - n;
        h.set_block(row, col, t);
        h.set_block(col, row, &t.adjoint());
    }
    if !r.is_chiral() {
        for site in a..=b {
            let v = r.onsite(site).ok_or_else(|| Error::WindowMismatch(format!("no onsite block at {site}")))?;
            let o = (site - a) as usize * n;
            // exact Hermitian copy so the assembled matrix is Hermitian bit for bit
            let v = v.hermitian_part();
            h.set_block(o, o, &v);
        }
    }
    Ok(FiniteHamiltonian { window: (a, b), n_internal: n, chiral: r.is_chiral(), matrix: h })
}

impl FiniteHamiltonian {
    /// Resolvent argument H − z.
    pub fn shifted(&self, z: C64) -> CMatrix {
        let mut m = self.matrix.clone();
        for i in 0..m.rows() {
            m[(i, i)] -= z;
        }
        m
    }
}
