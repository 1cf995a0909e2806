use nalgebra::SymmetricEigen;

use super::matrix::CMatrix;
use crate::error::{Error, Result};

/// Singular values sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn log_abs_det(&self) -> f64 {
        self.values.iter().map(|s| s.ln()).sum()
    }
}

pub fn singular_values(m: &CMatrix) -> SingularSpectrum {
    let mut values = if m.rows() == 1 && m.cols() == 1 {
        vec![m[(0, 0)].norm()]
    } else {
        m.to_nalgebra().singular_values().iter().map(|s| s.max(0.0)).collect::<Vec<_>>()
    };
    values.sort_by(|a, b| b.total_cmp(a));
    SingularSpectrum { values }
}

/// Spectral norm.
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).largest()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.rows() == 1 && m.cols() == 1 {
        return m[(0, 0)].norm();
    }
    singular_values(m).values.iter().sum()
}

/// ‖∧ʲ m‖ = σ₁···σⱼ, from the singular values; the empty product is 1.
pub fn wedge_norm(m: &CMatrix, j: usize) -> Result<f64> {
    let dim = m.rows().min(m.cols());
    if j > dim {
        return Err(Error::BadOrder { order: j, dim });
    }
    if j == 0 {
        return Ok(1.0);
    }
    Ok(singular_values(m).values[..j].iter().product())
}

/// log‖∧ʲ m‖, summed in log space so long products stay finite.
pub fn log_wedge_norm(m: &CMatrix, j: usize) -> Result<f64> {
    let dim = m.rows().min(m.cols());
    if j > dim {
        return Err(Error::BadOrder { order: j, dim });
    }
    Ok(singular_values(m).values[..j].iter().map(|s| s.ln()).sum())
}

/// Elementary symmetric polynomials e_0..e_n of `xs`.
///
/// With `xs` the squared singular values of X, `e_l = tr |∧ˡ X|²`.
pub fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (k, &x) in xs.iter().enumerate() {
        for l in (1..=k + 1).rev() {
            e[l] += x * e[l - 1];
        }
    }
    e
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues, unitary eigenvectors
/// (column j belongs to eigenvalue j).
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("herm_eig needs a square matrix".into()));
    }
    let scale = m.norm_inf().max(1e-300);
    let defect = m.hermitian_defect();
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..m.rows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.rows(), m.cols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}
