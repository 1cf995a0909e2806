use super::matrix::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Pivots below this magnitude count as rank deficiency.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Q·R factorization with the positive-real-diagonal convention on R.
#[derive(Debug, Clone)]
pub struct QrPair {
    pub q: CMatrix,
    pub r: CMatrix,
}

impl QrPair {
    /// log R_ii, the per-column growth factors used for Lyapunov deflation.
    pub fn log_diag(&self) -> Vec<f64> {
        (0..self.r.rows()).map(|i| self.r[(i, i)].re.ln()).collect()
    }
}

/// Square QR with real positive diagonal of R, which makes the factorization unique.
pub fn qr_pos(m: &CMatrix) -> Result<QrPair> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "qr_pos needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    qr_thin(m)
}

/// Thin Householder QR of a tall matrix (rows >= cols): Q is rows x cols with
/// orthonormal columns, R is cols x cols upper triangular with positive diagonal.
pub fn qr_thin(m: &CMatrix) -> Result<QrPair> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows < cols {
        return Err(Error::DimensionMismatch(format!("qr_thin needs rows >= cols, got {rows}x{cols}")));
    }
    let mut a = m.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut alphas = Vec::with_capacity(cols);

    for k in 0..cols {
        let x: Vec<C64> = (k..rows).map(|i| a[(i, k)]).collect();
        let norm_x = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm_x > PIVOT_FLOOR) {
            return Err(Error::RankDeficient { column: k, pivot: norm_x });
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * norm_x;
        let mut v = x;
        v[0] -= alpha;
        let v_norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm2 > 0.0 {
            for j in k..cols {
                let s: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * a[(k + t, j)]).sum();
                let f = s * (2.0 / v_norm2);
                for (t, vi) in v.iter().enumerate() {
                    a[(k + t, j)] -= f * vi;
                }
            }
        }
        alphas.push(alpha);
        reflectors.push(if v_norm2 > 0.0 { v.iter().map(|z| z / v_norm2.sqrt()).collect() } else { v });
    }

    let mut r = CMatrix::zeros(cols, cols);
    for i in 0..cols {
        r[(i, i)] = alphas[i];
        for j in i + 1..cols {
            r[(i, j)] = a[(i, j)];
        }
    }

    // Q = H_0 ... H_{cols-1} applied to the first cols columns of the identity.
    let mut q = CMatrix::from_fn(rows, cols, |i, j| if i == j { ONE } else { ZERO });
    for k in (0..cols).rev() {
        let v = &reflectors[k];
        if v.iter().all(|z| *z == ZERO) {
            continue;
        }
        for j in 0..cols {
            let s: C64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * q[(k + t, j)]).sum();
            let f = s * 2.0;
            for (t, vi) in v.iter().enumerate() {
                q[(k + t, j)] -= f * vi;
            }
        }
    }

    // Rotate phases so that diag(R) is real positive.
    for k in 0..cols {
        let d = r[(k, k)];
        let mag = d.norm();
        if !(mag > PIVOT_FLOOR) {
            return Err(Error::RankDeficient { column: k, pivot: mag });
        }
        let ph = d / mag;
        for j in k..cols {
            r[(k, j)] *= ph.conj();
        }
        r[(k, k)] = C64::new(mag, 0.0);
        for i in 0..rows {
            q[(i, k)] *= ph;
        }
    }
    Ok(QrPair { q, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_fixed_point() {
        let qr = qr_pos(&CMatrix::identity(4)).unwrap();
        assert!(qr.q.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
        assert!(qr.r.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn sign_goes_into_q() {
        let m = CMatrix::from_real_diag(&[-2.0, 1.0]);
        let qr = qr_pos(&m).unwrap();
        assert!(qr.q.max_abs_diff(&CMatrix::from_real_diag(&[-1.0, 1.0])) < 1e-15);
        assert!(qr.r.max_abs_diff(&CMatrix::from_real_diag(&[2.0, 1.0])) < 1e-15);
    }

    #[test]
    fn rank_deficient_is_reported() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(qr_pos(&m), Err(Error::RankDeficient { column: 1, .. })));
        assert!(qr_pos(&CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn tall_matrix_thin_factor() {
        let m = CMatrix::from_fn(5, 2, |i, j| C64::new((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let qr = qr_thin(&m).unwrap();
        assert!((&qr.q * &qr.r).max_abs_diff(&m) < 1e-13);
        assert!(qr.q.adjoint_mul(&qr.q).max_abs_diff(&CMatrix::identity(2)) < 1e-14);
        assert_eq!(qr.r[(1, 0)], ZERO);
    }
}
