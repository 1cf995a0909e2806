use super::matrix::{CMatrix, C64, ZERO};
use super::qr::PIVOT_FLOOR;
use crate::error::{Error, Result};

/// Condition estimate above which a solve is flagged as ill conditioned.
pub const ILL_CONDITIONED: f64 = 1e14;

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    norm_inf: f64,
}

impl LuFactor {
    pub fn new(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("LU needs a square matrix".into()));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let norm_inf = m.norm_inf();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm_sqr()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best.sqrt() > PIVOT_FLOOR) {
                return Err(Error::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let inv_pivot = lu[(k, k)].inv();
            for i in k + 1..n {
                let f = lu[(i, k)] * inv_pivot;
                lu[(i, k)] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm, sign, norm_inf })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        let n = self.dim();
        if rhs.rows() != n {
            return Err(Error::DimensionMismatch(format!("rhs has {} rows, expected {n}", rhs.rows())));
        }
        let m = rhs.cols();
        let mut x = CMatrix::from_fn(n, m, |i, j| rhs[(self.perm[i], j)]);
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == ZERO {
                    continue;
                }
                for j in 0..m {
                    let xk = x[(k, j)];
                    x[(i, j)] -= l * xk;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u == ZERO {
                    continue;
                }
                for j in 0..m {
                    let xk = x[(k, j)];
                    x[(i, j)] -= u * xk;
                }
            }
            let d = self.lu[(i, i)].inv();
            for j in 0..m {
                x[(i, j)] *= d;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&CMatrix::identity(self.dim())).expect("identity has matching rows")
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for i in 0..self.dim() {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// log|det| without overflow.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.dim()).map(|i| self.lu[(i, i)].norm().ln()).sum()
    }

    /// Smallest over largest pivot magnitude; a cheap singularity indicator.
    pub fn pivot_ratio(&self) -> f64 {
        let mags: Vec<f64> = (0..self.dim()).map(|i| self.lu[(i, i)].norm()).collect();
        let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().cloned().fold(0.0, f64::max);
        lo / hi
    }

    /// ‖m‖∞·‖m⁻¹‖∞, computed exactly from the inverse.
    pub fn condition_estimate(&self) -> f64 {
        self.norm_inf * self.inverse().norm_inf()
    }
}

/// Result of a solve together with conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: CMatrix,
    pub condition: f64,
    /// Warning channel: set when the condition estimate exceeds [`ILL_CONDITIONED`].
    pub ill_conditioned: bool,
}

/// Solves m·x = rhs with partial pivoting.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    LuFactor::new(m)?.solve(rhs)
}

pub fn solve_checked(m: &CMatrix, rhs: &CMatrix) -> Result<Solved> {
    let lu = LuFactor::new(m)?;
    let x = lu.solve(rhs)?;
    let condition = lu.condition_estimate();
    Ok(Solved { x, condition, ill_conditioned: condition > ILL_CONDITIONED })
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(LuFactor::new(m)?.inverse())
}

/// M° = (M*)⁻¹ = (M⁻¹)*.
pub fn inverse_adjoint(m: &CMatrix) -> Result<CMatrix> {
    Ok(LuFactor::new(m)?.inverse().adjoint())
}

pub fn det(m: &CMatrix) -> Result<C64> {
    match LuFactor::new(m) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::Singular(_)) => Ok(ZERO),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    #[test]
    fn identity_solve() {
        let b = CMatrix::from_fn(3, 1, |i, _| C64::new(i as f64, 1.0));
        assert_eq!(solve(&CMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let m = CMatrix::from_diag(&[C64::new(2.0, 0.0), C64::new(0.0, 1.0)]);
        let b = CMatrix::new(2, 1, vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        let x = solve(&m, &b).unwrap();
        assert!(x.max_abs_diff(&CMatrix::new(2, 1, vec![ONE, ONE]).unwrap()) < 1e-15);
    }

    #[test]
    fn singular_is_detected() {
        let m = CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&m, &CMatrix::identity(2)), Err(Error::Singular(1))));
        assert_eq!(det(&m).unwrap(), ZERO);
    }

    #[test]
    fn ill_conditioned_flag() {
        let m = CMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-15]]).unwrap();
        let s = solve_checked(&m, &CMatrix::identity(2)).unwrap();
        assert!(s.ill_conditioned);
        let s = solve_checked(&CMatrix::identity(2), &CMatrix::identity(2)).unwrap();
        assert!(!s.ill_conditioned);
    }

    #[test]
    fn det_with_pivoting() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!((det(&m).unwrap() - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }
}
