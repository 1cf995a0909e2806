//! Banded LU with partial pivoting.
//!
//! Block-tridiagonal operators of block size N are banded with `kl = ku = 2N - 1`.
//! Row interchanges widen the upper band to `kl + ku`, so each row keeps a window
//! of `2*kl + ku + 1` columns starting at `i - kl`. Multipliers stay where they were
//! written; later interchanges only swap the trailing part of two rows, so the
//! forward solve replays (swap, eliminate) column by column.

use super::matrix::{CMatrix, C64, ZERO};
use super::qr::PIVOT_FLOOR;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
    piv: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandLu {
    /// Factors the n x n banded matrix whose entries are produced by `entry(i, j)`
    /// for `|i - j|` within the band; entries outside are taken as zero.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        mut entry: impl FnMut(usize, usize) -> C64,
    ) -> Result<Self> {
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
            piv: vec![0; n],
            min_pivot: f64::INFINITY,
            max_pivot: 0.0,
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                *lu.at_mut(i, j) = entry(i, j);
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C64 {
        self.data[self.offset(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        let o = self.offset(i, j);
        &mut self.data[o]
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        let upper = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + upper).min(n - 1);
            let (p, best) = (k..=last_row)
                .map(|i| (i, self.at(i, k).norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best > PIVOT_FLOOR) {
                return Err(Error::Singular(k));
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.offset(k, j), self.offset(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            self.min_pivot = self.min_pivot.min(best);
            self.max_pivot = self.max_pivot.max(best);
            for i in k + 1..=last_row {
                let f = self.at(i, k) / pivot;
                *self.at_mut(i, k) = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..=last_col {
                    let u = self.at(k, j);
                    *self.at_mut(i, j) -= f * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest over largest pivot magnitude.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.max_pivot
    }

    /// Solves in place for a dense right-hand side (n x m).
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        let n = self.n;
        if rhs.rows() != n {
            return Err(Error::DimensionMismatch(format!("rhs has {} rows, expected {n}", rhs.rows())));
        }
        let m = rhs.cols();
        let mut x = rhs.clone();
        let upper = self.kl + self.ku;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                for j in 0..m {
                    let t = x[(k, j)];
                    x[(k, j)] = x[(p, j)];
                    x[(p, j)] = t;
                }
            }
            for i in k + 1..=(k + self.kl).min(n - 1) {
                let l = self.at(i, k);
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
            for k in i + 1..=(i + upper).min(n - 1) {
                let u = self.at(i, k);
                if u == ZERO {
                    continue;
                }
                for j in 0..m {
                    let xk = x[(k, j)];
                    x[(i, j)] -= u * xk;
                }
            }
            let d = self.at(i, i);
            for j in 0..m {
                x[(i, j)] /= d;
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu;

    fn banded_test_matrix(n: usize, kl: usize, ku: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            if j + kl >= i && i + ku >= j {
                // zero diagonal forces pivoting
                if i == j {
                    ZERO
                } else {
                    C64::new(((i * 7 + j * 3) % 5) as f64 - 2.2, ((i + 2 * j) % 3) as f64 - 0.7)
                }
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn matches_dense_solve_with_pivoting() {
        for &(n, kl, ku) in &[(6, 1, 1), (9, 3, 3), (12, 5, 5), (7, 2, 1)] {
            let m = banded_test_matrix(n, kl, ku);
            let band = BandLu::factor(n, kl, ku, |i, j| m[(i, j)]).unwrap();
            let rhs = CMatrix::from_fn(n, 2, |i, j| C64::new(i as f64 - 1.0, j as f64 + 0.5));
            let x = band.solve(&rhs).unwrap();
            let dense = lu::solve(&m, &rhs).unwrap();
            assert!(x.max_abs_diff(&dense) < 1e-10 * (1.0 + dense.norm_max()), "n={n}");
            assert!((&m * &x).max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn singular_band_is_detected() {
        // odd chiral chain at zero energy
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]).unwrap();
        let r = BandLu::factor(3, 1, 1, |i, j| m[(i, j)]);
        match r {
            Err(Error::Singular(_)) => {}
            Ok(lu) => assert!(lu.pivot_ratio() < 1e-14),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
