//! The Hermitian symplectic group `{M : M* J M = J}`, its (D, R, S) chart on the
//! open set where the lower-right block is invertible, and the closed-form charts
//! of products of two and three transfer matrices.

use crate::error::{Error, Result};
use crate::linalg::{self, singular_values, CMatrix, LuFactor, C64, ONE};

/// J = [[0, -1], [1, 0]] in N x N blocks.
#[derive(Debug, Clone)]
pub struct SymplecticForm {
    n: usize,
    j_matrix: CMatrix,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        let mut j = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = -ONE;
            j[(n + i, i)] = ONE;
        }
        Self { n, j_matrix: j }
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.j_matrix
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub is_member: bool,
    /// ‖M* J M − J‖_max
    pub residual: f64,
    /// max(1, ‖M‖²), the scale the tolerance multiplies.
    pub scale: f64,
}

/// Checks `M* J M = J` to `tol · max(1, ‖M‖²)`; the relation is quadratic in M.
pub fn is_symplectic(m: &CMatrix, tol: f64) -> Result<Membership> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("symplectic test needs a square matrix".into()));
    }
    if m.rows() % 2 != 0 {
        return Err(Error::OddDimension(m.rows()));
    }
    let form = SymplecticForm::new(m.rows() / 2);
    let residual = m.adjoint_mul(&form.j_matrix.matmul(m)).max_abs_diff(form.matrix());
    let scale = m.norm_inf().powi(2).max(1.0);
    Ok(Membership { is_member: residual <= tol * scale, residual, scale })
}

/// Coordinates (D, R, S) of a Hermitian symplectic matrix with invertible D:
/// B = R D, C = D S, A = D°(1 + B* C).
#[derive(Debug, Clone)]
pub struct DrsChart {
    pub d: CMatrix,
    pub r: CMatrix,
    pub s: CMatrix,
}

impl DrsChart {
    pub fn new(d: CMatrix, r: CMatrix, s: CMatrix) -> Result<Self> {
        let n = d.rows();
        for (name, x) in [("D", &d), ("R", &r), ("S", &s)] {
            if x.rows() != n || x.cols() != n {
                return Err(Error::DimensionMismatch(format!("chart block {name} is not {n}x{n}")));
            }
        }
        for (name, x) in [("R", &r), ("S", &s)] {
            let defect = x.hermitian_defect();
            if defect > 1e-12 * x.norm_inf().max(1e-300) {
                return Err(Error::ChartDegenerate(format!("{name} is not Hermitian (defect {defect:e})")));
            }
        }
        if singular_values(&d).smallest() <= 0.0 {
            return Err(Error::ChartDegenerate("D is singular".into()));
        }
        Ok(Self { d, r, s })
    }

    pub fn half_dim(&self) -> usize {
        self.d.rows()
    }

    /// max(1, ‖D‖, ‖R‖, ‖S‖), the scale chart tolerances multiply.
    pub fn scale(&self) -> f64 {
        self.d.norm_inf().max(self.r.norm_inf()).max(self.s.norm_inf()).max(1.0)
    }

    /// Largest entrywise difference over the three blocks.
    pub fn max_deviation(&self, other: &DrsChart) -> f64 {
        self.d
            .max_abs_diff(&other.d)
            .max(self.r.max_abs_diff(&other.r))
            .max(self.s.max_abs_diff(&other.s))
    }
}

/// Rebuilds the 2N x 2N matrix from its chart.
pub fn matrix_from_chart(c: &DrsChart) -> Result<CMatrix> {
    let n = c.half_dim();
    let d_circ = linalg::inverse_adjoint(&c.d)
        .map_err(|_| Error::ChartDegenerate("D is numerically singular".into()))?;
    let b = c.r.matmul(&c.d);
    let cc = c.d.matmul(&c.s);
    let a = d_circ.matmul(&(&CMatrix::identity(n) + &b.adjoint_mul(&cc)));
    Ok(CMatrix::from_blocks(&a, &b, &cc, &c.d))
}

/// What to do when the recovered R or S is not Hermitian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AsymmetryPolicy {
    /// Replace by the Hermitian part and report the asymmetry.
    Symmetrize,
    /// Fail with `ChartDegenerate` when the relative asymmetry exceeds the threshold.
    Reject { threshold: f64 },
}

impl Default for AsymmetryPolicy {
    fn default() -> Self {
        AsymmetryPolicy::Symmetrize
    }
}

#[derive(Debug, Clone)]
pub struct ChartExtraction {
    pub chart: DrsChart,
    /// max(‖R − R*‖_max / ‖R‖, ‖S − S*‖_max / ‖S‖) before symmetrization.
    pub asymmetry: f64,
    pub d_condition: f64,
}

/// Condition number above which the D block counts as singular.
pub const D_BLOCK_MAX_CONDITION: f64 = 1e12;

pub fn chart_from_matrix(m: &CMatrix, policy: AsymmetryPolicy) -> Result<ChartExtraction> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("chart extraction needs a square matrix".into()));
    }
    if m.rows() % 2 != 0 {
        return Err(Error::OddDimension(m.rows()));
    }
    let n = m.rows() / 2;
    let b = m.block(0, n, n, n);
    let c = m.block(n, 0, n, n);
    let d = m.block(n, n, n, n);
    let lu = LuFactor::new(&d).map_err(|_| Error::DBlockSingular(f64::INFINITY))?;
    let d_condition = lu.condition_estimate();
    if !(d_condition < D_BLOCK_MAX_CONDITION) {
        return Err(Error::DBlockSingular(d_condition));
    }
    let d_inv = lu.inverse();
    let r_raw = b.matmul(&d_inv);
    let s_raw = lu.solve(&c)?;
    let rel = |x: &CMatrix| x.hermitian_defect() / x.norm_inf().max(1e-300);
    let asymmetry = rel(&r_raw).max(rel(&s_raw));
    if let AsymmetryPolicy::Reject { threshold } = policy {
        if asymmetry > threshold {
            return Err(Error::ChartDegenerate(format!("recovered R/S asymmetry {asymmetry:e}")));
        }
    }
    let chart = DrsChart { d, r: r_raw.hermitian_part(), s: s_raw.hermitian_part() };
    Ok(ChartExtraction { chart, asymmetry, d_condition })
}

fn nonzero_lambda(lambda: f64) -> Result<()> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite and non-zero, got {lambda}")));
    }
    Ok(())
}

/// Chart of M(T1) M(T2) for transfer matrices at real energy λ ≠ 0:
/// D = −T1° T2, R = λ, S = −λ (T2* T2)⁻¹.
pub fn product_chart_two(t1: &CMatrix, t2: &CMatrix, lambda: f64) -> Result<DrsChart> {
    nonzero_lambda(lambda)?;
    let t1_circ = linalg::inverse_adjoint(t1).map_err(|_| Error::SingularHopping)?;
    let gram_inv = linalg::inverse(&t2.adjoint_mul(t2)).map_err(|_| Error::SingularHopping)?;
    let n = t1.rows();
    Ok(DrsChart {
        d: -&t1_circ.matmul(t2),
        r: CMatrix::identity(n).scale_real(lambda),
        s: gram_inv.scale_real(-lambda).hermitian_part(),
    })
}

/// Chart of M(T) M' where M' ≅ (D, λ, S):
/// D̃ = λ T° D, R̃ = λ − λ⁻¹ T T*, S̃ = S + λ⁻¹ (D* D)⁻¹.
pub fn product_chart_three(t: &CMatrix, c: &DrsChart, lambda: f64) -> Result<DrsChart> {
    nonzero_lambda(lambda)?;
    let n = c.half_dim();
    let lambda_id = CMatrix::identity(n).scale_real(lambda);
    let r_dev = c.r.max_abs_diff(&lambda_id);
    if r_dev > 1e-10 * (1.0 + lambda.abs()) {
        return Err(Error::ChartDegenerate(format!("input chart must have R = λ·1 (deviation {r_dev:e})")));
    }
    let t_circ = linalg::inverse_adjoint(t).map_err(|_| Error::SingularHopping)?;
    let d_gram_inv = linalg::inverse(&c.d.adjoint_mul(&c.d))
        .map_err(|_| Error::ChartDegenerate("D is numerically singular".into()))?;
    let t_tstar = t.matmul(&t.adjoint());
    Ok(DrsChart {
        d: t_circ.matmul(&c.d).scale_real(lambda),
        r: (&lambda_id - &t_tstar.scale_real(1.0 / lambda)).hermitian_part(),
        s: (&c.s + &d_gram_inv.scale_real(1.0 / lambda)).hermitian_part(),
    })
}

/// Pairing defects of the spectral symmetry about the unit circle.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    /// Eigenvalue moduli, ascending.
    pub eigenvalue_moduli: Vec<f64>,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// max_j |r_j · r_{2N+1−j} − 1| over sorted eigenvalue moduli.
    pub eigenvalue_defect: f64,
    /// max_j |σ_j · σ_{2N+1−j} − 1|.
    pub singular_defect: f64,
}

impl SymmetryReport {
    pub fn max_defect(&self) -> f64 {
        self.eigenvalue_defect.max(self.singular_defect)
    }
}

fn pairing_defect(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    (0..k / 2).map(|j| (sorted[j] * sorted[k - 1 - j] - 1.0).abs()).fold(0.0, f64::max)
}

pub fn spectral_symmetry_check(m: &CMatrix) -> Result<SymmetryReport> {
    if m.rows() % 2 != 0 || !m.is_square() {
        return Err(Error::OddDimension(m.rows()));
    }
    let singular = singular_values(m).values;
    let mut moduli: Vec<f64> = match m.to_nalgebra().eigenvalues() {
        Some(ev) => ev.iter().map(|z: &C64| z.norm()).collect(),
        None => vec![f64::NAN; m.rows()],
    };
    moduli.sort_by(f64::total_cmp);
    Ok(SymmetryReport {
        eigenvalue_defect: pairing_defect(&moduli),
        singular_defect: pairing_defect(&singular),
        eigenvalue_moduli: moduli,
        singular_values: singular,
    })
}
