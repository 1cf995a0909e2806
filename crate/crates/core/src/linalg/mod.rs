//! Dense complex matrix primitives.
//!
//! Tolerances throughout are relative to the max-row-sum norm with an
//! absolute floor of 1e-300. QR is normalized to a real positive diagonal
//! so that deflated products are reproducible bit-for-bit.

mod band;
mod lu;
mod matrix;
mod qr;
mod spectral;

pub use band::BandLu;
pub use lu::{det, inverse, inverse_adjoint, solve, solve_checked, LuFactor, Solved, ILL_CONDITIONED};
pub use matrix::{CMatrix, C64, ONE, ZERO};
pub use qr::{qr_pos, qr_thin, QrPair, PIVOT_FLOOR};
pub use spectral::{
    elementary_symmetric, herm_eig, log_wedge_norm, op_norm, singular_values, trace_norm, wedge_norm,
    HermEig, SingularSpectrum,
};
