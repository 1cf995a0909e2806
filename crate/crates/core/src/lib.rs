//! Numerical core for random chiral strip operators
//! `(Hψ)_n = T_{n+1}* ψ_{n+1} + T_n ψ_{n−1}` with alternating hopping laws.

pub mod error;
pub mod fit;
pub mod greens;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod par;
pub mod seed;
pub mod stats;
pub mod symplectic;
pub mod transfer;

pub use error::{Error, Result};
