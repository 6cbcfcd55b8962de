//! Numerical laboratory for scrambling at the border between chaos and
//! integrability: classical stability quantifiers (maximal Lyapunov
//! exponent, fixed-point stability exponents) and quantum OTOC growth
//! exponents for two coupled large spins and Bose-Hubbard rings, plus the
//! machinery to fit the linear relation `2 lambda_q ~ a lambda_L +
//! b lambda_loc` across parameter sweeps.

pub mod analysis;
pub mod bose_hubbard;
pub mod dopri;
pub mod dynamics;
pub mod error;
pub mod experiments;
mod optim;
pub mod quantum;
pub mod spin;
pub mod symplectic;

pub use error::{Error, Result};
