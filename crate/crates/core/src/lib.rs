//! Kramers-Wannier duality for finite-group Ising models on latticed surfaces,
//! together with the finite-group TQFT and Turaev-Viro machinery behind it.

pub mod cli;
pub mod error;
pub mod groups;
pub mod harmonic;
pub mod homology;
pub mod ising;
pub mod surface;
pub mod tqft;
pub mod turaev_viro;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
