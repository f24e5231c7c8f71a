//! Numerical laboratory for the fermionic signature operator and the
//! fermionic projector of the Dirac equation in a time-dependent external
//! potential.
//!
//! The crate is `no_std` with `alloc`; the `std` feature (default) adds the
//! spatial-lattice regime, which needs an FFT.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod error;
pub mod evolution;
#[cfg(feature = "std")]
pub mod lattice;
pub mod linalg;
pub mod mass;
pub mod potential;
pub mod projector;
pub mod quadrature;
pub mod signature;
pub mod spinor;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use linalg::{Mat, Vector, C64};
