//! Hartree mean-field dynamics with Bogoliubov corrections on periodic lattices.
//!
//! The crate evolves a condensate wave function by the Hartree equation, the
//! one-body density-matrix pair `(γ, α)` of the Bogoliubov fluctuations by
//! their linear equations, and checks both against a brute-force engine on a
//! truncated Fock space ([`fock`]).

pub mod bounds;
pub mod config;
pub mod error;
pub mod fock;
pub mod hartree;
pub mod interaction;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod output;
pub mod pair_dynamics;
pub mod scenarios;

pub use error::{Error, Result};
pub use lattice::{GridFunction, Lattice};

pub use num_complex::Complex64 as C64;
