//! Cauchy-Green integral operators on a disk and Picard solvers for
//! nonlinear systems `d^mu dbar^nu u = a(z, u, Du, ..., D^m u)`.

pub mod error;
pub mod fd;
pub mod grid;
pub mod holder;
pub mod ledger;
pub mod ops;
pub mod problems;
pub mod solver;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{integrate, sample, DiscGrid, ScalarField};
pub use holder::{jet_index, jet_len, jet_pairs, JetField, NormReport};

/// Complex double.
pub type C64 = num_complex::Complex<f64>;
