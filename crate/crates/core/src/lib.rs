//! Numerics for wavepacket spreading in the Fibonacci Hamiltonian.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod lattice;
pub mod quadrature;
pub mod special;
pub mod tracemap;
pub mod transfer;

pub use error::{Error, Result};
pub use lattice::{apply_hamiltonian, potential_value, spectral_bound, LatticeWindow, PotentialSpec};
pub use transfer::{fibonacci_matrix, transfer_matrix, window_max_norm, Side, TransferMatrix};
