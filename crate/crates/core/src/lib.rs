//! Toda and Volterra lattices: phase spaces, Lax matrices, the multi-Hamiltonian
//! hierarchy of Poisson tensors, the maps between the four phase spaces, and
//! the explicit spectral solution of the open Toda lattice.

pub mod error;
pub mod flows;
pub mod lax;
pub mod maps;
pub mod moser;
pub mod par;
pub mod poisson;
pub mod sample;
pub mod state;
pub mod verify;

pub use error::{LatticeError, Result};
pub use lax::JacobiMatrix;
pub use state::{Kind, LatticeState};
