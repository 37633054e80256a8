pub mod error;
pub mod estimate;
pub mod harness;
pub mod hamiltonian;
pub mod krylov;
pub mod mps;
pub mod observables;
pub mod pulse;
pub mod sv;

pub use error::{Error, Result};
