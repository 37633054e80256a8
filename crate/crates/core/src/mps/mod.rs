//! Matrix-product-state backend.

mod backend;
mod mpo;
mod reorder;
mod state;
mod tdvp;
mod tensor;

pub use backend::{evolve_mps, site_ordering, MpsDiagnostics, MpsRunConfig, MpsRunResult};
pub use mpo::{compress, mpo_fsm, mpo_from_slice, MatrixProductOperator, MPO_COMPRESSION_TOLERANCE};
pub use tdvp::{expectation, tdvp_step, Environments, StepDiagnostics, TdvpConfig};
pub use reorder::{bandwidth, default_threshold, reorder_qubits};
pub use state::{MatrixProductState, MpsData, TensorData};
pub use tensor::{truncated_svd, Split, Tensor};
