//! File formats and orchestration behind the command-line front end.

mod benchmark;
mod compare;
mod config;
mod generator;
mod run;
mod sequence;

use serde::{Deserialize, Serialize};

pub use benchmark::{median, rows_csv, BenchmarkGrid, BenchmarkRow, Cell, CellStatus, DEFAULT_CELL_TIMEOUT_S};
pub use compare::{compare, CompareReport, ObservablePoint, StatePoint};
pub use config::{Backend, MpsOptions, OutputOptions, RunConfig, SvOptions};
pub use generator::{adiabatic_sequence, AdiabaticParams, Layout, RB87_C6};
pub use run::{run, run_observed, write_atomic, Deadline, Metadata, OwnedState, RunDiagnostics, RunResult, StateArtifact, StateSnapshot, Timing, PROGRAM, VERSION};
pub use sequence::{ChannelEntry, SequenceFile};

use crate::error::{Error, Result};
use crate::estimate::{memory_estimate_sv, recommend_backend, Recommendation, SV_BUDGET_KRYLOV_DIM};
use crate::sv::{DEFAULT_MAX_QUBITS, ORACLE_QUBIT_LIMIT};

/// What `validate` learned about a sequence and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub qubits: usize,
    pub duration_ns: usize,
    pub dt_ns: usize,
    pub steps: usize,
    pub backend: Backend,
    pub sv_memory_bytes: u64,
    pub memory_budget_bytes: u64,
    pub recommendation: Recommendation,
}

impl std::fmt::Display for ValidationSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "qubits:        {}", self.qubits)?;
        writeln!(f, "duration:      {} ns", self.duration_ns)?;
        writeln!(f, "steps:         {} × {} ns", self.steps, self.dt_ns)?;
        writeln!(f, "backend:       {}", self.backend)?;
        writeln!(f, "sv memory:     {:.3} GB (budget {:.3} GB)", self.sv_memory_bytes as f64 / 1e9, self.memory_budget_bytes as f64 / 1e9)?;
        write!(f, "recommended:   {}", self.recommendation)
    }
}

/// Checks a sequence against a configuration without running it, including the
/// up-front refusals the selected backend would raise.
pub fn validate(seq: &SequenceFile, cfg: &RunConfig) -> Result<ValidationSummary> {
    let n = seq.qubit_count();
    cfg.validate_for(n)?;
    let disc = seq.discretize(cfg.dt_ns)?;
    let sv_memory_bytes = memory_estimate_sv(n, SV_BUDGET_KRYLOV_DIM);
    match cfg.backend {
        Backend::Sv if n > DEFAULT_MAX_QUBITS => {
            return Err(Error::Refused {
                what: format!("state-vector evolution of {n} qubits"),
                reason: format!("above the qubit cap of {DEFAULT_MAX_QUBITS}"),
            })
        }
        Backend::Sv if sv_memory_bytes > cfg.memory_budget_bytes => {
            return Err(Error::MemoryBudget {
                required: sv_memory_bytes,
                budget: cfg.memory_budget_bytes,
            })
        }
        Backend::Oracle if n > ORACLE_QUBIT_LIMIT => {
            return Err(Error::Refused {
                what: format!("dense-exponential evolution of {n} qubits"),
                reason: format!("the oracle backend is limited to {ORACLE_QUBIT_LIMIT} qubits"),
            })
        }
        _ => {}
    }
    Ok(ValidationSummary {
        qubits: n,
        duration_ns: seq.duration_ns,
        dt_ns: cfg.dt_ns,
        steps: disc.len(),
        backend: cfg.backend,
        sv_memory_bytes,
        memory_budget_bytes: cfg.memory_budget_bytes,
        recommendation: recommend_backend(n, SV_BUDGET_KRYLOV_DIM, cfg.memory_budget_bytes),
    })
}
