//! MPS time evolution over a discretized sequence.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::mpo::mpo_from_slice;
use super::reorder::{default_threshold, reorder_qubits};
use super::state::MatrixProductState;
use super::tdvp::{tdvp_step, StepDiagnostics, TdvpConfig};
use crate::error::{Error, Result};
use crate::estimate::memory_estimate_mps;
use crate::hamiltonian::Register;
use crate::observables::StepObserver;
use crate::pulse::DiscretizedSequence;
use crate::sv::DEFAULT_MEMORY_BUDGET;

#[derive(Debug, Clone, PartialEq)]
pub struct MpsRunConfig {
    pub tdvp: TdvpConfig,
    /// Order sites by reverse Cuthill-McKee on the interaction graph.
    pub reorder: bool,
    /// Edge threshold for reordering; defaults to `U_max / 100`.
    pub reorder_threshold: Option<f64>,
    /// Initial product state by qubit; defaults to `|0…0⟩`.
    pub initial_bits: Option<Vec<bool>>,
    pub memory_budget_bytes: u64,
}

impl Default for MpsRunConfig {
    fn default() -> Self {
        Self {
            tdvp: TdvpConfig::default(),
            reorder: false,
            reorder_threshold: None,
            initial_bits: None,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpsDiagnostics {
    pub ordering: Vec<usize>,
    pub steps: Vec<StepDiagnostics>,
    /// Bond dimensions after each step.
    pub bond_profile: Vec<Vec<usize>>,
    pub truncation_weight: f64,
    pub saturated: bool,
    pub max_bond: usize,
    pub peak_memory_bytes: u64,
    /// `memory_estimate_mps` at the largest observed bond and the configured Krylov limit.
    pub memory_bound_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct MpsRunResult {
    pub final_state: MatrixProductState,
    pub diagnostics: MpsDiagnostics,
    pub step_wall_s: Vec<f64>,
}

/// Site ordering for a run: identity, or reverse Cuthill-McKee when requested.
pub fn site_ordering(reg: &Register, reorder: bool, threshold: Option<f64>) -> Result<Vec<usize>> {
    let n = reg.len();
    if !reorder || n < 3 {
        return Ok((0..n).collect());
    }
    let u = reg.interaction_matrix()?;
    let threshold = threshold.unwrap_or_else(|| default_threshold(&u));
    reorder_qubits(&u, threshold)
}

/// Runs second-order TDVP through every step of `seq`; the observer sees step
/// 0 and each subsequent step.
pub fn evolve_mps(seq: &DiscretizedSequence, reg: &Register, cfg: &MpsRunConfig, observer: &mut dyn StepObserver) -> Result<MpsRunResult> {
    let n = reg.len();
    if seq.qubit_count() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: seq.qubit_count(),
        });
    }
    cfg.tdvp.validate()?;
    let u = reg.interaction_matrix()?;
    let ordering = site_ordering(reg, cfg.reorder, cfg.reorder_threshold)?;
    let bits = cfg.initial_bits.clone().unwrap_or_else(|| vec![false; n]);
    if bits.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: bits.len(),
        });
    }
    let mut mps = MatrixProductState::from_product_ordered(&bits, ordering.clone())?;
    observer.observe(0, (&mps).into())?;

    let dt = seq.dt_ns() as f64;
    let mut steps = Vec::with_capacity(seq.len());
    let mut bond_profile = Vec::with_capacity(seq.len());
    let mut walls = Vec::with_capacity(seq.len());
    let mut peak = mps.element_count() as u64 * 16;
    for (k, step) in seq.steps().iter().enumerate() {
        let start = Instant::now();
        let mpo = mpo_from_slice(&step.rabi, &step.detuning, &u, &ordering)?;
        let diag = tdvp_step(&mut mps, &mpo, dt, &cfg.tdvp).map_err(|e| match e {
            Error::NonConvergence {
                location,
                residual,
                iterations,
            } => Error::NonConvergence {
                location: format!("{location}, step {k}"),
                residual,
                iterations,
            },
            other => other,
        })?;
        walls.push(start.elapsed().as_secs_f64());
        peak = peak.max(diag.peak_bytes);
        if peak > cfg.memory_budget_bytes {
            return Err(Error::MemoryBudget {
                required: peak,
                budget: cfg.memory_budget_bytes,
            });
        }
        bond_profile.push(mps.bond_dims());
        steps.push(diag);
        observer.observe(k + 1, (&mps).into())?;
    }

    let max_bond = steps.iter().map(|d| d.max_bond).max().unwrap_or(1).max(mps.max_bond());
    let diagnostics = MpsDiagnostics {
        ordering,
        saturated: steps.iter().any(|d| d.saturated),
        truncation_weight: mps.truncation_weight(),
        max_bond,
        peak_memory_bytes: peak,
        memory_bound_bytes: memory_estimate_mps(n, max_bond, cfg.tdvp.krylov.max_krylov_dim),
        steps,
        bond_profile,
    };
    Ok(MpsRunResult {
        final_state: mps,
        diagnostics,
        step_wall_s: walls,
    })
}
