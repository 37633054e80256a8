//! Resource estimates and backend recommendation.

use serde::{Deserialize, Serialize};

const BYTES_PER_AMPLITUDE: u128 = 16;

/// Krylov vectors assumed when checking a state-vector run against a budget.
pub const SV_BUDGET_KRYLOV_DIM: usize = 15;

/// Lanczos iteration count assumed by the MPS runtime model.
pub const RUNTIME_KRYLOV_ITERATIONS: u64 = 30;

/// MPO width used by the runtime model. Held fixed so the model stays linear in `N`.
pub const RUNTIME_MPO_WIDTH: u64 = 8;

/// Largest register for which the state-vector backend is recommended.
pub const SV_RECOMMENDATION_LIMIT: usize = 27;

/// Bytes for the state, the diagonal and `k` Krylov vectors: `16·2^N·(k + 2)`.
/// Saturates at `u64::MAX`.
pub fn memory_estimate_sv(n: usize, k: usize) -> u64 {
    if n >= 120 {
        return u64::MAX;
    }
    let bytes = BYTES_PER_AMPLITUDE * (1u128 << n) * (k as u128 + 2);
    u64::try_from(bytes).unwrap_or(u64::MAX)
}

/// Upper bound on MPS working memory: tensors `N·2χ²`, baths `N·(N+2)·χ²`
/// and `k` two-site Krylov vectors `k·4χ²`, at 16 bytes per entry.
pub fn memory_estimate_mps(n: usize, chi: usize, k: usize) -> u64 {
    let (n, chi, k) = (n as u128, chi as u128, k as u128);
    let chi2 = chi * chi;
    let entries = n * 2 * chi2 + n * (n + 2) * chi2 + k * 4 * chi2;
    u64::try_from(BYTES_PER_AMPLITUDE * entries).unwrap_or(u64::MAX)
}

/// Relative cost of one TDVP step: `N·χ³·(w + k̄)`.
pub fn runtime_estimate_mps(n: usize, chi: usize) -> f64 {
    let chi = chi as f64;
    n as f64 * chi * chi * chi * (RUNTIME_MPO_WIDTH + RUNTIME_KRYLOV_ITERATIONS) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recommendation {
    Sv,
    Mps,
}

impl std::fmt::Display for Recommendation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Recommendation::Sv => "sv",
            Recommendation::Mps => "mps",
        })
    }
}

/// `sv` up to 27 qubits when its estimate with `k` Krylov vectors fits the budget, else `mps`.
pub fn recommend_backend(n: usize, k: usize, budget_bytes: u64) -> Recommendation {
    if n <= SV_RECOMMENDATION_LIMIT && memory_estimate_sv(n, k) <= budget_bytes {
        Recommendation::Sv
    } else {
        Recommendation::Mps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub qubits: usize,
    pub krylov_dim: usize,
    pub max_bond_dim: usize,
    pub memory_budget_bytes: u64,
    pub sv_memory_bytes: u64,
    pub mps_memory_bytes: u64,
    pub mps_relative_runtime: f64,
    pub recommendation: Recommendation,
}

impl ResourceReport {
    pub fn new(n: usize, chi: usize, k: usize, budget_bytes: u64) -> Self {
        Self {
            qubits: n,
            krylov_dim: k,
            max_bond_dim: chi,
            memory_budget_bytes: budget_bytes,
            sv_memory_bytes: memory_estimate_sv(n, k),
            mps_memory_bytes: memory_estimate_mps(n, chi, k),
            mps_relative_runtime: runtime_estimate_mps(n, chi),
            recommendation: recommend_backend(n, k, budget_bytes),
        }
    }
}

impl std::fmt::Display for ResourceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let gb = |b: u64| b as f64 / 1e9;
        writeln!(f, "qubits:                 {}", self.qubits)?;
        writeln!(f, "state-vector memory:    {:.3} GB (k = {})", gb(self.sv_memory_bytes), self.krylov_dim)?;
        writeln!(f, "MPS memory bound:       {:.3} GB (chi = {})", gb(self.mps_memory_bytes), self.max_bond_dim)?;
        writeln!(f, "MPS relative step cost: {:.3e}", self.mps_relative_runtime)?;
        writeln!(f, "memory budget:          {:.3} GB", gb(self.memory_budget_bytes))?;
        write!(f, "recommended backend:    {}", self.recommendation)
    }
}
