//! Run configuration files.
//!
//! Every field is optional; omitted fields take the defaults below.
//!
//! ```json
//! {
//!   "backend": "mps",
//!   "dt_ns": 10,
//!   "sv": {"precision": 1e-10, "max_krylov_dim": 100},
//!   "mps": {"precision": 1e-5, "max_bond_dim": 1024, "reorder": true, "krylov_precision": 1e-10},
//!   "observables": [{"type": "occupation", "every_n_steps": 10}],
//!   "output": {"json": "result.json", "csv": "series.csv"},
//!   "seed": 7,
//!   "shots": 1000,
//!   "memory_budget_bytes": 8000000000
//! }
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sequence::annotate;
use crate::error::{Error, Result};
use crate::krylov::KrylovConfig;
use crate::mps::{MpsRunConfig, TdvpConfig};
use crate::observables::ObservableSpec;
use crate::sv::{SvRunConfig, DEFAULT_MAX_QUBITS, DEFAULT_MEMORY_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Dense state vector with Lanczos propagation.
    Sv,
    /// Matrix product state with two-site TDVP.
    Mps,
    /// Dense eigendecomposition of every slice; small registers only.
    Oracle,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Sv => "sv",
            Backend::Mps => "mps",
            Backend::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sv" => Ok(Backend::Sv),
            "mps" => Ok(Backend::Mps),
            "oracle" => Ok(Backend::Oracle),
            other => Err(Error::config(format!("unknown backend {other:?}; expected sv, mps or oracle"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvOptions {
    /// Krylov residual tolerance.
    pub precision: f64,
    pub max_krylov_dim: usize,
}

impl Default for SvOptions {
    fn default() -> Self {
        let k = KrylovConfig::default();
        Self {
            precision: k.tolerance,
            max_krylov_dim: k.max_krylov_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpsOptions {
    /// Truncation precision `p`.
    pub precision: f64,
    pub max_bond_dim: usize,
    pub reorder: bool,
    /// Interaction threshold for the reordering graph; `U_max / 100` when absent.
    pub reorder_threshold: Option<f64>,
    /// Tolerance of the local Lanczos exponentials.
    pub krylov_precision: f64,
    pub max_krylov_dim: usize,
}

impl Default for MpsOptions {
    fn default() -> Self {
        let t = TdvpConfig::default();
        Self {
            precision: t.precision,
            max_bond_dim: t.max_bond_dim,
            reorder: false,
            reorder_threshold: None,
            krylov_precision: t.krylov.tolerance,
            max_krylov_dim: t.krylov.max_krylov_dim,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub json: Option<PathBuf>,
    /// Observable time series as CSV.
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub backend: Backend,
    pub dt_ns: usize,
    pub sv: SvOptions,
    pub mps: MpsOptions,
    pub observables: Vec<ObservableSpec>,
    pub output: OutputOptions,
    pub seed: u64,
    /// Bitstrings sampled from the final state; 0 disables sampling.
    pub shots: usize,
    /// Worker threads; `None` leaves the choice to the caller.
    pub threads: Option<usize>,
    pub memory_budget_bytes: u64,
    /// Store states every `n` steps (0: final state only). Absent: no states.
    pub state_every_n_steps: Option<usize>,
    /// Abort the run once this much wall-clock time has passed.
    pub wall_clock_limit_s: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Sv,
            dt_ns: 10,
            sv: SvOptions::default(),
            mps: MpsOptions::default(),
            observables: Vec::new(),
            output: OutputOptions::default(),
            seed: 0,
            shots: 0,
            threads: None,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            state_every_n_steps: None,
            wall_clock_limit_s: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| annotate(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt_ns == 0 {
            return Err(Error::config("dt_ns must be at least 1"));
        }
        self.sv_krylov().validate()?;
        self.tdvp().validate()?;
        if let Some(t) = self.mps.reorder_threshold {
            if !(t > 0.0) {
                return Err(Error::config(format!("reorder_threshold must be positive, got {t}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be at least 1"));
        }
        if let Some(limit) = self.wall_clock_limit_s {
            if !(limit > 0.0) {
                return Err(Error::config("wall_clock_limit_s must be positive"));
            }
        }
        Ok(())
    }

    /// Checks that depend on the register size.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        for spec in &self.observables {
            spec.validate(n)?;
        }
        if self.shots > 0 && n > 64 {
            return Err(Error::config("bitstring sampling supports at most 64 qubits"));
        }
        Ok(())
    }

    pub fn sv_krylov(&self) -> KrylovConfig {
        KrylovConfig {
            tolerance: self.sv.precision,
            max_krylov_dim: self.sv.max_krylov_dim,
            ..KrylovConfig::default()
        }
    }

    pub fn tdvp(&self) -> TdvpConfig {
        TdvpConfig {
            precision: self.mps.precision,
            max_bond_dim: self.mps.max_bond_dim,
            krylov: KrylovConfig {
                tolerance: self.mps.krylov_precision,
                max_krylov_dim: self.mps.max_krylov_dim,
                ..KrylovConfig::default()
            },
        }
    }

    pub fn sv_run_config(&self) -> SvRunConfig {
        SvRunConfig {
            krylov: self.sv_krylov(),
            initial: None,
            parallelism: match self.threads {
                Some(1) => crate::hamiltonian::Parallelism::Sequential,
                _ => crate::hamiltonian::Parallelism::Rayon,
            },
            max_qubits: DEFAULT_MAX_QUBITS,
            memory_budget_bytes: self.memory_budget_bytes,
        }
    }

    pub fn mps_run_config(&self) -> MpsRunConfig {
        MpsRunConfig {
            tdvp: self.tdvp(),
            reorder: self.mps.reorder,
            reorder_threshold: self.mps.reorder_threshold,
            initial_bits: None,
            memory_budget_bytes: self.memory_budget_bytes,
        }
    }

    /// Sets the precision of whichever backend is selected.
    pub fn set_precision(&mut self, p: f64) {
        match self.backend {
            Backend::Mps => self.mps.precision = p,
            Backend::Sv | Backend::Oracle => self.sv.precision = p,
        }
    }
}
