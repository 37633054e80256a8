//! Benchmark grids over (N, backend, dt, χ) on the generator workload.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Backend, RunConfig};
use super::generator::AdiabaticParams;
use super::run::{run, RunResult};
use super::sequence::annotate;
use crate::error::{Error, Result};
use crate::mps::TdvpConfig;
use crate::sv::DEFAULT_MEMORY_BUDGET;

/// Default wall-clock cap per cell, seconds.
pub const DEFAULT_CELL_TIMEOUT_S: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkGrid {
    pub qubits: Vec<usize>,
    pub backends: Vec<Backend>,
    pub dt_ns: Vec<usize>,
    /// Only used by `mps` cells.
    pub max_bond_dims: Vec<usize>,
    pub repeats: usize,
    pub timeout_s: f64,
    pub sv_precision: f64,
    pub mps_precision: f64,
    pub memory_budget_bytes: u64,
    pub threads: Option<usize>,
    pub workload: AdiabaticParams,
}

impl Default for BenchmarkGrid {
    fn default() -> Self {
        let defaults = RunConfig::default();
        Self {
            qubits: vec![8, 10, 12],
            backends: vec![Backend::Sv],
            dt_ns: vec![10],
            max_bond_dims: vec![TdvpConfig::default().max_bond_dim],
            repeats: 3,
            timeout_s: DEFAULT_CELL_TIMEOUT_S,
            sv_precision: defaults.sv.precision,
            mps_precision: defaults.mps.precision,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            threads: None,
            workload: AdiabaticParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    TimedOut,
    Refused,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub qubits: usize,
    pub backend: Backend,
    pub dt_ns: usize,
    pub max_bond_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub qubits: usize,
    pub backend: Backend,
    pub dt_ns: usize,
    pub max_bond_dim: Option<usize>,
    pub status: CellStatus,
    pub repeats: usize,
    pub median_s: Option<f64>,
    pub min_s: Option<f64>,
    pub max_s: Option<f64>,
    pub peak_memory_bytes: Option<u64>,
    pub max_bond: Option<usize>,
    pub message: String,
}

impl BenchmarkGrid {
    pub fn parse(text: &str) -> Result<Self> {
        let grid: Self = serde_json::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| annotate(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() || self.backends.is_empty() || self.dt_ns.is_empty() {
            return Err(Error::config("benchmark grid needs qubits, backends and dt_ns"));
        }
        if self.backends.contains(&Backend::Mps) && self.max_bond_dims.is_empty() {
            return Err(Error::config("mps cells need at least one max_bond_dims entry"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if !(self.timeout_s > 0.0) {
            return Err(Error::config("timeout_s must be positive"));
        }
        if let Some(&dt) = self.dt_ns.iter().find(|&&dt| dt == 0 || !self.workload.duration_ns.is_multiple_of(dt)) {
            return Err(Error::config(format!("dt = {dt} ns does not divide the workload duration {} ns", self.workload.duration_ns)));
        }
        Ok(())
    }

    /// Cells in (N, backend, dt, χ) order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &qubits in &self.qubits {
            for &backend in &self.backends {
                for &dt_ns in &self.dt_ns {
                    if backend == Backend::Mps {
                        for &chi in &self.max_bond_dims {
                            out.push(Cell {
                                qubits,
                                backend,
                                dt_ns,
                                max_bond_dim: Some(chi),
                            });
                        }
                    } else {
                        out.push(Cell {
                            qubits,
                            backend,
                            dt_ns,
                            max_bond_dim: None,
                        });
                    }
                }
            }
        }
        out
    }

    fn run_config(&self, cell: &Cell, limit_s: f64) -> RunConfig {
        let mut cfg = RunConfig {
            backend: cell.backend,
            dt_ns: cell.dt_ns,
            threads: self.threads,
            memory_budget_bytes: self.memory_budget_bytes,
            wall_clock_limit_s: Some(limit_s),
            ..RunConfig::default()
        };
        cfg.sv.precision = self.sv_precision;
        cfg.mps.precision = self.mps_precision;
        if let Some(chi) = cell.max_bond_dim {
            cfg.mps.max_bond_dim = chi;
        }
        cfg
    }

    /// Runs one cell `repeats` times. The timeout covers all repeats together.
    pub fn run_cell(&self, cell: &Cell) -> BenchmarkRow {
        let mut row = BenchmarkRow {
            qubits: cell.qubits,
            backend: cell.backend,
            dt_ns: cell.dt_ns,
            max_bond_dim: cell.max_bond_dim,
            status: CellStatus::Ok,
            repeats: 0,
            median_s: None,
            min_s: None,
            max_s: None,
            peak_memory_bytes: None,
            max_bond: None,
            message: String::new(),
        };
        let seq = match self.workload.sequence(cell.qubits) {
            Ok(s) => s,
            Err(e) => {
                row.status = CellStatus::Failed;
                row.message = e.to_string();
                return row;
            }
        };
        let start = Instant::now();
        let mut times = Vec::with_capacity(self.repeats);
        let mut last: Option<RunResult> = None;
        for _ in 0..self.repeats {
            let remaining = self.timeout_s - start.elapsed().as_secs_f64();
            let cfg = self.run_config(cell, remaining.max(1e-9));
            let t0 = Instant::now();
            match run(&seq, &cfg) {
                Ok(r) => {
                    times.push(t0.elapsed().as_secs_f64());
                    last = Some(r);
                }
                Err(e) => {
                    row.status = match e {
                        Error::TimedOut { .. } => CellStatus::TimedOut,
                        Error::MemoryBudget { .. } | Error::Refused { .. } => CellStatus::Refused,
                        _ => CellStatus::Failed,
                    };
                    row.message = e.to_string();
                    break;
                }
            }
        }
        row.repeats = times.len();
        if row.status == CellStatus::Ok {
            row.median_s = median(&times);
            row.min_s = times.iter().copied().reduce(f64::min);
            row.max_s = times.iter().copied().reduce(f64::max);
        }
        if let Some(r) = last {
            row.peak_memory_bytes = Some(r.diagnostics.peak_memory_bytes);
            row.max_bond = r.diagnostics.mps.as_ref().map(|d| d.max_bond);
        }
        row
    }

    /// Runs every cell in order, reporting each finished row to `progress`.
    pub fn run(&self, mut progress: impl FnMut(&BenchmarkRow)) -> Result<Vec<BenchmarkRow>> {
        self.validate()?;
        let mut rows = Vec::new();
        for cell in self.cells() {
            let row = self.run_cell(&cell);
            progress(&row);
            rows.push(row);
        }
        Ok(rows)
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

pub fn rows_csv(rows: &[BenchmarkRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
