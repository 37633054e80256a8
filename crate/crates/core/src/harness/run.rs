//! Single runs: backend dispatch, observers, result files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Backend, RunConfig};
use super::sequence::SequenceFile;
use crate::error::{Error, Result};
use crate::hamiltonian::StateVector;
use crate::mps::{evolve_mps, MatrixProductState, MpsData, MpsDiagnostics};
use crate::observables::{sample_bitstrings, ObservableRecord, ObservableRecorder, QuantumStateView, StepObserver};
use crate::sv::{evolve_dense, evolve_sv};

pub const PROGRAM: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A stored state, dense or as MPS tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum StateArtifact {
    /// `[re, im]` pairs, qubit 0 least significant.
    Dense { amplitudes: Vec<[f64; 2]> },
    Mps(MpsData),
}

/// An owned state restored from a [`StateArtifact`].
#[derive(Debug, Clone)]
pub enum OwnedState {
    Dense(StateVector),
    Mps(MatrixProductState),
}

impl OwnedState {
    pub fn view(&self) -> QuantumStateView<'_> {
        match self {
            OwnedState::Dense(s) => s.into(),
            OwnedState::Mps(m) => m.into(),
        }
    }
}

impl StateArtifact {
    pub fn capture(state: QuantumStateView<'_>) -> Self {
        match state {
            QuantumStateView::Dense(s) => StateArtifact::Dense {
                amplitudes: s.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
            },
            QuantumStateView::Mps(m) => StateArtifact::Mps(m.to_data()),
        }
    }

    pub fn restore(&self) -> Result<OwnedState> {
        match self {
            StateArtifact::Dense { amplitudes } => {
                let dim = amplitudes.len();
                if !dim.is_power_of_two() {
                    return Err(Error::validation(format!("stored state has {dim} amplitudes, not a power of two")));
                }
                let amps = amplitudes.iter().map(|&[re, im]| num_complex::Complex64::new(re, im)).collect();
                Ok(OwnedState::Dense(StateVector::from_amplitudes(dim.trailing_zeros() as usize, amps)?))
            }
            StateArtifact::Mps(data) => Ok(OwnedState::Mps(MatrixProductState::from_data(data)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub step: usize,
    pub time_ns: f64,
    pub state: StateArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub program: String,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub config: RunConfig,
    pub sequence: SequenceFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub backend: Backend,
    pub qubits: usize,
    pub steps: usize,
    pub dt_ns: usize,
    /// Lanczos iterations per step (summed over local solves for MPS; empty for the oracle).
    pub krylov_iterations: Vec<usize>,
    pub max_krylov_iterations: usize,
    pub peak_memory_bytes: u64,
    pub final_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mps: Option<MpsDiagnostics>,
}

/// Wall-clock figures; the only part of a result that varies between identical runs
/// besides the timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_wall_s: f64,
    pub step_wall_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub metadata: Metadata,
    pub records: Vec<ObservableRecord>,
    pub diagnostics: RunDiagnostics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateSnapshot>,
    /// Bitstring counts; character `i` is qubit `i`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub samples: BTreeMap<String, usize>,
    pub timing: Timing,
}

/// Observer that fails with [`Error::TimedOut`] once a wall-clock limit has passed.
#[derive(Debug, Clone)]
pub struct Deadline {
    start: Instant,
    limit_s: f64,
}

impl Deadline {
    pub fn new(limit_s: f64) -> Self {
        Self {
            start: Instant::now(),
            limit_s,
        }
    }

    pub fn check(&self) -> Result<()> {
        let elapsed_s = self.start.elapsed().as_secs_f64();
        if elapsed_s > self.limit_s {
            return Err(Error::TimedOut { elapsed_s });
        }
        Ok(())
    }
}

impl StepObserver for Deadline {
    fn observe(&mut self, _: usize, _: QuantumStateView<'_>) -> Result<()> {
        self.check()
    }
}

struct Tap<'a> {
    recorder: ObservableRecorder,
    state_every: Option<usize>,
    total_steps: usize,
    dt_ns: f64,
    snapshots: Vec<StateSnapshot>,
    deadline: Option<Deadline>,
    extra: Option<&'a mut dyn StepObserver>,
}

impl StepObserver for Tap<'_> {
    fn observe(&mut self, step: usize, state: QuantumStateView<'_>) -> Result<()> {
        if let Some(d) = &self.deadline {
            d.check()?;
        }
        self.recorder.observe(step, state)?;
        if let Some(every) = self.state_every {
            if step == self.total_steps || (every > 0 && step.is_multiple_of(every)) {
                self.snapshots.push(StateSnapshot {
                    step,
                    time_ns: step as f64 * self.dt_ns,
                    state: StateArtifact::capture(state),
                });
            }
        }
        if let Some(extra) = self.extra.as_deref_mut() {
            extra.observe(step, state)?;
        }
        Ok(())
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn bitstring(bits: u64, n: usize) -> String {
    (0..n).map(|q| if (bits >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Runs `seq` as configured by `cfg`.
pub fn run(seq: &SequenceFile, cfg: &RunConfig) -> Result<RunResult> {
    run_observed(seq, cfg, None)
}

/// As [`run`], additionally passing every state to `extra`.
pub fn run_observed(seq: &SequenceFile, cfg: &RunConfig, extra: Option<&mut dyn StepObserver>) -> Result<RunResult> {
    let started_at = timestamp();
    let start = Instant::now();
    let n = seq.qubit_count();
    cfg.validate_for(n)?;
    let disc = seq.discretize(cfg.dt_ns)?;
    let reg = &seq.qubits;
    let mut tap = Tap {
        recorder: ObservableRecorder::new(cfg.observables.clone(), disc.len(), cfg.dt_ns as f64),
        state_every: cfg.state_every_n_steps,
        total_steps: disc.len(),
        dt_ns: cfg.dt_ns as f64,
        snapshots: Vec::new(),
        deadline: cfg.wall_clock_limit_s.map(Deadline::new),
        extra,
    };

    let (final_state, krylov_iterations, peak, mps_diag, walls) = match cfg.backend {
        Backend::Sv => {
            let r = evolve_sv(&disc, reg, &cfg.sv_run_config(), &mut tap)?;
            let iters = r.krylov_reports.iter().map(|k| k.iterations).collect();
            (OwnedState::Dense(r.final_state), iters, r.peak_memory_bytes, None, r.step_wall_s)
        }
        Backend::Oracle => {
            let mut walls = Vec::with_capacity(disc.len());
            let mut last = Instant::now();
            let mut timed = |step: usize, state: QuantumStateView<'_>| {
                if step > 0 {
                    walls.push(last.elapsed().as_secs_f64());
                }
                tap.observe(step, state)?;
                last = Instant::now();
                Ok(())
            };
            let psi = evolve_dense(&disc, reg, None, &mut timed)?;
            let dim = 1u64 << n;
            let peak = 8 * dim * dim * 2 + 16 * dim * 3;
            (OwnedState::Dense(psi), Vec::new(), peak, None, walls)
        }
        Backend::Mps => {
            let r = evolve_mps(&disc, reg, &cfg.mps_run_config(), &mut tap)?;
            let iters = r.diagnostics.steps.iter().map(|d| d.krylov_iterations).collect();
            let peak = r.diagnostics.peak_memory_bytes;
            (OwnedState::Mps(r.final_state), iters, peak, Some(r.diagnostics), r.step_wall_s)
        }
    };

    let view = final_state.view();
    let samples = if cfg.shots > 0 {
        let mut counts = BTreeMap::new();
        for bits in sample_bitstrings(view, cfg.shots, cfg.seed, false)? {
            *counts.entry(bitstring(bits, n)).or_insert(0) += 1;
        }
        counts
    } else {
        BTreeMap::new()
    };
    let max_krylov_iterations = match &mps_diag {
        Some(d) => d.steps.iter().map(|s| s.max_krylov_iterations).max().unwrap_or(0),
        None => krylov_iterations.iter().copied().max().unwrap_or(0),
    };
    let diagnostics = RunDiagnostics {
        backend: cfg.backend,
        qubits: n,
        steps: disc.len(),
        dt_ns: cfg.dt_ns,
        krylov_iterations,
        max_krylov_iterations,
        peak_memory_bytes: peak,
        final_norm: view.norm(),
        mps: mps_diag,
    };
    Ok(RunResult {
        metadata: Metadata {
            program: PROGRAM.to_string(),
            version: VERSION.to_string(),
            started_at,
            finished_at: timestamp(),
            config: cfg.clone(),
            sequence: seq.clone(),
        },
        records: tap.recorder.into_records(),
        diagnostics,
        states: tap.snapshots,
        samples,
        timing: Timing {
            total_wall_s: start.elapsed().as_secs_f64(),
            step_wall_s: walls,
        },
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    step: usize,
    time_ns: f64,
    observable: &'a str,
    qubits: String,
    value: f64,
}

impl RunResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| super::sequence::annotate(path, e))
    }

    /// Observable records as CSV; pair observables list their qubits separated by `;`.
    pub fn records_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            let qubits = r.qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(";");
            w.serialize(CsvRow {
                step: r.step,
                time_ns: r.time_ns,
                observable: &r.observable,
                qubits,
                value: r.value,
            })?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Writes the configured JSON and CSV outputs.
    pub fn write_outputs(&self) -> Result<()> {
        let out = &self.metadata.config.output;
        if let Some(p) = &out.json {
            write_atomic(p, self.to_json()?.as_bytes())?;
        }
        if let Some(p) = &out.csv {
            write_atomic(p, &self.records_csv()?)?;
        }
        Ok(())
    }

    /// Restores the stored state closest to the end of the run.
    pub fn final_state(&self) -> Result<Option<OwnedState>> {
        self.states.last().map(|s| s.state.restore()).transpose()
    }
}

/// Writes to a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generator::adiabatic_sequence;
    use crate::observables::{ObservableKind, ObservableSpec};
    use crate::pulse::Waveform;

    fn rabi_file() -> SequenceFile {
        let reg = crate::hamiltonian::Register::from_points(&[[0.0, 0.0]], 5.42e6).unwrap();
        SequenceFile::global(reg, 100, vec![Waveform::constant(100, std::f64::consts::TAU)], vec![])
    }

    fn occupation_every(n: usize) -> Vec<ObservableSpec> {
        vec![ObservableSpec {
            kind: ObservableKind::Occupation,
            qubits: vec![],
            every_n_steps: n,
        }]
    }

    #[test]
    fn trivial_run_records_schedule() {
        let cfg = RunConfig {
            observables: occupation_every(2),
            ..RunConfig::default()
        };
        let res = run(&rabi_file(), &cfg).unwrap();
        // 10 steps: records at 0, 2, 4, 6, 8, 10
        assert_eq!(res.records.len(), 6);
        assert_eq!(res.diagnostics.steps, 10);
        assert_eq!(res.timing.step_wall_s.len(), 10);
        let last = res.records.last().unwrap();
        let expect = (std::f64::consts::TAU * 0.1 / 2.0).sin().powi(2);
        assert!((last.value - expect).abs() < 1e-8);
    }

    #[test]
    fn oracle_matches_sv() {
        let seq = adiabatic_sequence(4).unwrap();
        let mut cfg = RunConfig {
            observables: occupation_every(10),
            ..RunConfig::default()
        };
        cfg.sv.precision = 1e-10;
        let sv = run(&seq, &cfg).unwrap();
        cfg.backend = Backend::Oracle;
        let oracle = run(&seq, &cfg).unwrap();
        assert_eq!(sv.records.len(), oracle.records.len());
        for (a, b) in sv.records.iter().zip(&oracle.records) {
            assert!((a.value - b.value).abs() <= 100.0 * 1e-10, "{} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn oracle_refuses_large_registers() {
        let seq = adiabatic_sequence(13).unwrap();
        let cfg = RunConfig {
            backend: Backend::Oracle,
            ..RunConfig::default()
        };
        let err = run(&seq, &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn result_round_trips_with_states_and_samples() {
        let mut cfg = RunConfig {
            backend: Backend::Mps,
            observables: occupation_every(5),
            state_every_n_steps: Some(50),
            shots: 200,
            seed: 3,
            ..RunConfig::default()
        };
        cfg.mps.reorder = true;
        let res = run(&adiabatic_sequence(4).unwrap(), &cfg).unwrap();
        assert_eq!(res.states.len(), 3);
        assert_eq!(res.samples.values().sum::<usize>(), 200);
        assert!(res.diagnostics.mps.is_some());
        let back = RunResult::parse(&res.to_json().unwrap()).unwrap();
        assert_eq!(back, res);
        assert!(matches!(back.final_state().unwrap(), Some(OwnedState::Mps(_))));
    }

    #[test]
    fn deterministic_apart_from_timing() {
        let cfg = RunConfig {
            threads: Some(1),
            observables: occupation_every(10),
            state_every_n_steps: Some(0),
            shots: 50,
            ..RunConfig::default()
        };
        let seq = adiabatic_sequence(5).unwrap();
        let mut a = run(&seq, &cfg).unwrap();
        let mut b = run(&seq, &cfg).unwrap();
        for r in [&mut a, &mut b] {
            r.metadata.started_at.clear();
            r.metadata.finished_at.clear();
            r.timing = Timing {
                total_wall_s: 0.0,
                step_wall_s: vec![],
            };
        }
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn deadline_aborts() {
        let cfg = RunConfig {
            wall_clock_limit_s: Some(1e-9),
            ..RunConfig::default()
        };
        let err = run(&adiabatic_sequence(6).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::TimedOut { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn atomic_write_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            observables: vec![ObservableSpec {
                kind: ObservableKind::Correlation,
                qubits: vec![],
                every_n_steps: 0,
            }],
            output: super::super::config::OutputOptions {
                json: Some(dir.path().join("r.json")),
                csv: Some(dir.path().join("r.csv")),
            },
            ..RunConfig::default()
        };
        let res = run(&adiabatic_sequence(3).unwrap(), &cfg).unwrap();
        res.write_outputs().unwrap();
        let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "step,time_ns,observable,qubits,value");
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains(",correlation,0;2,"));
        let back = RunResult::load(&dir.path().join("r.json")).unwrap();
        assert_eq!(back, res);
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 2);
    }
}
