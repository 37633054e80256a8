//! Exact state-vector evolution through piecewise-constant Hamiltonians.

use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::estimate::{memory_estimate_sv, SV_BUDGET_KRYLOV_DIM};
use crate::hamiltonian::{HamiltonianSlice, Parallelism, Register, StateVector, DENSE_QUBIT_LIMIT};
use crate::krylov::{expm_multiply, DenseExponential, KrylovConfig, KrylovReport};
use crate::observables::StepObserver;
use crate::pulse::DiscretizedSequence;

pub const DEFAULT_MAX_QUBITS: usize = 30;
pub const DEFAULT_MEMORY_BUDGET: u64 = 8_000_000_000;

/// Largest register accepted by the dense-exponential backend.
pub const ORACLE_QUBIT_LIMIT: usize = 12;

#[derive(Debug, Clone)]
pub struct SvRunConfig {
    pub krylov: KrylovConfig,
    /// Defaults to `|0…0⟩`.
    pub initial: Option<StateVector>,
    pub parallelism: Parallelism,
    pub max_qubits: usize,
    pub memory_budget_bytes: u64,
}

impl Default for SvRunConfig {
    fn default() -> Self {
        Self {
            krylov: KrylovConfig::default(),
            initial: None,
            parallelism: Parallelism::Sequential,
            max_qubits: DEFAULT_MAX_QUBITS,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvRunResult {
    pub final_state: StateVector,
    pub krylov_reports: Vec<KrylovReport>,
    /// `memory_estimate_sv` at the largest Krylov dimension actually used.
    pub peak_memory_bytes: u64,
    pub step_wall_s: Vec<f64>,
}

fn initial_state(n: usize, initial: Option<&StateVector>) -> Result<StateVector> {
    match initial {
        Some(s) if s.qubit_count() != n => Err(Error::Dimension {
            expected: n,
            actual: s.qubit_count(),
        }),
        Some(s) => Ok(s.clone()),
        None => Ok(StateVector::basis(n, 0)),
    }
}

fn check_register(seq: &DiscretizedSequence, reg: &Register) -> Result<()> {
    if seq.qubit_count() != reg.len() {
        return Err(Error::Dimension {
            expected: reg.len(),
            actual: seq.qubit_count(),
        });
    }
    Ok(())
}

/// Propagates `|ψ⟩` through every step of `seq`; the observer sees step 0 and
/// each subsequent step.
pub fn evolve_sv(seq: &DiscretizedSequence, reg: &Register, cfg: &SvRunConfig, observer: &mut dyn StepObserver) -> Result<SvRunResult> {
    check_register(seq, reg)?;
    cfg.krylov.validate()?;
    let n = reg.len();
    if n > cfg.max_qubits {
        return Err(Error::Refused {
            what: format!("state-vector evolution of {n} qubits"),
            reason: format!("above the qubit cap of {}", cfg.max_qubits),
        });
    }
    let required = memory_estimate_sv(n, SV_BUDGET_KRYLOV_DIM);
    if required > cfg.memory_budget_bytes {
        return Err(Error::MemoryBudget {
            required,
            budget: cfg.memory_budget_bytes,
        });
    }
    let u = reg.interaction_matrix()?;
    let dt = seq.dt_ns() as f64;
    let mut psi = initial_state(n, cfg.initial.as_ref())?;
    observer.observe(0, (&psi).into())?;

    let mut reports = Vec::with_capacity(seq.len());
    let mut walls = Vec::with_capacity(seq.len());
    for (k, step) in seq.steps().iter().enumerate() {
        let start = Instant::now();
        let h = HamiltonianSlice::new(&step.rabi, &step.detuning, &u)?;
        let matvec = |x: &[C64], out: &mut [C64]| {
            h.apply_into(x, out, cfg.parallelism).expect("dimensions fixed by construction")
        };
        let (next, report) = expm_multiply(matvec, psi.amplitudes(), dt, &cfg.krylov)?;
        if !report.converged {
            return Err(Error::NonConvergence {
                location: format!("state-vector step {k}"),
                residual: report.residual,
                iterations: report.iterations,
            });
        }
        psi = StateVector::from_amplitudes(n, next)?;
        reports.push(report);
        walls.push(start.elapsed().as_secs_f64());
        observer.observe(k + 1, (&psi).into())?;
    }
    let max_iter = reports.iter().map(|r| r.iterations).max().unwrap_or(0);
    Ok(SvRunResult {
        final_state: psi,
        krylov_reports: reports,
        peak_memory_bytes: memory_estimate_sv(n, max_iter),
        step_wall_s: walls,
    })
}

/// Reference evolution by dense eigendecomposition of every slice.
pub fn evolve_dense(
    seq: &DiscretizedSequence,
    reg: &Register,
    initial: Option<&StateVector>,
    observer: &mut dyn StepObserver,
) -> Result<StateVector> {
    check_register(seq, reg)?;
    let n = reg.len();
    if n > ORACLE_QUBIT_LIMIT.min(DENSE_QUBIT_LIMIT) {
        return Err(Error::Refused {
            what: format!("dense-exponential evolution of {n} qubits"),
            reason: format!("the oracle backend is limited to {ORACLE_QUBIT_LIMIT} qubits"),
        });
    }
    let u = reg.interaction_matrix()?;
    let dt = seq.dt_ns() as f64;
    let mut psi = initial_state(n, initial)?;
    observer.observe(0, (&psi).into())?;
    for (k, step) in seq.steps().iter().enumerate() {
        let h = HamiltonianSlice::new(&step.rabi, &step.detuning, &u)?.build_dense()?;
        let next = DenseExponential::new(h).apply(psi.amplitudes(), dt);
        psi = StateVector::from_amplitudes(n, next)?;
        observer.observe(k + 1, (&psi).into())?;
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{correlation, norm_difference, occupation, QuantumStateView};
    use crate::pulse::{ChannelProgram, StepParams, Waveform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn single_atom() -> Register {
        Register::from_points(&[[0.0, 0.0]], 5.42e6).unwrap()
    }

    fn nothing(_: usize, _: QuantumStateView<'_>) -> Result<()> {
        Ok(())
    }

    #[test]
    fn analytic_rabi() {
        let mut prog = ChannelProgram::new(1, 1000).unwrap();
        prog.push_global_rabi(Waveform::constant(1000, TAU));
        let seq = prog.sample().unwrap().discretize(1).unwrap();
        let cfg = SvRunConfig {
            krylov: KrylovConfig::with_tolerance(1e-12),
            ..Default::default()
        };
        let mut worst = 0.0f64;
        let mut at_500 = 0.0;
        let mut obs = |k: usize, s: QuantumStateView<'_>| {
            let p = occupation(s, 0)?;
            let t = k as f64 * 1e-3;
            worst = worst.max((p - (TAU * t / 2.0).sin().powi(2)).abs());
            if k == 500 {
                at_500 = p;
            }
            Ok(())
        };
        let res = evolve_sv(&seq, &single_atom(), &cfg, &mut obs).unwrap();
        assert!(worst <= 1e-8, "{worst}");
        assert!((at_500 - 1.0).abs() <= 1e-8);
        assert_eq!(res.krylov_reports.len(), 1000);
        assert!((res.final_state.norm() - 1.0).abs() < 10.0 * 1e-12 * 1000.0);
    }

    #[test]
    fn zero_pulse_is_identity() {
        let reg = Register::from_points(&[[0.0, 0.0], [7.0, 0.0], [0.0, 7.0]], 5.42e6).unwrap();
        let seq = ChannelProgram::new(3, 100).unwrap().sample().unwrap().discretize(10).unwrap();
        let res = evolve_sv(&seq, &reg, &SvRunConfig::default(), &mut nothing).unwrap();
        assert_eq!(res.final_state, StateVector::basis(3, 0));
    }

    #[test]
    fn blockade() {
        // U = 5.42e6 / 5^6 ≈ 347 rad/µs ≥ 100 Ω
        let reg = Register::from_points(&[[0.0, 0.0], [5.0, 0.0]], 5.42e6).unwrap();
        let omega = 3.0;
        let duration = (PI / omega * 1e3).round() as usize;
        let mut prog = ChannelProgram::new(2, duration).unwrap();
        prog.push_global_rabi(Waveform::constant(duration, omega));
        let seq = prog.sample().unwrap().discretize(1).unwrap();
        let res = evolve_sv(&seq, &reg, &SvRunConfig::default(), &mut nothing).unwrap();
        let both = correlation((&res.final_state).into(), 0, 1).unwrap();
        assert!(both <= 0.01, "{both}");
        let dense = evolve_dense(&seq, &reg, None, &mut nothing).unwrap();
        assert!(norm_difference((&dense).into(), (&res.final_state).into()).unwrap() < 1e-8);
    }

    #[test]
    fn matches_dense_oracle_on_random_pulses() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p = 1e-12;
        for n in 2..=8 {
            let pts: Vec<[f64; 2]> = (0..n).map(|i| [6.5 * (i % 3) as f64, 6.5 * (i / 3) as f64]).collect();
            let reg = Register::from_points(&pts, 5.42e6).unwrap();
            let steps: Vec<StepParams> = (0..6)
                .map(|_| StepParams {
                    rabi: (0..n).map(|_| rng.gen_range(0.0..15.0)).collect(),
                    detuning: (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect(),
                })
                .collect();
            let seq = DiscretizedSequence::from_steps(n, 25, steps).unwrap();
            let cfg = SvRunConfig {
                krylov: KrylovConfig::with_tolerance(p),
                ..Default::default()
            };
            let res = evolve_sv(&seq, &reg, &cfg, &mut nothing).unwrap();
            let dense = evolve_dense(&seq, &reg, None, &mut nothing).unwrap();
            let d = norm_difference((&dense).into(), (&res.final_state).into()).unwrap();
            assert!(d <= 100.0 * p * seq.len() as f64, "n={n} d={d}");
        }
    }

    #[test]
    fn constant_pulse_single_step_is_exact() {
        let reg = Register::from_points(&[[0.0, 0.0], [6.0, 0.0], [12.0, 0.0]], 5.42e6).unwrap();
        let mut prog = ChannelProgram::new(3, 400).unwrap();
        prog.push_global_rabi(Waveform::constant(400, 7.0));
        prog.push_global_detuning(Waveform::constant(400, -3.0));
        let sampled = prog.sample().unwrap();
        let p = 1e-12;
        let cfg = SvRunConfig {
            krylov: KrylovConfig::with_tolerance(p),
            ..Default::default()
        };
        let one = evolve_sv(&sampled.discretize(400).unwrap(), &reg, &cfg, &mut nothing).unwrap();
        let fine = evolve_sv(&sampled.discretize(1).unwrap(), &reg, &cfg, &mut nothing).unwrap();
        let d = norm_difference((&one.final_state).into(), (&fine.final_state).into()).unwrap();
        assert!(d <= 100.0 * p * 400.0, "{d}");
    }

    #[test]
    fn refusals() {
        let pts: Vec<[f64; 2]> = (0..13).map(|i| [6.0 * i as f64, 0.0]).collect();
        let reg = Register::from_points(&pts, 5.42e6).unwrap();
        let seq = ChannelProgram::new(13, 10).unwrap().sample().unwrap().discretize(10).unwrap();
        assert!(matches!(evolve_dense(&seq, &reg, None, &mut nothing), Err(Error::Refused { .. })));
        let cfg = SvRunConfig {
            max_qubits: 12,
            ..Default::default()
        };
        assert!(matches!(evolve_sv(&seq, &reg, &cfg, &mut nothing), Err(Error::Refused { .. })));
        let cfg = SvRunConfig {
            memory_budget_bytes: 1_000_000,
            ..Default::default()
        };
        let err = evolve_sv(&seq, &reg, &cfg, &mut nothing).unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { .. }));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn nonconvergence_aborts_with_step() {
        let reg = Register::from_points(&[[0.0, 0.0], [6.0, 0.0], [12.0, 0.0]], 5.42e6).unwrap();
        let steps = vec![
            StepParams {
                rabi: vec![50.0; 3],
                detuning: vec![1.0; 3]
            };
            2
        ];
        let seq = DiscretizedSequence::from_steps(3, 1000, steps).unwrap();
        let cfg = SvRunConfig {
            krylov: KrylovConfig {
                tolerance: 1e-12,
                max_krylov_dim: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        match evolve_sv(&seq, &reg, &cfg, &mut nothing) {
            Err(Error::NonConvergence { location, .. }) => assert!(location.contains("step 0")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rayon_matches_sequential() {
        let pts: Vec<[f64; 2]> = (0..14).map(|i| [6.0 * (i % 4) as f64, 6.0 * (i / 4) as f64]).collect();
        let reg = Register::from_points(&pts, 5.42e6).unwrap();
        let mut prog = ChannelProgram::new(14, 60).unwrap();
        prog.push_global_rabi(Waveform::constant(60, 6.0));
        let seq = prog.sample().unwrap().discretize(20).unwrap();
        let a = evolve_sv(&seq, &reg, &SvRunConfig::default(), &mut nothing).unwrap();
        let cfg = SvRunConfig {
            parallelism: Parallelism::Rayon,
            ..Default::default()
        };
        let b = evolve_sv(&seq, &reg, &cfg, &mut nothing).unwrap();
        assert_eq!(a.final_state, b.final_state);
    }
}
