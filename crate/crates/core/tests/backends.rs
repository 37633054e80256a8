use proptest::prelude::*;

use rydemu::hamiltonian::Register;
use rydemu::harness::{run, AdiabaticParams, Backend, RunConfig, RB87_C6};
use rydemu::krylov::KrylovConfig;
use rydemu::mps::{evolve_mps, MpsRunConfig, TdvpConfig};
use rydemu::observables::{norm_difference, QuantumStateView};
use rydemu::pulse::{DiscretizedSequence, StepParams};
use rydemu::sv::{evolve_dense, evolve_sv, SvRunConfig};
use rydemu::Result;

fn nothing(_: usize, _: QuantumStateView<'_>) -> Result<()> {
    Ok(())
}

fn instance() -> impl Strategy<Value = (Register, DiscretizedSequence)> {
    (2usize..=6)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5), n),
                prop::collection::vec((prop::collection::vec(0.0f64..12.0, n), prop::collection::vec(-15.0f64..15.0, n)), 1..6),
                prop::sample::select(vec![1usize, 5, 10]),
            )
        })
        .prop_map(|(n, jitter, steps, dt)| {
            let pts: Vec<[f64; 2]> = jitter.iter().enumerate().map(|(i, (x, y))| [6.0 * i as f64 + x, *y]).collect();
            let reg = Register::from_points(&pts, RB87_C6).unwrap();
            let params = steps.into_iter().map(|(rabi, detuning)| StepParams { rabi, detuning }).collect();
            (reg, DiscretizedSequence::from_steps(n, dt, params).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn untruncated_mps_matches_dense((reg, seq) in instance()) {
        let dense = evolve_dense(&seq, &reg, None, &mut nothing).unwrap();
        let sv = evolve_sv(&seq, &reg, &SvRunConfig { krylov: KrylovConfig::with_tolerance(1e-12), ..SvRunConfig::default() }, &mut nothing).unwrap();
        let cfg = MpsRunConfig {
            tdvp: TdvpConfig { precision: 1e-14, max_bond_dim: 64, krylov: KrylovConfig::with_tolerance(1e-12) },
            ..MpsRunConfig::default()
        };
        let mps = evolve_mps(&seq, &reg, &cfg, &mut nothing).unwrap();
        prop_assert!(norm_difference((&sv.final_state).into(), (&dense).into()).unwrap() < 1e-9);
        // 2TDVP from |0…0⟩ only reaches the states its growing bonds allow, so the tolerance is looser.
        prop_assert!(norm_difference((&mps.final_state).into(), (&dense).into()).unwrap() < 1e-6);
        prop_assert!((QuantumStateView::from(&mps.final_state).norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn harness_backends_agree_on_grid() {
    let seq = AdiabaticParams { duration_ns: 300, ..AdiabaticParams::grid() }.sequence(6).unwrap();
    let mut finals = Vec::new();
    for (backend, reorder) in [(Backend::Oracle, false), (Backend::Sv, false), (Backend::Mps, false), (Backend::Mps, true)] {
        let mut cfg = RunConfig { backend, state_every_n_steps: Some(0), ..RunConfig::default() };
        cfg.set_precision(1e-12);
        cfg.mps.reorder = reorder;
        let res = run(&seq, &cfg).unwrap();
        finals.push(res.final_state().unwrap().unwrap());
    }
    for f in &finals[1..] {
        let d = norm_difference(f.view(), finals[0].view()).unwrap();
        assert!(d < 1e-6, "{d}");
    }
}
