//! Final-state error against a dt = 1 ns reference for a range of step sizes.

use rydemu::hamiltonian::StateVector;
use rydemu::harness::AdiabaticParams;
use rydemu::krylov::KrylovConfig;
use rydemu::observables::{norm_difference, QuantumStateView};
use rydemu::sv::{evolve_sv, SvRunConfig};

fn ignore(_: usize, _: QuantumStateView<'_>) -> rydemu::Result<()> {
    Ok(())
}

fn main() -> rydemu::Result<()> {
    let file = AdiabaticParams {
        duration_ns: 800,
        ..AdiabaticParams::default()
    }
    .sequence(6)?;
    let sampled = file.sample()?;
    let cfg = SvRunConfig {
        krylov: KrylovConfig::with_tolerance(1e-12),
        ..SvRunConfig::default()
    };
    let evolve = |dt: usize| -> rydemu::Result<StateVector> {
        Ok(evolve_sv(&sampled.discretize(dt)?, &file.qubits, &cfg, &mut ignore)?.final_state)
    };

    let reference = evolve(1)?;
    let mut previous: Option<f64> = None;
    println!("{:>6} {:>12} {:>8}", "dt", "error", "ratio");
    for dt in [2, 4, 8, 16, 32] {
        let err = norm_difference((&evolve(dt)?).into(), (&reference).into())?;
        let ratio = previous.map_or(String::from("-"), |p| format!("{:.2}", err / p));
        println!("{dt:>6} {err:>12.3e} {ratio:>8}");
        previous = Some(err);
    }
    Ok(())
}
