//! Two atoms under a resonant π pulse. Close together the doubly excited state
//! is blocked; far apart both atoms flip.

use std::f64::consts::{PI, TAU};

use rydemu::hamiltonian::Register;
use rydemu::harness::RB87_C6;
use rydemu::krylov::KrylovConfig;
use rydemu::observables::{correlation, occupation, QuantumStateView};
use rydemu::pulse::{ChannelProgram, Waveform};
use rydemu::sv::{evolve_sv, SvRunConfig};

fn ignore(_: usize, _: QuantumStateView<'_>) -> rydemu::Result<()> {
    Ok(())
}

fn main() -> rydemu::Result<()> {
    let omega = TAU;
    let t = (PI / omega * 1e3).round() as usize;
    let mut prog = ChannelProgram::new(2, t)?;
    prog.push_global_rabi(Waveform::constant(t, omega));
    let seq = prog.sample()?.discretize(10)?;
    let cfg = SvRunConfig {
        krylov: KrylovConfig::with_tolerance(1e-12),
        ..SvRunConfig::default()
    };

    println!("{:>6} {:>10} {:>8} {:>8} {:>10}", "r (µm)", "U/Ω", "⟨n1⟩", "⟨n2⟩", "⟨n1 n2⟩");
    for r in [4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0] {
        let reg = Register::from_points(&[[0.0, 0.0], [r, 0.0]], RB87_C6)?;
        let u = reg.interaction_matrix()?.get(0, 1);
        let psi = evolve_sv(&seq, &reg, &cfg, &mut ignore)?.final_state;
        println!(
            "{r:>6.1} {:>10.2} {:>8.4} {:>8.4} {:>10.2e}",
            u / omega,
            occupation((&psi).into(), 0)?,
            occupation((&psi).into(), 1)?,
            correlation((&psi).into(), 0, 1)?
        );
    }
    Ok(())
}
