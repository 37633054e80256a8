//! Single driven atom: the excited population follows sin²(Ωt/2).

use std::f64::consts::TAU;

use rydemu::hamiltonian::Register;
use rydemu::harness::RB87_C6;
use rydemu::krylov::KrylovConfig;
use rydemu::observables::{occupation, QuantumStateView};
use rydemu::pulse::{ChannelProgram, Waveform};
use rydemu::sv::{evolve_sv, SvRunConfig};

fn main() -> rydemu::Result<()> {
    let omega = TAU;
    let reg = Register::from_points(&[[0.0, 0.0]], RB87_C6)?;
    let mut prog = ChannelProgram::new(1, 1000)?;
    prog.push_global_rabi(Waveform::constant(1000, omega));
    let seq = prog.sample()?.discretize(50)?;

    let cfg = SvRunConfig {
        krylov: KrylovConfig::with_tolerance(1e-12),
        ..SvRunConfig::default()
    };
    println!("{:>8} {:>12} {:>12}", "t (ns)", "P(1)", "sin²(Ωt/2)");
    evolve_sv(&seq, &reg, &cfg, &mut |step: usize, state: QuantumStateView<'_>| {
        let t = (step * seq.dt_ns()) as f64;
        let exact = (omega * t * 1e-3 / 2.0).sin().powi(2);
        println!("{t:>8.0} {:>12.9} {exact:>12.9}", occupation(state, 0)?);
        Ok(())
    })?;
    Ok(())
}
