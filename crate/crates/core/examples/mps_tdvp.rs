//! 2TDVP on a 24-atom chain, beyond comfortable state-vector sizes. Prints the
//! bond-dimension profile and truncation accounting.

use rydemu::harness::adiabatic_sequence;
use rydemu::krylov::KrylovConfig;
use rydemu::mps::{evolve_mps, MpsRunConfig, TdvpConfig};
use rydemu::observables::{occupation, QuantumStateView};

fn ignore(_: usize, _: QuantumStateView<'_>) -> rydemu::Result<()> {
    Ok(())
}

fn main() -> rydemu::Result<()> {
    let n = 24;
    let file = adiabatic_sequence(n)?;
    let seq = file.discretize(10)?;
    let cfg = MpsRunConfig {
        tdvp: TdvpConfig {
            precision: 1e-6,
            max_bond_dim: 64,
            krylov: KrylovConfig::with_tolerance(1e-10),
        },
        ..MpsRunConfig::default()
    };
    let result = evolve_mps(&seq, &file.qubits, &cfg, &mut ignore)?;
    let d = &result.diagnostics;

    println!("bond dimensions: {:?}", result.final_state.bond_dims());
    println!("max bond {} (cap {}), saturated: {}", d.max_bond, cfg.tdvp.max_bond_dim, d.saturated);
    println!("accumulated truncation weight {:.3e}", d.truncation_weight);
    println!("peak memory {} kB of a {} kB bound", d.peak_memory_bytes / 1000, d.memory_bound_bytes / 1000);
    let occ: Vec<String> = (0..n)
        .map(|q| occupation((&result.final_state).into(), q).map(|v| format!("{v:.2}")))
        .collect::<rydemu::Result<_>>()?;
    println!("final occupations: {}", occ.join(" "));
    Ok(())
}
