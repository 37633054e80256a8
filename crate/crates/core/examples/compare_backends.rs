//! The same grid sequence on the state-vector and MPS backends, compared state
//! by state and observable by observable.

use rydemu::harness::{compare, run, AdiabaticParams, Backend, RunConfig};
use rydemu::observables::{ObservableKind, ObservableSpec};

fn main() -> rydemu::Result<()> {
    let seq = AdiabaticParams::grid().sequence(9)?;
    let base = RunConfig {
        state_every_n_steps: Some(20),
        observables: vec![ObservableSpec {
            kind: ObservableKind::Correlation,
            qubits: vec![0, 4, 8],
            every_n_steps: 20,
        }],
        ..RunConfig::default()
    };
    let sv = run(&seq, &base)?;

    for (p, chi) in [(1e-3, 8), (1e-6, 64), (1e-10, 256)] {
        let mut cfg = RunConfig {
            backend: Backend::Mps,
            ..base.clone()
        };
        cfg.mps.precision = p;
        cfg.mps.max_bond_dim = chi;
        cfg.mps.reorder = true;
        let mps = run(&seq, &cfg)?;
        println!("mps p = {p:e}, χ ≤ {chi}:");
        print!("{}", compare(&sv, &mps)?);
        println!();
    }
    Ok(())
}
