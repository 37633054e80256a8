//! Adiabatic sweep on a 10-atom chain through the harness: observables every
//! 100 ns and bitstrings sampled from the final state.

use rydemu::harness::{adiabatic_sequence, run, Backend, RunConfig};
use rydemu::observables::{ObservableKind, ObservableSpec};

fn main() -> rydemu::Result<()> {
    let seq = adiabatic_sequence(10)?;
    let cfg = RunConfig {
        backend: Backend::Sv,
        dt_ns: 10,
        observables: vec![ObservableSpec {
            kind: ObservableKind::Occupation,
            qubits: Vec::new(),
            every_n_steps: 10,
        }],
        shots: 2000,
        seed: 7,
        ..RunConfig::default()
    };
    let result = run(&seq, &cfg)?;

    println!("time (ns)  occupations");
    for chunk in result.records.chunks(10) {
        let row: Vec<String> = chunk.iter().map(|r| format!("{:.3}", r.value)).collect();
        println!("{:>9.0}  {}", chunk[0].time_ns, row.join(" "));
    }

    let mut top: Vec<_> = result.samples.iter().collect();
    top.sort_by(|a, b| b.1.cmp(a.1));
    println!("\nmost frequent bitstrings (qubit 0 first):");
    for (bits, count) in top.iter().take(5) {
        println!("  {bits}  {count}");
    }
    let d = &result.diagnostics;
    println!(
        "\n{} steps, up to {} Krylov iterations per step, {:.2} s",
        d.steps, d.max_krylov_iterations, result.timing.total_wall_s
    );
    Ok(())
}
