//! A small benchmark grid over sizes and backends, written as CSV to stdout.

use rydemu::harness::{rows_csv, Backend, BenchmarkGrid};

fn main() -> rydemu::Result<()> {
    let grid = BenchmarkGrid {
        qubits: vec![8, 10, 12, 14],
        backends: vec![Backend::Sv, Backend::Mps],
        dt_ns: vec![10],
        max_bond_dims: vec![16, 64],
        repeats: 3,
        ..BenchmarkGrid::default()
    };
    let rows = grid.run(|r| eprintln!("N = {:>2} {:<4} {:?}", r.qubits, r.backend, r.status))?;
    print!("{}", String::from_utf8(rows_csv(&rows)?).expect("CSV is UTF-8"));
    Ok(())
}
