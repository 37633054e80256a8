//! A sequence file with a spline Rabi envelope and a local detuning on one
//! atom, parsed, checked and run on the dense oracle for reference.

use rydemu::harness::{run, validate, Backend, RunConfig, SequenceFile};
use rydemu::observables::{ObservableKind, ObservableSpec};

const SEQUENCE: &str = r#"{
  "qubits": {"positions_um": [[0, 0], [6, 0], [12, 0], [18, 0]], "interaction_C": 5420158.53},
  "duration_ns": 600,
  "channels": [
    {"rabi": [{"kind": "spline", "duration_ns": 600,
               "points": [[0, 0], [150, 8], [450, 8], [600, 0]]}]},
    {"targets": [1, 2, 3], "detuning": [{"kind": "ramp", "duration_ns": 600, "start": -8, "stop": 8}]},
    {"targets": [0], "detuning": [{"kind": "ramp", "duration_ns": 300, "start": -12, "stop": 0},
                                  {"kind": "constant", "duration_ns": 300, "value": 0}]}
  ]
}"#;

fn main() -> rydemu::Result<()> {
    let seq = SequenceFile::parse(SEQUENCE)?;
    let cfg = RunConfig {
        backend: Backend::Oracle,
        dt_ns: 5,
        observables: vec![ObservableSpec {
            kind: ObservableKind::Occupation,
            qubits: Vec::new(),
            every_n_steps: 0,
        }],
        ..RunConfig::default()
    };
    println!("{}\n", validate(&seq, &cfg)?);
    let result = run(&seq, &cfg)?;
    for r in &result.records {
        println!("⟨n_{}⟩ = {:.4}", r.qubits[0], r.value);
    }
    Ok(())
}
