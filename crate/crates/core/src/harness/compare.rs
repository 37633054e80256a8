//! Comparison of two run results: state differences and observable differences
//! at the times both results share.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::run::RunResult;
use crate::error::{Error, Result};
use crate::observables::{fidelity, norm_difference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub time_ns: f64,
    pub norm_difference: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablePoint {
    pub time_ns: f64,
    pub observable: String,
    pub qubits: Vec<usize>,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub states: Vec<StatePoint>,
    pub observables: Vec<ObservablePoint>,
    pub final_norm_difference: Option<f64>,
    pub final_fidelity: Option<f64>,
    pub max_observable_difference: Option<f64>,
}

/// Time in ns as an exact map key; step times are integers.
fn key(t: f64) -> i64 {
    t.round() as i64
}

pub fn compare(a: &RunResult, b: &RunResult) -> Result<CompareReport> {
    if a.diagnostics.qubits != b.diagnostics.qubits {
        return Err(Error::Dimension {
            expected: a.diagnostics.qubits,
            actual: b.diagnostics.qubits,
        });
    }
    let b_states: BTreeMap<i64, _> = b.states.iter().map(|s| (key(s.time_ns), s)).collect();
    let mut states = Vec::new();
    for sa in &a.states {
        let Some(sb) = b_states.get(&key(sa.time_ns)) else { continue };
        let (x, y) = (sa.state.restore()?, sb.state.restore()?);
        states.push(StatePoint {
            time_ns: sa.time_ns,
            norm_difference: norm_difference(x.view(), y.view())?,
            fidelity: fidelity(x.view(), y.view())?,
        });
    }

    let b_records: BTreeMap<(i64, &str, &[usize]), f64> = b
        .records
        .iter()
        .map(|r| ((key(r.time_ns), r.observable.as_str(), r.qubits.as_slice()), r.value))
        .collect();
    let observables: Vec<ObservablePoint> = a
        .records
        .iter()
        .filter_map(|r| {
            b_records.get(&(key(r.time_ns), r.observable.as_str(), r.qubits.as_slice())).map(|&bv| ObservablePoint {
                time_ns: r.time_ns,
                observable: r.observable.clone(),
                qubits: r.qubits.clone(),
                a: r.value,
                b: bv,
            })
        })
        .collect();

    if states.is_empty() && observables.is_empty() {
        return Err(Error::validation(
            "incompatible results: no stored states or observable records at common times",
        ));
    }
    Ok(CompareReport {
        final_norm_difference: states.last().map(|p| p.norm_difference),
        final_fidelity: states.last().map(|p| p.fidelity),
        max_observable_difference: observables.iter().map(|p| (p.a - p.b).abs()).reduce(f64::max),
        states,
        observables,
    })
}

impl std::fmt::Display for CompareReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if !self.states.is_empty() {
            writeln!(f, "{:>12}  {:>16}  {:>20}", "time_ns", "norm_difference", "1 - fidelity")?;
            for p in &self.states {
                writeln!(f, "{:>12}  {:>16.6e}  {:>20.6e}", p.time_ns, p.norm_difference, 1.0 - p.fidelity)?;
            }
        }
        if let Some(d) = self.final_norm_difference {
            writeln!(f, "final norm difference: {d:.6e}")?;
        }
        if let Some(d) = self.max_observable_difference {
            writeln!(f, "max observable difference over {} records: {d:.6e}", self.observables.len())?;
        }
        Ok(())
    }
}
