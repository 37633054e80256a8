//! Deterministic adiabatic-style workload used by benchmarks and accuracy studies.
//!
//! A global Blackman Rabi envelope with peak close to `rabi_max` and a linear
//! detuning sweep from `detuning_start` to `detuning_stop`, on a chain or a
//! square-ish grid of atoms.

use serde::{Deserialize, Serialize};

use super::sequence::SequenceFile;
use crate::error::{Error, Result};
use crate::hamiltonian::Register;
use crate::pulse::{Waveform, NS_TO_US};

/// Van der Waals coefficient of the 70S₁/₂ level of ⁸⁷Rb, rad·µm⁶/µs.
pub const RB87_C6: f64 = 5_420_158.53;

/// Mean of the Blackman window; relates the pulse area to the peak amplitude.
const BLACKMAN_MEAN: f64 = 0.42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Chain,
    /// Row-major with `⌈√N⌉` columns.
    Grid,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Layout::Chain),
            "grid" => Ok(Layout::Grid),
            other => Err(Error::config(format!("unknown layout {other:?}; expected chain or grid"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticParams {
    pub layout: Layout,
    pub spacing_um: f64,
    pub duration_ns: usize,
    pub rabi_max: f64,
    pub detuning_start: f64,
    pub detuning_stop: f64,
    pub interaction_c: f64,
}

impl Default for AdiabaticParams {
    fn default() -> Self {
        Self {
            layout: Layout::Chain,
            spacing_um: 7.0,
            duration_ns: 1000,
            rabi_max: std::f64::consts::TAU,
            detuning_start: -10.0,
            detuning_stop: 10.0,
            interaction_c: RB87_C6,
        }
    }
}

impl AdiabaticParams {
    pub fn grid() -> Self {
        Self {
            layout: Layout::Grid,
            ..Self::default()
        }
    }

    pub fn positions(&self, n: usize) -> Vec<Vec<f64>> {
        let cols = match self.layout {
            Layout::Chain => n.max(1),
            Layout::Grid => (n as f64).sqrt().ceil() as usize,
        };
        (0..n)
            .map(|i| vec![self.spacing_um * (i % cols) as f64, self.spacing_um * (i / cols) as f64])
            .collect()
    }

    pub fn register(&self, n: usize) -> Result<Register> {
        Register::new(self.positions(n), self.interaction_c)
    }

    pub fn sequence(&self, n: usize) -> Result<SequenceFile> {
        if n == 0 {
            return Err(Error::validation("the generator needs at least one qubit"));
        }
        if !(self.rabi_max >= 0.0 && self.rabi_max.is_finite()) {
            return Err(Error::validation("rabi_max must be finite and non-negative"));
        }
        let t = self.duration_ns;
        let area = BLACKMAN_MEAN * self.rabi_max * t as f64 * NS_TO_US;
        let rabi = Waveform::blackman(t, area);
        let detuning = Waveform::ramp(t, self.detuning_start, self.detuning_stop);
        rabi.validate()?;
        detuning.validate()?;
        Ok(SequenceFile::global(self.register(n)?, t, vec![rabi], vec![detuning]))
    }
}

/// The default chain workload with `n` atoms.
pub fn adiabatic_sequence(n: usize) -> Result<SequenceFile> {
    AdiabaticParams::default().sequence(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_positions() {
        let p = AdiabaticParams::grid().positions(9);
        assert_eq!(p[4], vec![7.0, 7.0]);
        assert_eq!(p[8], vec![14.0, 14.0]);
        let p = AdiabaticParams::grid().positions(5);
        assert_eq!(p[3], vec![0.0, 7.0]);
        assert_eq!(p[4], vec![7.0, 7.0]);
    }

    #[test]
    fn peak_rabi_near_requested() {
        let seq = adiabatic_sequence(3).unwrap().sample().unwrap();
        let peak = seq.rabi_row(0).iter().copied().fold(0.0, f64::max);
        assert!((peak - std::f64::consts::TAU).abs() / std::f64::consts::TAU < 0.01, "{peak}");
        assert_eq!(seq.detuning_row(2)[0], -10.0);
        assert_eq!(seq.detuning_row(2)[999], 10.0);
    }

    #[test]
    fn deterministic() {
        assert_eq!(adiabatic_sequence(9).unwrap(), adiabatic_sequence(9).unwrap());
    }
}
