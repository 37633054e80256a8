//! Sequence description files.
//!
//! ```json
//! {
//!   "qubits": {"positions_um": [[0, 0], [7, 0]], "interaction_C": 5420158.53},
//!   "duration_ns": 500,
//!   "channels": [
//!     {"rabi": [{"kind": "constant", "duration_ns": 500, "value": 5.0}]},
//!     {"targets": [1], "detuning": [{"kind": "ramp", "duration_ns": 500, "start": -5, "stop": 5}]}
//!   ]
//! }
//! ```
//!
//! Each channel entry appends its segments to the Rabi and detuning channels of
//! every qubit in `targets` (all qubits when absent). Channels shorter than
//! `duration_ns` are zero-padded. Unknown keys are rejected; malformed segments
//! and registers are reported with the line and column where parsing stopped.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Register;
use crate::pulse::{ChannelProgram, DiscretizedSequence, SampledSequence, Waveform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    #[serde(deserialize_with = "validated_register")]
    pub qubits: Register,
    pub duration_ns: usize,
    #[serde(default)]
    pub channels: Vec<ChannelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    #[serde(default, deserialize_with = "validated_segments", skip_serializing_if = "Vec::is_empty")]
    pub rabi: Vec<Waveform>,
    #[serde(default, deserialize_with = "validated_segments", skip_serializing_if = "Vec::is_empty")]
    pub detuning: Vec<Waveform>,
}

fn validated_register<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Register, D::Error> {
    let reg = Register::deserialize(d)?;
    reg.validate().map_err(serde::de::Error::custom)?;
    Ok(reg)
}

fn validated_segments<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Waveform>, D::Error> {
    let segs = Vec::<Waveform>::deserialize(d)?;
    for (i, w) in segs.iter().enumerate() {
        w.validate().map_err(|e| serde::de::Error::custom(format!("segment {i}: {e}")))?;
    }
    Ok(segs)
}

impl SequenceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.sample()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| annotate(path, e))
    }

    /// The same global segments on every qubit.
    pub fn global(qubits: Register, duration_ns: usize, rabi: Vec<Waveform>, detuning: Vec<Waveform>) -> Self {
        Self {
            qubits,
            duration_ns,
            channels: vec![ChannelEntry {
                targets: None,
                rabi,
                detuning,
            }],
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn program(&self) -> Result<ChannelProgram> {
        let n = self.qubits.len();
        let mut prog = ChannelProgram::new(n, self.duration_ns)?;
        for (c, ch) in self.channels.iter().enumerate() {
            let targets: Vec<usize> = ch.targets.clone().unwrap_or_else(|| (0..n).collect());
            if targets.is_empty() {
                return Err(Error::validation(format!("channel {c}: empty target list")));
            }
            for &q in &targets {
                if q >= n {
                    return Err(Error::validation(format!("channel {c}: target qubit {q} but the register has {n} atoms")));
                }
                for w in &ch.rabi {
                    prog.push_rabi(q, w.clone())?;
                }
                for w in &ch.detuning {
                    prog.push_detuning(q, w.clone())?;
                }
            }
        }
        Ok(prog)
    }

    pub fn sample(&self) -> Result<SampledSequence> {
        self.program()?.sample()
    }

    pub fn discretize(&self, dt_ns: usize) -> Result<DiscretizedSequence> {
        self.sample()?.discretize(dt_ns)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Prefix an error message with the file it came from, keeping its kind.
pub(crate) fn annotate(path: &Path, e: Error) -> Error {
    let p = path.display();
    match e {
        Error::Validation(m) => Error::Validation(format!("{p}: {m}")),
        Error::Config(m) => Error::Config(format!("{p}: {m}")),
        Error::Json(j) => Error::Validation(format!("{p}: {j}")),
        other => other,
    }
}
