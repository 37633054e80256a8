//! Control pulses: waveform segments, 1 ns sampling, and midpoint discretization
//! into piecewise-constant steps.
//!
//! Times are integer nanoseconds; Rabi frequencies and detunings are in rad/µs.
//! The factor [`NS_TO_US`] is applied exactly once, when a step length is turned
//! into a phase.

mod spline;
mod waveform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spline::NaturalSpline;
pub use waveform::{blackman_window, Waveform};

/// ns → µs.
pub const NS_TO_US: f64 = 1e-3;

/// Per-qubit segment lists for the Rabi amplitude and detuning channels.
///
/// Channels shorter than `duration_ns` are padded with zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProgram {
    qubit_count: usize,
    duration_ns: usize,
    rabi: Vec<Vec<Waveform>>,
    detuning: Vec<Vec<Waveform>>,
}

impl ChannelProgram {
    pub fn new(qubit_count: usize, duration_ns: usize) -> Result<Self> {
        if qubit_count == 0 {
            return Err(Error::validation("program needs at least one qubit"));
        }
        if duration_ns == 0 {
            return Err(Error::validation("program duration must be at least 1 ns"));
        }
        Ok(Self {
            qubit_count,
            duration_ns,
            rabi: vec![Vec::new(); qubit_count],
            detuning: vec![Vec::new(); qubit_count],
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn duration_ns(&self) -> usize {
        self.duration_ns
    }

    pub fn rabi(&self, qubit: usize) -> &[Waveform] {
        &self.rabi[qubit]
    }

    pub fn detuning(&self, qubit: usize) -> &[Waveform] {
        &self.detuning[qubit]
    }

    pub fn push_rabi(&mut self, qubit: usize, w: Waveform) -> Result<&mut Self> {
        self.check_qubit(qubit)?;
        self.rabi[qubit].push(w);
        Ok(self)
    }

    pub fn push_detuning(&mut self, qubit: usize, w: Waveform) -> Result<&mut Self> {
        self.check_qubit(qubit)?;
        self.detuning[qubit].push(w);
        Ok(self)
    }

    /// Append the same segment to every qubit's Rabi channel.
    pub fn push_global_rabi(&mut self, w: Waveform) -> &mut Self {
        for ch in &mut self.rabi {
            ch.push(w.clone());
        }
        self
    }

    pub fn push_global_detuning(&mut self, w: Waveform) -> &mut Self {
        for ch in &mut self.detuning {
            ch.push(w.clone());
        }
        self
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubit_count {
            return Err(Error::validation(format!(
                "qubit {qubit} out of range for a {}-qubit program",
                self.qubit_count
            )));
        }
        Ok(())
    }

    /// Sample every channel on the 1 ns grid.
    pub fn sample(&self) -> Result<SampledSequence> {
        let n = self.qubit_count;
        let t = self.duration_ns;
        let mut rabi = Vec::with_capacity(n * t);
        let mut detuning = Vec::with_capacity(n * t);
        for q in 0..n {
            let row = sample_channel(&self.rabi[q], t)
                .map_err(|e| Error::validation(format!("qubit {q} rabi channel: {e}")))?;
            if let Some(v) = row.iter().find(|v| **v < 0.0) {
                return Err(Error::validation(format!(
                    "qubit {q} rabi channel: amplitude samples must be non-negative, found {v}"
                )));
            }
            rabi.extend(row);
            let row = sample_channel(&self.detuning[q], t)
                .map_err(|e| Error::validation(format!("qubit {q} detuning channel: {e}")))?;
            detuning.extend(row);
        }
        SampledSequence::new(n, t, rabi, detuning)
    }
}

fn sample_channel(segments: &[Waveform], duration: usize) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(duration);
    for w in segments {
        row.extend(w.sample()?);
    }
    if row.len() > duration {
        return Err(Error::validation(format!(
            "segments last {} ns but the program duration is {duration} ns",
            row.len()
        )));
    }
    row.resize(duration, 0.0);
    Ok(row)
}

/// Row-major `N × T` sample arrays, one value per ns.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSequence {
    qubit_count: usize,
    duration_ns: usize,
    rabi: Vec<f64>,
    detuning: Vec<f64>,
}

impl SampledSequence {
    pub fn new(
        qubit_count: usize,
        duration_ns: usize,
        rabi: Vec<f64>,
        detuning: Vec<f64>,
    ) -> Result<Self> {
        let expected = qubit_count * duration_ns;
        for len in [rabi.len(), detuning.len()] {
            if len != expected {
                return Err(Error::Dimension {
                    expected,
                    actual: len,
                });
            }
        }
        Ok(Self {
            qubit_count,
            duration_ns,
            rabi,
            detuning,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn duration_ns(&self) -> usize {
        self.duration_ns
    }

    pub fn rabi_row(&self, qubit: usize) -> &[f64] {
        &self.rabi[qubit * self.duration_ns..(qubit + 1) * self.duration_ns]
    }

    pub fn detuning_row(&self, qubit: usize) -> &[f64] {
        &self.detuning[qubit * self.duration_ns..(qubit + 1) * self.duration_ns]
    }

    /// Midpoint-rule discretization into steps of `dt_ns`.
    ///
    /// Step `n` uses `(x[⌊m⌋] + x[⌈m⌉]) / 2` with `m = (n + ½)·dt`, the upper index
    /// clamped to the last sample.
    pub fn discretize(&self, dt_ns: usize) -> Result<DiscretizedSequence> {
        if dt_ns == 0 {
            return Err(Error::config("dt must be at least 1 ns"));
        }
        let t = self.duration_ns;
        if !t.is_multiple_of(dt_ns) {
            return Err(Error::config(format!(
                "dt = {dt_ns} ns does not divide the sequence duration {t} ns"
            )));
        }
        let steps = (0..t / dt_ns)
            .map(|n| {
                let (lo, hi) = midpoint_indices(n, dt_ns, t);
                let avg = |row: &[f64]| 0.5 * (row[lo] + row[hi]);
                StepParams {
                    rabi: (0..self.qubit_count).map(|q| avg(self.rabi_row(q))).collect(),
                    detuning: (0..self.qubit_count)
                        .map(|q| avg(self.detuning_row(q)))
                        .collect(),
                }
            })
            .collect();
        Ok(DiscretizedSequence {
            qubit_count: self.qubit_count,
            dt_ns,
            steps,
        })
    }
}

/// `(⌊m⌋, min(⌈m⌉, T−1))` for `m = (n + ½)·dt`, in exact integer arithmetic.
fn midpoint_indices(step: usize, dt: usize, duration: usize) -> (usize, usize) {
    let twice_m = (2 * step + 1) * dt;
    let lo = twice_m / 2;
    let hi = twice_m.div_ceil(2);
    (lo.min(duration - 1), hi.min(duration - 1))
}

/// Parameters of one piecewise-constant slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub rabi: Vec<f64>,
    pub detuning: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedSequence {
    qubit_count: usize,
    dt_ns: usize,
    steps: Vec<StepParams>,
}

impl DiscretizedSequence {
    /// Build directly from per-step parameters (useful for synthetic tests).
    pub fn from_steps(qubit_count: usize, dt_ns: usize, steps: Vec<StepParams>) -> Result<Self> {
        if dt_ns == 0 {
            return Err(Error::config("dt must be at least 1 ns"));
        }
        for s in &steps {
            for len in [s.rabi.len(), s.detuning.len()] {
                if len != qubit_count {
                    return Err(Error::Dimension {
                        expected: qubit_count,
                        actual: len,
                    });
                }
            }
        }
        Ok(Self {
            qubit_count,
            dt_ns,
            steps,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dt_ns(&self) -> usize {
        self.dt_ns
    }

    pub fn steps(&self) -> &[StepParams] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn duration_ns(&self) -> usize {
        self.dt_ns * self.steps.len()
    }
}
