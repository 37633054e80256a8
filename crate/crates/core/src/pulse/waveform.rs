use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::spline::NaturalSpline;
use super::NS_TO_US;
use crate::error::{Error, Result};

/// A control-envelope segment. Values are in rad/µs, durations in ns.
///
/// In sequence files each segment is an object tagged by `kind`:
///
/// ```json
/// {"kind": "ramp", "duration_ns": 100, "start": 0.0, "stop": 6.0}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Waveform {
    Constant {
        duration_ns: usize,
        value: f64,
    },
    /// Linear from `start` at the first sample to `stop` at the last sample.
    Ramp {
        duration_ns: usize,
        start: f64,
        stop: f64,
    },
    /// Blackman window scaled so that the pulse area `∫ Ω dt` equals `area` (rad).
    Blackman {
        duration_ns: usize,
        area: f64,
    },
    /// Natural cubic spline through `(time_ns, value)` points spanning `[0, duration_ns]`.
    #[serde(rename = "spline")]
    InterpolatedSpline {
        duration_ns: usize,
        points: Vec<[f64; 2]>,
    },
}

impl Waveform {
    pub fn constant(duration_ns: usize, value: f64) -> Self {
        Waveform::Constant { duration_ns, value }
    }

    pub fn ramp(duration_ns: usize, start: f64, stop: f64) -> Self {
        Waveform::Ramp {
            duration_ns,
            start,
            stop,
        }
    }

    pub fn blackman(duration_ns: usize, area: f64) -> Self {
        Waveform::Blackman { duration_ns, area }
    }

    pub fn spline(duration_ns: usize, points: Vec<[f64; 2]>) -> Self {
        Waveform::InterpolatedSpline {
            duration_ns,
            points,
        }
    }

    pub fn duration(&self) -> usize {
        match *self {
            Waveform::Constant { duration_ns, .. }
            | Waveform::Ramp { duration_ns, .. }
            | Waveform::Blackman { duration_ns, .. }
            | Waveform::InterpolatedSpline { duration_ns, .. } => duration_ns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let duration = self.duration();
        if duration < 1 {
            return Err(Error::validation("waveform duration must be at least 1 ns"));
        }
        match self {
            Waveform::Constant { value, .. } => finite(&[*value]),
            Waveform::Ramp { start, stop, .. } => finite(&[*start, *stop]),
            Waveform::Blackman { area, .. } => {
                finite(&[*area])?;
                if duration < 3 {
                    return Err(Error::validation(
                        "blackman waveform needs at least 3 ns (the window vanishes at both edges)",
                    ));
                }
                Ok(())
            }
            Waveform::InterpolatedSpline { points, .. } => {
                NaturalSpline::new(points)?;
                let (first, last) = (points[0][0], points[points.len() - 1][0]);
                if first != 0.0 || last != duration as f64 {
                    return Err(Error::validation(format!(
                        "spline points must span [0, {duration}] ns, got [{first}, {last}]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// One value per nanosecond, `t_n = n ns` for `n = 0..duration`.
    pub fn sample(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let t = self.duration();
        let samples = match self {
            Waveform::Constant { value, .. } => vec![*value; t],
            Waveform::Ramp { start, stop, .. } => {
                if t == 1 {
                    vec![*start]
                } else {
                    let slope = (stop - start) / (t - 1) as f64;
                    (0..t).map(|n| start + slope * n as f64).collect()
                }
            }
            Waveform::Blackman { area, .. } => {
                let window = blackman_window(t);
                let total: f64 = window.iter().sum::<f64>() * NS_TO_US;
                window.into_iter().map(|w| w * area / total).collect()
            }
            Waveform::InterpolatedSpline { points, .. } => {
                let spline = NaturalSpline::new(points)?;
                (0..t).map(|n| spline.eval(n as f64)).collect()
            }
        };
        Ok(samples)
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation("waveform parameters must be finite"))
    }
}

/// Classic three-term Blackman window (a0 = 0.42, a1 = 0.5, a2 = 0.08) over `len` samples.
pub fn blackman_window(len: usize) -> Vec<f64> {
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let x = 2.0 * PI * n as f64 / denom;
            let w = 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos();
            // exact zeros at the edges instead of ~1e-17 roundoff
            if n == 0 || n == len - 1 {
                0.0
            } else {
                w
            }
        })
        .collect()
}
