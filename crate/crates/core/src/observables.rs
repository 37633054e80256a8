//! Measurements that work on either state representation. All qubit indices
//! are original labels, whatever site ordering an MPS uses internally.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::StateVector;
use crate::mps::MatrixProductState;

/// Largest register that `norm_difference` compares through dense vectors.
pub const DENSE_COMPARISON_LIMIT: usize = 20;

/// Shots drawn from one random stream.
pub const SAMPLING_BATCH: usize = 1024;

const NUMBER: [f64; 2] = [0.0, 1.0];

#[derive(Debug, Clone, Copy)]
pub enum QuantumStateView<'a> {
    Dense(&'a StateVector),
    Mps(&'a MatrixProductState),
}

impl<'a> From<&'a StateVector> for QuantumStateView<'a> {
    fn from(s: &'a StateVector) -> Self {
        QuantumStateView::Dense(s)
    }
}

impl<'a> From<&'a MatrixProductState> for QuantumStateView<'a> {
    fn from(s: &'a MatrixProductState) -> Self {
        QuantumStateView::Mps(s)
    }
}

impl QuantumStateView<'_> {
    pub fn qubit_count(&self) -> usize {
        match self {
            QuantumStateView::Dense(s) => s.qubit_count(),
            QuantumStateView::Mps(m) => m.len(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            QuantumStateView::Dense(s) => s.norm(),
            QuantumStateView::Mps(m) => m.norm(),
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        let n = self.qubit_count();
        if q >= n {
            return Err(Error::validation(format!("qubit {q} out of range for {n} qubits")));
        }
        Ok(())
    }

    /// `⟨Π O_q⟩ / ⟨ψ|ψ⟩` for diagonal single-qubit operators.
    fn expect_diagonal(&self, ops: &[(usize, [f64; 2])]) -> f64 {
        match self {
            QuantumStateView::Dense(s) => {
                let amps = s.amplitudes();
                let mut num = 0.0;
                for (b, a) in amps.iter().enumerate() {
                    let w: f64 = ops.iter().map(|&(q, d)| d[(b >> q) & 1]).product();
                    num += w * a.norm_sqr();
                }
                num / (s.norm() * s.norm())
            }
            QuantumStateView::Mps(m) => m.expect_diagonal(ops),
        }
    }

    pub fn to_dense(&self) -> Result<StateVector> {
        match self {
            QuantumStateView::Dense(s) => Ok((*s).clone()),
            QuantumStateView::Mps(m) => m.to_dense(),
        }
    }
}

/// `⟨n̂_i⟩`.
pub fn occupation(state: QuantumStateView<'_>, i: usize) -> Result<f64> {
    state.check_qubit(i)?;
    Ok(state.expect_diagonal(&[(i, NUMBER)]))
}

/// `⟨n̂_i n̂_j⟩` for `i ≠ j`.
pub fn correlation(state: QuantumStateView<'_>, i: usize, j: usize) -> Result<f64> {
    state.check_qubit(i)?;
    state.check_qubit(j)?;
    if i == j {
        return Err(Error::validation(format!("correlation needs two distinct qubits, got {i} twice; use occupation")));
    }
    Ok(state.expect_diagonal(&[(i, NUMBER), (j, NUMBER)]))
}

fn check_sizes(a: &QuantumStateView<'_>, b: &QuantumStateView<'_>) -> Result<()> {
    if a.qubit_count() != b.qubit_count() {
        return Err(Error::Dimension {
            expected: a.qubit_count(),
            actual: b.qubit_count(),
        });
    }
    Ok(())
}

/// `⟨a|b⟩`.
pub fn overlap(a: QuantumStateView<'_>, b: QuantumStateView<'_>) -> Result<C64> {
    check_sizes(&a, &b)?;
    match (a, b) {
        (QuantumStateView::Dense(x), QuantumStateView::Dense(y)) => Ok(x.inner(y)),
        (QuantumStateView::Mps(m), QuantumStateView::Dense(y)) => m.overlap_dense(y),
        (QuantumStateView::Dense(x), QuantumStateView::Mps(m)) => Ok(m.overlap_dense(x)?.conj()),
        (QuantumStateView::Mps(x), QuantumStateView::Mps(y)) => {
            if x.ordering() == y.ordering() {
                x.overlap(y)
            } else {
                let y = y.to_dense()?;
                x.overlap_dense(&y)
            }
        }
    }
}

/// `‖a − b‖₂`, global phase included. Dense up to 20 qubits, otherwise through
/// `‖a‖² + ‖b‖² − 2 Re⟨a|b⟩`.
pub fn norm_difference(a: QuantumStateView<'_>, b: QuantumStateView<'_>) -> Result<f64> {
    check_sizes(&a, &b)?;
    if a.qubit_count() <= DENSE_COMPARISON_LIMIT {
        let (x, y) = (a.to_dense()?, b.to_dense()?);
        let sq: f64 = x.amplitudes().iter().zip(y.amplitudes()).map(|(p, q)| (p - q).norm_sqr()).sum();
        return Ok(sq.sqrt());
    }
    let (na, nb) = (a.norm(), b.norm());
    let cross = overlap(a, b)?.re;
    Ok((na * na + nb * nb - 2.0 * cross).max(0.0).sqrt())
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: QuantumStateView<'_>, b: QuantumStateView<'_>) -> Result<f64> {
    Ok(overlap(a, b)?.norm_sqr())
}

/// Random stream for shot batch `batch` under `seed`.
fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// `shots` measurement outcomes in the computational basis; bit `q` of each
/// value is qubit `q`. Deterministic in `seed` and independent of thread count.
pub fn sample_bitstrings(state: QuantumStateView<'_>, shots: usize, seed: u64, renormalize: bool) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::validation("shots must be at least 1"));
    }
    let n = state.qubit_count();
    if n > 64 {
        return Err(Error::Refused {
            what: format!("sampling {n} qubits"),
            reason: "bitstrings are packed into 64 bits".into(),
        });
    }
    let norm = state.norm();
    if !renormalize && (norm - 1.0).abs() > 1e-6 {
        return Err(Error::validation(format!("state norm {norm} deviates from 1; pass renormalize to sample anyway")));
    }
    let batches: Vec<(usize, usize)> = (0..shots)
        .step_by(SAMPLING_BATCH)
        .enumerate()
        .map(|(b, start)| (b, SAMPLING_BATCH.min(shots - start)))
        .collect();
    match state {
        QuantumStateView::Dense(s) => {
            let mut cdf = Vec::with_capacity(s.amplitudes().len());
            let mut acc = 0.0;
            for a in s.amplitudes() {
                acc += a.norm_sqr();
                cdf.push(acc);
            }
            let total = acc;
            let out = batches
                .par_iter()
                .flat_map_iter(|&(b, count)| {
                    let mut rng = batch_rng(seed, b);
                    let cdf = &cdf;
                    (0..count).map(move |_| {
                        let u = rng.gen::<f64>() * total;
                        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                        idx as u64
                    })
                })
                .collect();
            Ok(out)
        }
        QuantumStateView::Mps(m) => {
            let mut m = m.clone();
            m.move_center(0);
            let sampler = MpsSampler::new(&m);
            let out = batches
                .par_iter()
                .flat_map_iter(|&(b, count)| {
                    let mut rng = batch_rng(seed, b);
                    let sampler = &sampler;
                    (0..count).map(move |_| sampler.draw(&mut rng))
                })
                .collect();
            Ok(out)
        }
    }
}

/// Sequential conditional sampling on a right-canonical MPS.
struct MpsSampler {
    /// `sites[k][s]` is the `(left, right)` matrix of site `k` for outcome `s`, row-major.
    sites: Vec<[Vec<C64>; 2]>,
    dims: Vec<(usize, usize)>,
    ordering: Vec<usize>,
}

impl MpsSampler {
    fn new(m: &MatrixProductState) -> Self {
        let mut sites = Vec::with_capacity(m.len());
        let mut dims = Vec::with_capacity(m.len());
        for t in m.tensors() {
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let slice = |s: usize| -> Vec<C64> {
                let mut v = Vec::with_capacity(l * r);
                for a in 0..l {
                    for b in 0..r {
                        v.push(t[[a, s, b]]);
                    }
                }
                v
            };
            sites.push([slice(0), slice(1)]);
            dims.push((l, r));
        }
        Self {
            sites,
            dims,
            ordering: m.ordering().to_vec(),
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> u64 {
        let mut v = vec![C64::new(1.0, 0.0)];
        let mut bits = 0u64;
        for (k, site) in self.sites.iter().enumerate() {
            let (l, r) = self.dims[k];
            let branch = |s: usize| -> Vec<C64> {
                let mat = &site[s];
                (0..r).map(|b| (0..l).map(|a| v[a] * mat[a * r + b]).sum()).collect()
            };
            let w0 = branch(0);
            let w1 = branch(1);
            let p0: f64 = w0.iter().map(|x| x.norm_sqr()).sum();
            let p1: f64 = w1.iter().map(|x| x.norm_sqr()).sum();
            let one = rng.gen::<f64>() * (p0 + p1) >= p0;
            let (w, p) = if one { (w1, p1) } else { (w0, p0) };
            if one {
                bits |= 1 << self.ordering[k];
            }
            let scale = 1.0 / p.sqrt();
            v = w.into_iter().map(|x| x * scale).collect();
        }
        bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// `⟨n̂_q⟩` for each listed qubit (all qubits when the list is empty).
    Occupation,
    /// `⟨n̂_i n̂_j⟩` for each pair `i < j` of listed qubits (all pairs when empty).
    Correlation,
}

impl ObservableKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableKind::Occupation => "occupation",
            ObservableKind::Correlation => "correlation",
        }
    }
}

/// One scheduled observable. `every_n_steps = 0` records the final state only;
/// otherwise steps `0, s, 2s, …` and the final step are recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(rename = "type")]
    pub kind: ObservableKind,
    #[serde(default)]
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub every_n_steps: usize,
}

impl ObservableSpec {
    pub fn is_due(&self, step: usize, total_steps: usize) -> bool {
        step == total_steps || (self.every_n_steps > 0 && step.is_multiple_of(self.every_n_steps))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n) {
            return Err(Error::validation(format!("observable {} lists qubit {q} but the register has {n}", self.kind.name())));
        }
        if self.kind == ObservableKind::Correlation && n < 2 && self.qubits.is_empty() {
            return Err(Error::validation("correlation needs at least two qubits"));
        }
        Ok(())
    }

    fn evaluate(&self, state: QuantumStateView<'_>) -> Result<Vec<(Vec<usize>, f64)>> {
        let n = state.qubit_count();
        let qubits: Vec<usize> = if self.qubits.is_empty() { (0..n).collect() } else { self.qubits.clone() };
        let mut out = Vec::new();
        match self.kind {
            ObservableKind::Occupation => {
                for &q in &qubits {
                    out.push((vec![q], occupation(state, q)?));
                }
            }
            ObservableKind::Correlation => {
                for (a, &i) in qubits.iter().enumerate() {
                    for &j in &qubits[a + 1..] {
                        out.push((vec![i, j], correlation(state, i, j)?));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub step: usize,
    pub time_ns: f64,
    pub observable: String,
    pub qubits: Vec<usize>,
    pub value: f64,
}

/// Called with the initial state (step 0) and after every propagation step.
pub trait StepObserver {
    fn observe(&mut self, step: usize, state: QuantumStateView<'_>) -> Result<()>;
}

impl<F> StepObserver for F
where
    F: FnMut(usize, QuantumStateView<'_>) -> Result<()>,
{
    fn observe(&mut self, step: usize, state: QuantumStateView<'_>) -> Result<()> {
        self(step, state)
    }
}

/// Evaluates a schedule of observables and keeps the records.
#[derive(Debug, Clone)]
pub struct ObservableRecorder {
    specs: Vec<ObservableSpec>,
    total_steps: usize,
    dt_ns: f64,
    records: Vec<ObservableRecord>,
}

impl ObservableRecorder {
    pub fn new(specs: Vec<ObservableSpec>, total_steps: usize, dt_ns: f64) -> Self {
        Self {
            specs,
            total_steps,
            dt_ns,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[ObservableRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ObservableRecord> {
        self.records
    }
}

impl StepObserver for ObservableRecorder {
    fn observe(&mut self, step: usize, state: QuantumStateView<'_>) -> Result<()> {
        for spec in &self.specs {
            if !spec.is_due(step, self.total_steps) {
                continue;
            }
            for (qubits, value) in spec.evaluate(state)? {
                self.records.push(ObservableRecord {
                    step,
                    time_ns: step as f64 * self.dt_ns,
                    observable: spec.kind.name().to_string(),
                    qubits,
                    value,
                });
            }
        }
        Ok(())
    }
}
