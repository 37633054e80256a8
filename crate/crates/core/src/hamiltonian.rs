//! The Rydberg Hamiltonian
//!
//! ```text
//! H = Σ_i (Ω_i/2) σˣ_i − Σ_i δ_i n̂_i + Σ_{i<j} C/|r_ij|⁶ n̂_i n̂_j
//! ```
//!
//! stored the way the state-vector backend consumes it: the Rabi amplitudes plus
//! the full diagonal. Basis index bit `i` is the state of qubit `i` (qubit 0 is the
//! least significant bit) everywhere in this crate.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register for which [`HamiltonianSlice::build_dense`] will allocate.
pub const DENSE_QUBIT_LIMIT: usize = 14;

/// Atom positions in µm and the van der Waals coefficient `C` in rad·µm⁶/µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Register {
    pub positions_um: Vec<Vec<f64>>,
    #[serde(rename = "interaction_C")]
    pub interaction_c: f64,
}

impl Register {
    pub fn new(positions_um: Vec<Vec<f64>>, interaction_c: f64) -> Result<Self> {
        let reg = Self {
            positions_um,
            interaction_c,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn from_points<const D: usize>(points: &[[f64; D]], interaction_c: f64) -> Result<Self> {
        Self::new(points.iter().map(|p| p.to_vec()).collect(), interaction_c)
    }

    pub fn len(&self) -> usize {
        self.positions_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_um.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions_um.is_empty() {
            return Err(Error::validation("register needs at least one atom"));
        }
        if !self.interaction_c.is_finite() || self.interaction_c < 0.0 {
            return Err(Error::validation("interaction_C must be finite and non-negative"));
        }
        for (i, p) in self.positions_um.iter().enumerate() {
            if !(p.len() == 2 || p.len() == 3) || p.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!(
                    "atom {i}: position must be 2 or 3 finite coordinates"
                )));
            }
        }
        for i in 0..self.len() {
            for j in 0..i {
                if self.distance(i, j) == 0.0 {
                    return Err(Error::validation(format!("atoms {j} and {i} coincide")));
                }
            }
        }
        Ok(())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.positions_um[i], &self.positions_um[j]);
        (0..3)
            .map(|k| a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0))
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }

    pub fn interaction_matrix(&self) -> Result<InteractionMatrix> {
        self.validate()?;
        let n = self.len();
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = self.interaction_c / self.distance(i, j).powi(6);
                u[i * n + j] = v;
                u[j * n + i] = v;
            }
        }
        Ok(InteractionMatrix { n, data: u })
    }
}

/// Symmetric pair couplings `U_ij = C/r_ij⁶` (rad/µs), zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl InteractionMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// From a full row-major matrix; must be symmetric with zero diagonal.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                actual: data.len(),
            });
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::validation("interaction matrix diagonal must be zero"));
            }
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::validation("interaction matrix must be symmetric"));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_coupling(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Relabel: entry `(a, b)` of the result is `U[order[a], order[b]]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                data[a * n + b] = self.get(order[a], order[b]);
            }
        }
        Self { n, data }
    }
}

/// Diagonal of H: `d[b] = −Σ_i δ_i bit_i(b) + Σ_{i<j} U_ij bit_i(b) bit_j(b)`.
pub fn build_diagonal(detuning: &[f64], u: &InteractionMatrix) -> Result<Vec<f64>> {
    let n = detuning.len();
    if u.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: u.len(),
        });
    }
    let dim = 1usize << n;
    let mut d = vec![0.0; dim];
    // d restricted to the lower `i` bits is already final when bit `i` is added.
    for i in 0..n {
        let half = 1usize << i;
        let (lower, upper) = d.split_at_mut(half);
        let upper = &mut upper[..half];
        for (b, (lo, hi)) in lower.iter().zip(upper.iter_mut()).enumerate() {
            let mut field = -detuning[i];
            let mut rest = b;
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                field += u.get(i, j);
                rest &= rest - 1;
            }
            *hi = lo + field;
        }
    }
    Ok(d)
}

/// How the structured matvec distributes work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    #[default]
    Sequential,
    /// Split the output into blocks processed by the current rayon pool. Every
    /// output element is accumulated in the same order as in sequential mode,
    /// so results are bit-identical.
    Rayon,
}

const BLOCK_BITS: usize = 12;

/// One piecewise-constant Hamiltonian `H_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSlice {
    n: usize,
    rabi: Vec<f64>,
    diagonal: Vec<f64>,
}

impl HamiltonianSlice {
    pub fn new(rabi: &[f64], detuning: &[f64], u: &InteractionMatrix) -> Result<Self> {
        if rabi.len() != detuning.len() {
            return Err(Error::Dimension {
                expected: detuning.len(),
                actual: rabi.len(),
            });
        }
        Ok(Self {
            n: rabi.len(),
            rabi: rabi.to_vec(),
            diagonal: build_diagonal(detuning, u)?,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn rabi(&self) -> &[f64] {
        &self.rabi
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `out = H ψ` without materializing H: the diagonal, then one strided
    /// subvector swap per σˣ term.
    pub fn apply_into(&self, psi: &[C64], out: &mut [C64], par: Parallelism) -> Result<()> {
        let dim = self.dim();
        for len in [psi.len(), out.len()] {
            if len != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: len,
                });
            }
        }
        let block_bits = BLOCK_BITS.min(self.n);
        let block = 1usize << block_bits;
        let work = |(k, out_blk): (usize, &mut [C64])| self.apply_block(psi, out_blk, k * block, block_bits);
        match par {
            Parallelism::Sequential => out.chunks_mut(block).enumerate().for_each(work),
            Parallelism::Rayon => out.par_chunks_mut(block).enumerate().for_each(work),
        }
        Ok(())
    }

    fn apply_block(&self, psi: &[C64], out: &mut [C64], start: usize, block_bits: usize) {
        let block = out.len();
        let psi_blk = &psi[start..start + block];
        for ((o, &p), &d) in out.iter_mut().zip(psi_blk).zip(&self.diagonal[start..start + block]) {
            *o = p * d;
        }
        for (i, &omega) in self.rabi.iter().enumerate() {
            if omega == 0.0 {
                continue;
            }
            let c = 0.5 * omega;
            if i < block_bits {
                let half = 1usize << i;
                for (o, p) in out.chunks_mut(2 * half).zip(psi_blk.chunks(2 * half)) {
                    let (o_lo, o_hi) = o.split_at_mut(half);
                    let (p_lo, p_hi) = p.split_at(half);
                    for (x, &y) in o_lo.iter_mut().zip(p_hi) {
                        *x += y * c;
                    }
                    for (x, &y) in o_hi.iter_mut().zip(p_lo) {
                        *x += y * c;
                    }
                }
            } else {
                let partner = start ^ (1usize << i);
                for (x, &y) in out.iter_mut().zip(&psi[partner..partner + block]) {
                    *x += y * c;
                }
            }
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = vec![C64::new(0.0, 0.0); psi.amplitudes().len()];
        self.apply_into(psi.amplitudes(), &mut out, Parallelism::Sequential)?;
        Ok(StateVector {
            n: psi.n,
            amps: out,
        })
    }

    /// Dense real-symmetric matrix of this slice, for testing and the exact
    /// reference backend. Refuses registers above [`DENSE_QUBIT_LIMIT`].
    pub fn build_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_QUBIT_LIMIT {
            return Err(Error::Refused {
                what: format!("a dense {0}-qubit Hamiltonian (2^{0} x 2^{0})", self.n),
                reason: format!("dense construction is limited to {DENSE_QUBIT_LIMIT} qubits"),
            });
        }
        let dim = self.dim();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for b in 0..dim {
            h[(b, b)] = self.diagonal[b];
            for (i, &omega) in self.rabi.iter().enumerate() {
                h[(b ^ (1 << i), b)] += 0.5 * omega;
            }
        }
        Ok(h)
    }
}

/// Dense amplitudes `c_b`, `b` a basis index with qubit 0 in the lowest bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                actual: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    /// Basis state `|b⟩`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Self { n, amps }
    }

    /// Product state from per-qubit bits (`bits[i]` is qubit `i`).
    pub fn from_bits(bits: &[bool]) -> Self {
        let index = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0usize, |acc, (i, _)| acc | (1 << i));
        Self::basis(bits.len(), index)
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn normalize(&mut self) {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= nrm);
        }
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_slice(rng: &mut impl Rng, n: usize) -> HamiltonianSlice {
        let rabi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let det: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = rng.gen_range(0.0..50.0);
                u[i * n + j] = v;
                u[j * n + i] = v;
            }
        }
        let u = InteractionMatrix::from_dense(n, u).unwrap();
        HamiltonianSlice::new(&rabi, &det, &u).unwrap()
    }

    fn random_state(rng: &mut impl Rng, n: usize) -> StateVector {
        let amps = (0..1 << n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut s = StateVector::from_amplitudes(n, amps).unwrap();
        s.normalize();
        s
    }

    /// H assembled term by term from Kronecker products.
    fn kron_hamiltonian(rabi: &[f64], det: &[f64], u: &InteractionMatrix) -> DMatrix<f64> {
        let n = rabi.len();
        let id = DMatrix::<f64>::identity(2, 2);
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let nn = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        // qubit 0 is the least significant bit: it is the rightmost Kronecker factor
        let embed = |ops: &[(usize, &DMatrix<f64>)]| {
            let mut m = DMatrix::<f64>::identity(1, 1);
            for q in (0..n).rev() {
                let op = ops.iter().find(|(k, _)| *k == q).map(|(_, o)| *o).unwrap_or(&id);
                m = m.kronecker(op);
            }
            m
        };
        let dim = 1 << n;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            h += embed(&[(i, &sx)]) * (rabi[i] / 2.0);
            h -= embed(&[(i, &nn)]) * det[i];
            for j in 0..i {
                h += embed(&[(i, &nn), (j, &nn)]) * u.get(i, j);
            }
        }
        h
    }

    #[test]
    fn interaction_matrix_examples() {
        let reg = Register::from_points(&[[0.0, 0.0], [5.0, 0.0], [10.0, 0.0]], 5e6).unwrap();
        let u = reg.interaction_matrix().unwrap();
        assert!((u.get(0, 1) - 320.0).abs() < 1e-12);
        assert!((u.get(1, 2) - 320.0).abs() < 1e-12);
        assert!((u.get(0, 2) - 5.0).abs() < 1e-12);
        assert_eq!(u.get(0, 1), u.get(1, 0));
        assert_eq!(u.get(1, 1), 0.0);

        let single = Register::from_points(&[[1.0, 2.0, 3.0]], 1.0).unwrap();
        let u = single.interaction_matrix().unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u.get(0, 0), 0.0);
    }

    #[test]
    fn two_atom_coupling_is_c_over_r6() {
        let r: f64 = 6.5;
        let reg = Register::from_points(&[[0.0, 0.0, 0.0], [0.0, r, 0.0]], 862690.0).unwrap();
        let u = reg.interaction_matrix().unwrap();
        assert!((u.get(0, 1) - 862690.0 / r.powi(6)).abs() < 1e-12);
    }

    #[test]
    fn register_validation() {
        assert!(Register::from_points(&[[0.0, 0.0], [0.0, 0.0]], 1.0).is_err());
        assert!(Register::new(vec![], 1.0).is_err());
        assert!(Register::new(vec![vec![1.0]], 1.0).is_err());
    }

    #[test]
    fn diagonal_examples() {
        let d = build_diagonal(&[1.5], &InteractionMatrix::zeros(1)).unwrap();
        assert_eq!(d, vec![0.0, -1.5]);

        let u = InteractionMatrix::from_dense(2, vec![0.0, 7.0, 7.0, 0.0]).unwrap();
        let d = build_diagonal(&[1.0, 2.0], &u).unwrap();
        assert_eq!(d, vec![0.0, -1.0, -2.0, -3.0 + 7.0]);
        assert_eq!(d[3] - d[1] - d[2], 7.0);

        let d = build_diagonal(&[0.0; 3], &InteractionMatrix::zeros(3)).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_qubit_actions() {
        let u = InteractionMatrix::zeros(1);
        let h = HamiltonianSlice::new(&[3.0], &[0.0], &u).unwrap();
        let out = h.apply(&StateVector::basis(1, 0)).unwrap();
        assert_eq!(out.amplitudes(), &[c(0.0), c(1.5)]);

        let h = HamiltonianSlice::new(&[0.0], &[2.0], &u).unwrap();
        let out = h.apply(&StateVector::basis(1, 1)).unwrap();
        assert_eq!(out.amplitudes(), &[c(0.0), c(-2.0)]);
    }

    #[test]
    fn dense_single_qubit_and_guard() {
        let h = HamiltonianSlice::new(&[3.0], &[2.0], &InteractionMatrix::zeros(1)).unwrap();
        let m = h.build_dense().unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, -2.0]));

        let n = DENSE_QUBIT_LIMIT + 1;
        let big = HamiltonianSlice {
            n,
            rabi: vec![0.0; n],
            diagonal: vec![],
        };
        assert!(matches!(big.build_dense(), Err(Error::Refused { .. })));
    }

    #[test]
    fn dense_matches_kronecker_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let rabi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
            let det: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let pts: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * 4.0, (i * i) as f64]).collect();
            let u = Register::from_points(&pts, 1e4).unwrap().interaction_matrix().unwrap();
            let h = HamiltonianSlice::new(&rabi, &det, &u).unwrap().build_dense().unwrap();
            let k = kron_hamiltonian(&rabi, &det, &u);
            assert!((&h - &k).abs().max() < 1e-12, "n = {n}");
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn structured_matvec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..120 {
            let n = 1 + trial % 10;
            let h = random_slice(&mut rng, n);
            let psi = random_state(&mut rng, n);
            let out = h.apply(&psi).unwrap();
            let dense = h.build_dense().unwrap();
            for r in 0..1 << n {
                let mut acc = C64::new(0.0, 0.0);
                for (col, a) in psi.amplitudes().iter().enumerate() {
                    acc += a * dense[(r, col)];
                }
                assert!((acc - out.amplitudes()[r]).norm() < 1e-12, "trial {trial}");
            }
        }
    }

    #[test]
    fn parallel_matvec_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 15;
        let h = random_slice(&mut rng, n);
        let psi = random_state(&mut rng, n);
        let mut a = vec![C64::new(0.0, 0.0); 1 << n];
        let mut b = a.clone();
        h.apply_into(psi.amplitudes(), &mut a, Parallelism::Sequential).unwrap();
        h.apply_into(psi.amplitudes(), &mut b, Parallelism::Rayon).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let h = HamiltonianSlice::new(&[1.0, 1.0], &[0.0, 0.0], &InteractionMatrix::zeros(2)).unwrap();
        assert!(h.apply(&StateVector::basis(1, 0)).is_err());
    }

    proptest! {
        #[test]
        fn matvec_is_linear(seed in any::<u64>(), n in 1usize..7, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_slice(&mut rng, n);
            let x = random_state(&mut rng, n);
            let y = random_state(&mut rng, n);
            let (alpha, beta) = (C64::new(a, 0.3), C64::new(-0.5, b));
            let combo: Vec<C64> = x.amplitudes().iter().zip(y.amplitudes())
                .map(|(p, q)| alpha * p + beta * q).collect();
            let lhs = h.apply(&StateVector::from_amplitudes(n, combo).unwrap()).unwrap();
            let hx = h.apply(&x).unwrap();
            let hy = h.apply(&y).unwrap();
            for ((l, p), q) in lhs.amplitudes().iter().zip(hx.amplitudes()).zip(hy.amplitudes()) {
                prop_assert!((l - (alpha * p + beta * q)).norm() < 1e-12 * (1.0 + l.norm()) * 10.0);
            }
        }

        #[test]
        fn expectation_is_real(seed in any::<u64>(), n in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_slice(&mut rng, n);
            let psi = random_state(&mut rng, n);
            let e = psi.inner(&h.apply(&psi).unwrap());
            prop_assert!(e.im.abs() < 1e-12 * (1.0 + e.re.abs()));
        }
    }
}
