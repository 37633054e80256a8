//! Exact MPO of the Rydberg Hamiltonian.
//!
//! Finite-state-machine construction in site order. The bond after `b` sites
//! carries `b + 2` channels: "nothing placed yet", one "n̂ emitted at site j,
//! waiting for its partner" channel per site `j < b`, and "done". Site `t`
//! closes every pending channel `j` with `U_{jt} n̂_t`. The result is then
//! SVD-compressed to numerical rank.

use nalgebra::DMatrix;
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64 as C64;

use super::state::check_permutation;
use super::tensor::{from_nalgebra, tensordot, to_nalgebra, Tensor};
use crate::error::{Error, Result};
use crate::hamiltonian::InteractionMatrix;

/// Relative singular-value cutoff for MPO compression.
pub const MPO_COMPRESSION_TOLERANCE: f64 = 1e-12;

/// Operator tensors with shape `(left, out, in, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProductOperator {
    pub(crate) tensors: Vec<Tensor>,
}

impl MatrixProductOperator {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Dense matrix in site order (site 0 most significant). Test helper.
    pub fn to_dense_site_order(&self) -> DMatrix<C64> {
        let mut acc = self.tensors[0].clone(); // (1, o, i, w)
        let mut dim = 2usize;
        for w in &self.tensors[1..] {
            // acc (1, O, I, a) · w (a, o, i, b) → (1, O, I, o, i, b)
            let t = tensordot(&acc, w, &[3], &[0]);
            let b = t.shape()[5];
            let t = super::tensor::permute(&t, &[0, 1, 3, 2, 4, 5]);
            dim *= 2;
            acc = super::tensor::reshape(t, &[1, dim, dim, b]);
        }
        to_nalgebra(&acc, dim, dim)
    }

    /// Dense matrix in the state-vector convention (qubit 0 least significant).
    pub fn to_dense(&self, ordering: &[usize]) -> DMatrix<C64> {
        let site = self.to_dense_site_order();
        let n = self.len();
        let dim = 1usize << n;
        let to_site = |b: usize| {
            ordering.iter().fold(0usize, |idx, &q| (idx << 1) | ((b >> q) & 1))
        };
        DMatrix::from_fn(dim, dim, |r, c| site[(to_site(r), to_site(c))])
    }
}

fn op(kind: LocalOp, rabi: f64, detuning: f64) -> [[f64; 2]; 2] {
    match kind {
        LocalOp::Identity => [[1.0, 0.0], [0.0, 1.0]],
        LocalOp::Number => [[0.0, 0.0], [0.0, 1.0]],
        LocalOp::Local => [[0.0, 0.5 * rabi], [0.5 * rabi, -detuning]],
    }
}

#[derive(Clone, Copy)]
enum LocalOp {
    Identity,
    Number,
    Local,
}

/// Uncompressed finite-state-machine MPO; `ordering[s]` is the qubit on site `s`.
pub fn mpo_fsm(rabi: &[f64], detuning: &[f64], u: &InteractionMatrix, ordering: &[usize]) -> Result<MatrixProductOperator> {
    let n = rabi.len();
    if detuning.len() != n || u.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: if detuning.len() != n { detuning.len() } else { u.len() },
        });
    }
    check_permutation(ordering, n)?;
    let mut tensors = Vec::with_capacity(n);
    for s in 0..n {
        let q = ordering[s];
        let (om, de) = (rabi[q], detuning[q]);
        // left channels: 0 = idle, 1..=s pending from site j = ch-1, s+1 = done
        let left_full = s + 2;
        let right_full = s + 3;
        let mut w = ArrayD::<C64>::zeros(IxDyn(&[left_full, 2, 2, right_full]));
        let mut put = |l: usize, r: usize, kind: LocalOp, scale: f64| {
            let m = op(kind, om, de);
            for o in 0..2 {
                for i in 0..2 {
                    w[[l, o, i, r]] += C64::new(scale * m[o][i], 0.0);
                }
            }
        };
        let (idle_l, done_l) = (0, s + 1);
        let (idle_r, done_r) = (0, s + 2);
        put(idle_l, idle_r, LocalOp::Identity, 1.0);
        put(idle_l, s + 1, LocalOp::Number, 1.0);
        put(idle_l, done_r, LocalOp::Local, 1.0);
        for j in 0..s {
            put(1 + j, 1 + j, LocalOp::Identity, 1.0);
            put(1 + j, done_r, LocalOp::Number, u.get(ordering[j], q));
        }
        put(done_l, done_r, LocalOp::Identity, 1.0);

        // boundaries: start in "idle", end in "done"
        let w = if s == 0 { w.slice_axis(ndarray::Axis(0), (idle_l..idle_l + 1).into()).to_owned() } else { w };
        let w = if s == n - 1 { w.slice_axis(ndarray::Axis(3), (done_r..done_r + 1).into()).to_owned() } else { w };
        tensors.push(w);
    }
    Ok(MatrixProductOperator { tensors })
}

/// Exact MPO of one Hamiltonian slice, compressed to numerical rank.
pub fn mpo_from_slice(rabi: &[f64], detuning: &[f64], u: &InteractionMatrix, ordering: &[usize]) -> Result<MatrixProductOperator> {
    let mut mpo = mpo_fsm(rabi, detuning, u, ordering)?;
    compress(&mut mpo, MPO_COMPRESSION_TOLERANCE);
    Ok(mpo)
}

/// Left-to-right then right-to-left SVD sweeps dropping singular values below
/// `tol` times the largest at each cut.
pub fn compress(mpo: &mut MatrixProductOperator, tol: f64) {
    let n = mpo.len();
    for s in 0..n.saturating_sub(1) {
        let sh = mpo.tensors[s].shape().to_vec();
        let m = to_nalgebra(&mpo.tensors[s], sh[0] * 4, sh[3]);
        let (u, carry) = rank_revealing(m, tol, false);
        let k = u.ncols();
        mpo.tensors[s] = from_nalgebra(&u, &[sh[0], 2, 2, k]);
        let carry = from_nalgebra(&carry, &[k, sh[3]]);
        mpo.tensors[s + 1] = tensordot(&carry, &mpo.tensors[s + 1], &[1], &[0]);
    }
    for s in (1..n).rev() {
        let sh = mpo.tensors[s].shape().to_vec();
        let m = to_nalgebra(&mpo.tensors[s], sh[0], 4 * sh[3]);
        let (vh, carry) = rank_revealing(m, tol, true);
        let k = vh.nrows();
        mpo.tensors[s] = from_nalgebra(&vh, &[k, 2, 2, sh[3]]);
        let carry = from_nalgebra(&carry, &[sh[0], k]);
        mpo.tensors[s - 1] = tensordot(&mpo.tensors[s - 1], &carry, &[3], &[0]);
    }
}

/// `m ≈ U (S Vh)` (or `(U S) Vh` when `right`), keeping singular values above
/// `tol · s_max`. Returns the isometry and the carried factor.
fn rank_revealing(m: DMatrix<C64>, tol: f64, right: bool) -> (DMatrix<C64>, DMatrix<C64>) {
    let (u, s, vh) = super::tensor::svd(&m);
    let smax = s.first().copied().unwrap_or(0.0);
    let keep = s.iter().filter(|&&x| x > tol * smax).count().max(1);
    let u = u.columns(0, keep).into_owned();
    let vh = vh.rows(0, keep).into_owned();
    if right {
        let mut us = u;
        for j in 0..keep {
            us.column_mut(j).scale_mut(s[j]);
        }
        (vh, us)
    } else {
        let mut svh = vh;
        for i in 0..keep {
            svh.row_mut(i).scale_mut(s[i]);
        }
        (u, svh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HamiltonianSlice, Register};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<f64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, &y)| (x - C64::new(y, 0.0)).norm()).fold(0.0, f64::max)
    }

    fn random_instance(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<f64>, InteractionMatrix) {
        let rabi = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let det = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let pts: Vec<[f64; 2]> = (0..n).map(|i| [(i % 3) as f64 * 6.0, (i / 3) as f64 * 6.0 + rng.gen_range(0.0..1.0)]).collect();
        let u = Register::from_points(&pts, 5.42e6).unwrap().interaction_matrix().unwrap();
        (rabi, det, u)
    }

    #[test]
    fn single_site() {
        let u = InteractionMatrix::zeros(1);
        let mpo = mpo_from_slice(&[2.0], &[3.0], &u, &[0]).unwrap();
        let d = mpo.to_dense(&[0]);
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, -3.0]);
        assert!(max_diff(&d, &expect) < 1e-14);
    }

    #[test]
    fn uncompressed_bond_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (r, d, u) = random_instance(&mut rng, 6);
        let mpo = mpo_fsm(&r, &d, &u, &(0..6).collect::<Vec<_>>()).unwrap();
        assert_eq!(mpo.bond_dims(), vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn matches_dense_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 2..=8 {
            let (r, d, u) = random_instance(&mut rng, n);
            let dense = HamiltonianSlice::new(&r, &d, &u).unwrap().build_dense().unwrap();
            let scale = dense.abs().max();
            let identity: Vec<usize> = (0..n).collect();
            let mut shuffled = identity.clone();
            shuffled.reverse();
            shuffled.swap(0, n / 2);
            for order in [identity, shuffled] {
                let fsm = mpo_fsm(&r, &d, &u, &order).unwrap();
                assert!(max_diff(&fsm.to_dense(&order), &dense) < 1e-12 * scale.max(1.0), "n={n}");
                let mpo = mpo_from_slice(&r, &d, &u, &order).unwrap();
                assert!(max_diff(&mpo.to_dense(&order), &dense) < 1e-12 * scale.max(1.0), "n={n}");
            }
        }
    }

    #[test]
    fn two_sites_dense_oracle() {
        let u = InteractionMatrix::from_dense(2, vec![0.0, 40.0, 40.0, 0.0]).unwrap();
        let mpo = mpo_from_slice(&[1.0, 2.0], &[0.5, -0.5], &u, &[0, 1]).unwrap();
        let dense = HamiltonianSlice::new(&[1.0, 2.0], &[0.5, -0.5], &u).unwrap().build_dense().unwrap();
        assert!(max_diff(&mpo.to_dense(&[0, 1]), &dense) < 1e-12);
        let swapped = mpo_from_slice(&[1.0, 2.0], &[0.5, -0.5], &u, &[1, 0]).unwrap();
        assert!(max_diff(&swapped.to_dense(&[1, 0]), &dense) < 1e-12);
    }

    #[test]
    fn no_interactions_compress_to_two() {
        for n in 2..=9 {
            let rabi: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
            let det: Vec<f64> = (0..n).map(|i| 0.5 - i as f64).collect();
            let mpo = mpo_from_slice(&rabi, &det, &InteractionMatrix::zeros(n), &(0..n).collect::<Vec<_>>()).unwrap();
            assert!(mpo.bond_dims().iter().all(|&b| b == 2), "{:?}", mpo.bond_dims());
        }
    }

    #[test]
    fn invalid_ordering() {
        let u = InteractionMatrix::zeros(3);
        assert!(mpo_from_slice(&[0.0; 3], &[0.0; 3], &u, &[0, 1, 1]).is_err());
    }
}
