use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::tensor::{conj, from_nalgebra, reshape, tensordot, to_nalgebra, truncated_svd, Tensor};
use crate::error::{Error, Result};
use crate::hamiltonian::StateVector;

/// Above this size `to_dense` refuses.
pub const DENSE_EXPANSION_LIMIT: usize = 24;

/// A matrix product state over qubits.
///
/// Site tensors have shape `(left bond, 2, right bond)`. Site `s` holds qubit
/// `ordering[s]`; every public query takes and returns original qubit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProductState {
    pub(crate) tensors: Vec<Tensor>,
    pub(crate) center: usize,
    pub(crate) ordering: Vec<usize>,
    pub(crate) truncation_weight: f64,
}

impl MatrixProductState {
    /// Product basis state; `bits[q]` is the state of qubit `q`. All bonds have dimension 1.
    pub fn from_product(bits: &[bool]) -> Result<Self> {
        Self::from_product_ordered(bits, (0..bits.len()).collect())
    }

    pub fn from_product_ordered(bits: &[bool], ordering: Vec<usize>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::validation("an MPS needs at least one site"));
        }
        check_permutation(&ordering, bits.len())?;
        let tensors = ordering
            .iter()
            .map(|&q| {
                let mut t = ArrayD::zeros(IxDyn(&[1, 2, 1]));
                t[[0, usize::from(bits[q]), 0]] = C64::new(1.0, 0.0);
                t
            })
            .collect();
        Ok(Self {
            tensors,
            center: 0,
            ordering,
            truncation_weight: 0.0,
        })
    }

    /// `|0…0⟩` with the given site ordering.
    pub fn vacuum(n: usize, ordering: Vec<usize>) -> Result<Self> {
        Self::from_product_ordered(&vec![false; n], ordering)
    }

    /// Exact (up to `precision`) MPS of a dense state by successive SVDs.
    /// The result is right-canonical with the center on site 0.
    pub fn from_dense(state: &StateVector, ordering: Vec<usize>, precision: f64, max_bond: usize) -> Result<Self> {
        let n = state.qubit_count();
        check_permutation(&ordering, n)?;
        // amplitude tensor with site 0 as the most significant axis
        let dim = 1usize << n;
        let mut data = vec![C64::new(0.0, 0.0); dim];
        for (b, &amp) in state.amplitudes().iter().enumerate() {
            let mut idx = 0usize;
            for &q in &ordering {
                idx = (idx << 1) | ((b >> q) & 1);
            }
            data[idx] = amp;
        }
        // sweep right to left; `flat` is row-major (2^s, 2·right_bond)
        let mut tensors = vec![Tensor::zeros(IxDyn(&[1, 2, 1])); n];
        let mut weight = 0.0;
        let mut right_bond = 1usize;
        let mut flat = data;
        for s in (1..n).rev() {
            let rows = 1usize << s;
            let cols = 2 * right_bond;
            let m = nalgebra::DMatrix::from_row_slice(rows, cols, &flat[..rows * cols]);
            let split = truncated_svd(m, precision, max_bond);
            weight += split.discarded_weight;
            let k = split.s.len();
            tensors[s] = from_nalgebra(&split.vh, &[k, 2, right_bond]);
            let mut us = split.u;
            for (j, sv) in split.s.iter().enumerate() {
                us.column_mut(j).scale_mut(*sv);
            }
            flat = row_major(&us);
            right_bond = k;
        }
        tensors[0] = ArrayD::from_shape_vec(IxDyn(&[1, 2, right_bond]), flat[..2 * right_bond].to_vec())
            .expect("size matches");
        Ok(Self {
            tensors,
            center: 0,
            ordering,
            truncation_weight: weight,
        })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn truncation_weight(&self) -> f64 {
        self.truncation_weight
    }

    /// Bond dimensions `χ_1 … χ_{N−1}` between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Number of complex entries stored in the site tensors.
    pub fn element_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.overlap(self).map(|o| o.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    /// `⟨self|other⟩`; both must share the site ordering.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: other.len(),
            });
        }
        if self.ordering != other.ordering {
            return Err(Error::validation("MPS overlap needs identical site orderings"));
        }
        // env(a, b): bra bond a, ket bond b
        let mut env = Tensor::from_elem(IxDyn(&[1, 1]), C64::new(1.0, 0.0));
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            let t = tensordot(&env, b, &[1], &[0]); // (a, s, b')
            env = tensordot(&conj(a), &t, &[0, 1], &[0, 1]); // (a', b')
        }
        Ok(env[[0, 0]])
    }

    /// `⟨self|ψ⟩` against a dense state without expanding the MPS.
    pub fn overlap_dense(&self, state: &StateVector) -> Result<C64> {
        let n = self.len();
        if state.qubit_count() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: state.qubit_count(),
            });
        }
        // reorder ψ into site order, site 0 most significant
        let mut data = vec![C64::new(0.0, 0.0); 1 << n];
        for (b, &amp) in state.amplitudes().iter().enumerate() {
            let mut idx = 0usize;
            for &q in &self.ordering {
                idx = (idx << 1) | ((b >> q) & 1);
            }
            data[idx] = amp;
        }
        // contract site by site from the left: acc has shape (bond, remaining)
        let mut acc = ArrayD::from_shape_vec(IxDyn(&[1, 1 << n]), data).expect("size matches");
        for (s, a) in self.tensors.iter().enumerate() {
            let remaining = 1usize << (n - s - 1);
            let bond = acc.shape()[0];
            let acc3 = reshape(acc, &[bond, 2, remaining]);
            acc = tensordot(&conj(a), &acc3, &[0, 1], &[0, 1]); // (bond', remaining)
        }
        Ok(acc[[0, 0]])
    }

    /// Dense amplitudes in original qubit labels.
    pub fn to_dense(&self) -> Result<StateVector> {
        let n = self.len();
        if n > DENSE_EXPANSION_LIMIT {
            return Err(Error::Refused {
                what: format!("dense expansion of a {n}-qubit MPS"),
                reason: format!("limit is {DENSE_EXPANSION_LIMIT} qubits"),
            });
        }
        let mut acc = self.tensors[0].clone(); // (1, 2, χ)
        for t in &self.tensors[1..] {
            let merged = tensordot(&acc, t, &[acc.ndim() - 1], &[0]);
            let shape: Vec<usize> = merged.shape().to_vec();
            let lead: usize = shape[..shape.len() - 1].iter().product();
            acc = reshape(merged, &[1, lead, shape[shape.len() - 1]]);
        }
        let flat = reshape(acc, &[1 << n]);
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (idx, &a) in flat.iter().enumerate() {
            let mut b = 0usize;
            for (s, &q) in self.ordering.iter().enumerate() {
                b |= ((idx >> (n - 1 - s)) & 1) << q;
            }
            amps[b] = a;
        }
        StateVector::from_amplitudes(n, amps)
    }

    /// Move the orthogonality center with QR steps.
    pub fn move_center(&mut self, target: usize) {
        while self.center < target {
            let s = self.center;
            let (l, r) = (self.tensors[s].shape()[0], self.tensors[s].shape()[2]);
            let qr = to_nalgebra(&self.tensors[s], 2 * l, r).qr();
            let (q, rmat) = (qr.q(), qr.r());
            let k = q.ncols();
            self.tensors[s] = from_nalgebra(&q, &[l, 2, k]);
            let rt = from_nalgebra(&rmat, &[k, r]);
            self.tensors[s + 1] = tensordot(&rt, &self.tensors[s + 1], &[1], &[0]);
            self.center += 1;
        }
        while self.center > target {
            let s = self.center;
            let (l, r) = (self.tensors[s].shape()[0], self.tensors[s].shape()[2]);
            // LQ via QR of the adjoint
            let m = to_nalgebra(&self.tensors[s], l, 2 * r).adjoint();
            let qr = m.qr();
            let (q, rmat) = (qr.q(), qr.r());
            let k = q.ncols();
            self.tensors[s] = from_nalgebra(&q.adjoint(), &[k, 2, r]);
            let lt = from_nalgebra(&rmat.adjoint(), &[l, k]);
            self.tensors[s - 1] = tensordot(&self.tensors[s - 1], &lt, &[2], &[0]);
            self.center -= 1;
        }
    }

    /// Largest deviation from identity of `Σ_s A^{s†} A^s` over sites left of the
    /// center, and of `Σ_s A^s A^{s†}` right of it.
    pub fn canonical_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (s, t) in self.tensors.iter().enumerate() {
            if s == self.center {
                continue;
            }
            let gram = if s < self.center {
                tensordot(&conj(t), t, &[0, 1], &[0, 1])
            } else {
                tensordot(t, &conj(t), &[1, 2], &[1, 2])
            };
            let k = gram.shape()[0];
            for i in 0..k {
                for j in 0..k {
                    let id = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((gram[[i, j]] - C64::new(id, 0.0)).norm());
                }
            }
        }
        worst
    }

    /// `⟨Π_q O_q⟩ / ⟨ψ|ψ⟩` for diagonal single-qubit operators, given as
    /// `(qubit, [⟨0|O|0⟩, ⟨1|O|1⟩])`. Unlisted qubits carry the identity.
    pub fn expect_diagonal(&self, ops: &[(usize, [f64; 2])]) -> f64 {
        let mut site_ops = vec![[1.0, 1.0]; self.len()];
        for &(q, d) in ops {
            let s = self.ordering.iter().position(|&x| x == q).expect("qubit in range");
            site_ops[s] = [site_ops[s][0] * d[0], site_ops[s][1] * d[1]];
        }
        let mut num = Tensor::from_elem(IxDyn(&[1, 1]), C64::new(1.0, 0.0));
        let mut den = num.clone();
        for (t, d) in self.tensors.iter().zip(&site_ops) {
            let mut weighted = t.clone();
            for (mut slice, w) in weighted.axis_iter_mut(ndarray::Axis(1)).zip(d) {
                slice.mapv_inplace(|x| x * *w);
            }
            let ct = conj(t);
            num = tensordot(&ct, &tensordot(&num, &weighted, &[1], &[0]), &[0, 1], &[0, 1]);
            den = tensordot(&ct, &tensordot(&den, t, &[1], &[0]), &[0, 1], &[0, 1]);
        }
        num[[0, 0]].re / den[[0, 0]].re
    }

    #[cfg(test)]
    pub(crate) fn squared_norm_of_center(&self) -> f64 {
        super::tensor::frobenius_sq(&self.tensors[self.center])
    }

    /// Serializable snapshot.
    pub fn to_data(&self) -> MpsData {
        MpsData {
            ordering: self.ordering.clone(),
            center: self.center,
            truncation_weight: self.truncation_weight,
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorData {
                    shape: t.shape().to_vec(),
                    re: t.iter().map(|x| x.re).collect(),
                    im: t.iter().map(|x| x.im).collect(),
                })
                .collect(),
        }
    }

    pub fn from_data(data: &MpsData) -> Result<Self> {
        check_permutation(&data.ordering, data.tensors.len())?;
        let tensors = data
            .tensors
            .iter()
            .map(|t| {
                if t.shape.len() != 3 || t.re.len() != t.im.len() {
                    return Err(Error::validation("malformed MPS tensor"));
                }
                let vals = t.re.iter().zip(&t.im).map(|(&r, &i)| C64::new(r, i)).collect();
                ArrayD::from_shape_vec(IxDyn(&t.shape), vals).map_err(|e| Error::validation(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tensors,
            center: data.center,
            ordering: data.ordering.clone(),
            truncation_weight: data.truncation_weight,
        })
    }
}

fn row_major(m: &nalgebra::DMatrix<C64>) -> Vec<C64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::validation(format!(
            "ordering has {} entries for {n} qubits",
            order.len()
        )));
    }
    for &q in order {
        if q >= n || seen[q] {
            return Err(Error::validation(format!("ordering {order:?} is not a permutation")));
        }
        seen[q] = true;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorData {
    pub shape: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpsData {
    pub ordering: Vec<usize>,
    pub center: usize,
    pub truncation_weight: f64,
    pub tensors: Vec<TensorData>,
}
