//! Second-order two-site TDVP.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::mpo::MatrixProductOperator;
use super::state::MatrixProductState;
use super::tensor::{conj, from_nalgebra, permute, tensordot, to_nalgebra, truncated_svd, Tensor};
use crate::error::{Error, Result};
use crate::krylov::{expm_multiply, KrylovConfig, KrylovReport};

const BYTES_PER_ELEMENT: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdvpConfig {
    /// Relative truncation precision `p` of every SVD split.
    #[serde(default = "default_precision")]
    pub precision: f64,
    #[serde(default = "default_max_bond")]
    pub max_bond_dim: usize,
    #[serde(default)]
    pub krylov: KrylovConfig,
}

fn default_precision() -> f64 {
    1e-5
}

fn default_max_bond() -> usize {
    1024
}

impl Default for TdvpConfig {
    fn default() -> Self {
        Self {
            precision: default_precision(),
            max_bond_dim: default_max_bond(),
            krylov: KrylovConfig::default(),
        }
    }
}

impl TdvpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.precision > 0.0 && self.precision < 1.0) {
            return Err(Error::config(format!("truncation precision must lie in (0, 1), got {}", self.precision)));
        }
        if self.max_bond_dim < 1 {
            return Err(Error::config("max bond dimension must be at least 1"));
        }
        self.krylov.validate()
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub splits: usize,
    /// Sum of relative discarded weights over this step's splits.
    pub discarded_weight: f64,
    pub saturated: bool,
    pub krylov_iterations: usize,
    pub max_krylov_iterations: usize,
    /// Largest bond dimension created during the step.
    pub max_bond: usize,
    /// High-water mark of MPS tensors, environments and Krylov vectors.
    pub peak_bytes: u64,
}

/// Bath tensors `L_c` (sites `< c`) and `R_c` (sites `≥ c`), each with axes
/// `(bra, mpo, ket)`. Cut `c` runs over `0..=N`.
#[derive(Debug, Clone)]
pub struct Environments {
    left: Vec<Option<Tensor>>,
    right: Vec<Option<Tensor>>,
}

fn unit_env() -> Tensor {
    ArrayD::from_elem(IxDyn(&[1, 1, 1]), C64::new(1.0, 0.0))
}

/// `L_{c+1}` from `L_c`, site tensor `a` and MPO tensor `w`.
pub(crate) fn extend_left(l: &Tensor, a: &Tensor, w: &Tensor) -> Tensor {
    let t1 = tensordot(l, a, &[2], &[0]); // (a', w, s, b)
    let t2 = tensordot(&t1, w, &[1, 2], &[0, 2]); // (a', b, o, w')
    let t3 = tensordot(&conj(a), &t2, &[0, 1], &[0, 2]); // (b', b, w')
    permute(&t3, &[0, 2, 1])
}

/// `R_c` from `R_{c+1}`, site tensor `a` and MPO tensor `w`.
pub(crate) fn extend_right(r: &Tensor, a: &Tensor, w: &Tensor) -> Tensor {
    let t1 = tensordot(a, r, &[2], &[2]); // (a, s, b', w')
    let t2 = tensordot(&t1, w, &[1, 3], &[2, 3]); // (a, b', w, o)
    let t3 = tensordot(&conj(a), &t2, &[1, 2], &[3, 1]); // (a', a, w)
    permute(&t3, &[0, 2, 1])
}

impl Environments {
    /// All left baths up to the center and all right baths beyond it.
    pub fn build(mps: &MatrixProductState, mpo: &MatrixProductOperator) -> Result<Self> {
        let n = mps.len();
        if mpo.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: mpo.len(),
            });
        }
        let mut env = Self {
            left: vec![None; n + 1],
            right: vec![None; n + 1],
        };
        env.left[0] = Some(unit_env());
        env.right[n] = Some(unit_env());
        for c in 0..mps.center() {
            let next = extend_left(env.left(c), &mps.tensors[c], &mpo.tensors[c]);
            env.left[c + 1] = Some(next);
        }
        for c in (mps.center() + 1..n).rev() {
            let next = extend_right(env.right(c + 1), &mps.tensors[c], &mpo.tensors[c]);
            env.right[c] = Some(next);
        }
        Ok(env)
    }

    pub fn left(&self, cut: usize) -> &Tensor {
        self.left[cut].as_ref().expect("left environment available")
    }

    pub fn right(&self, cut: usize) -> &Tensor {
        self.right[cut].as_ref().expect("right environment available")
    }

    pub fn bytes(&self) -> u64 {
        self.left
            .iter()
            .chain(&self.right)
            .flatten()
            .map(|t| t.len() as u64 * BYTES_PER_ELEMENT)
            .sum()
    }
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` by a full left-to-right contraction.
pub fn expectation(mps: &MatrixProductState, mpo: &MatrixProductOperator) -> Result<f64> {
    if mpo.len() != mps.len() {
        return Err(Error::Dimension {
            expected: mps.len(),
            actual: mpo.len(),
        });
    }
    let mut l = unit_env();
    for (a, w) in mps.tensors.iter().zip(&mpo.tensors) {
        l = extend_left(&l, a, w);
    }
    Ok(l[[0, 0, 0]].re / (mps.norm() * mps.norm()))
}

fn apply_two_site(l: &Tensor, w1: &Tensor, w2: &Tensor, r: &Tensor, theta: &Tensor) -> Tensor {
    let x1 = tensordot(l, theta, &[2], &[0]); // (a', w, s1, s2, b)
    let x2 = tensordot(&x1, w1, &[1, 2], &[0, 2]); // (a', s2, b, o1, v)
    let x3 = tensordot(&x2, w2, &[4, 1], &[0, 2]); // (a', b, o1, o2, u)
    tensordot(&x3, r, &[1, 4], &[2, 1]) // (a', o1, o2, b')
}

fn apply_one_site(l: &Tensor, w: &Tensor, r: &Tensor, theta: &Tensor) -> Tensor {
    let x1 = tensordot(l, theta, &[2], &[0]); // (a', w, s, b)
    let x2 = tensordot(&x1, w, &[1, 2], &[0, 2]); // (a', b, o, w')
    tensordot(&x2, r, &[1, 3], &[2, 1]) // (a', o, b')
}

/// `exp(−i H_eff dt) θ` with `H_eff` given as a tensor map.
fn evolve<F>(apply: F, theta: &Tensor, dt_ns: f64, cfg: &KrylovConfig, site: usize) -> Result<(Tensor, KrylovReport)>
where
    F: Fn(&Tensor) -> Tensor,
{
    let shape = theta.shape().to_vec();
    let flat: Vec<C64> = theta.iter().copied().collect();
    let matvec = |x: &[C64], out: &mut [C64]| {
        let t = ArrayD::from_shape_vec(IxDyn(&shape), x.to_vec()).expect("shape matches");
        let y = apply(&t);
        for (o, v) in out.iter_mut().zip(y.iter()) {
            *o = *v;
        }
    };
    let (out, report) = expm_multiply(matvec, &flat, dt_ns, cfg)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            location: format!("TDVP effective Hamiltonian at site {site}"),
            residual: report.residual,
            iterations: report.iterations,
        });
    }
    Ok((ArrayD::from_shape_vec(IxDyn(&shape), out).expect("shape matches"), report))
}

/// Which side of a split keeps the singular values.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Absorb {
    Right,
    Left,
}

struct Sweeper<'a> {
    mps: &'a mut MatrixProductState,
    mpo: &'a MatrixProductOperator,
    env: Environments,
    cfg: &'a TdvpConfig,
    diag: StepDiagnostics,
}

impl Sweeper<'_> {
    fn record_krylov(&mut self, report: &KrylovReport, vector_len: usize) {
        self.diag.krylov_iterations += report.iterations;
        self.diag.max_krylov_iterations = self.diag.max_krylov_iterations.max(report.iterations);
        let krylov = (report.iterations as u64 + 2) * vector_len as u64 * BYTES_PER_ELEMENT;
        let live = self.mps.element_count() as u64 * BYTES_PER_ELEMENT + self.env.bytes() + krylov;
        self.diag.peak_bytes = self.diag.peak_bytes.max(live);
    }

    fn evolve_pair(&mut self, k: usize, dt_ns: f64) -> Result<Tensor> {
        let theta = tensordot(&self.mps.tensors[k], &self.mps.tensors[k + 1], &[2], &[0]);
        let (l, r) = (self.env.left(k), self.env.right(k + 2));
        let (w1, w2) = (&self.mpo.tensors[k], &self.mpo.tensors[k + 1]);
        let (theta, report) = evolve(|t| apply_two_site(l, w1, w2, r, t), &theta, dt_ns, &self.cfg.krylov, k)?;
        self.record_krylov(&report, theta.len());
        Ok(theta)
    }

    fn evolve_site(&mut self, k: usize, dt_ns: f64) -> Result<()> {
        let (l, r) = (self.env.left(k), self.env.right(k + 1));
        let w = &self.mpo.tensors[k];
        let (theta, report) = evolve(|t| apply_one_site(l, w, r, t), &self.mps.tensors[k], dt_ns, &self.cfg.krylov, k)?;
        self.record_krylov(&report, theta.len());
        self.mps.tensors[k] = theta;
        Ok(())
    }

    fn split(&mut self, k: usize, theta: Tensor, absorb: Absorb) {
        let sh = theta.shape().to_vec();
        let m = to_nalgebra(&theta, sh[0] * 2, 2 * sh[3]);
        let split = truncated_svd(m, self.cfg.precision, self.cfg.max_bond_dim);
        let chi = split.s.len();
        let (mut u, mut vh) = (split.u, split.vh);
        match absorb {
            Absorb::Right => {
                for (i, s) in split.s.iter().enumerate() {
                    vh.row_mut(i).scale_mut(*s);
                }
            }
            Absorb::Left => {
                for (j, s) in split.s.iter().enumerate() {
                    u.column_mut(j).scale_mut(*s);
                }
            }
        }
        self.mps.tensors[k] = from_nalgebra(&u, &[sh[0], 2, chi]);
        self.mps.tensors[k + 1] = from_nalgebra(&vh, &[chi, 2, sh[3]]);
        self.mps.center = if absorb == Absorb::Right { k + 1 } else { k };
        self.mps.truncation_weight += split.discarded_weight;
        self.diag.discarded_weight += split.discarded_weight;
        self.diag.saturated |= split.saturated;
        self.diag.splits += 1;
        self.diag.max_bond = self.diag.max_bond.max(chi);
    }

    fn grow_left(&mut self, k: usize) {
        let next = extend_left(self.env.left(k), &self.mps.tensors[k], &self.mpo.tensors[k]);
        self.env.left[k + 1] = Some(next);
    }

    fn grow_right(&mut self, k: usize) {
        let next = extend_right(self.env.right(k + 1), &self.mps.tensors[k], &self.mpo.tensors[k]);
        self.env.right[k] = Some(next);
    }

    fn run(&mut self, dt_ns: f64) -> Result<()> {
        let n = self.mps.len();
        if n == 1 {
            return self.evolve_site(0, dt_ns);
        }
        let half = 0.5 * dt_ns;
        for k in 0..n - 2 {
            let theta = self.evolve_pair(k, half)?;
            self.split(k, theta, Absorb::Right);
            self.grow_left(k);
            self.evolve_site(k + 1, -half)?;
            self.env.right[k + 2] = None;
        }
        let k = n - 2;
        let theta = self.evolve_pair(k, dt_ns)?;
        self.split(k, theta, Absorb::Left);
        self.grow_right(k + 1);
        if n > 2 {
            self.evolve_site(k, -half)?;
        }
        for k in (0..n - 2).rev() {
            self.env.left[k + 1] = None;
            let theta = self.evolve_pair(k, half)?;
            self.split(k, theta, Absorb::Left);
            self.grow_right(k + 1);
            if k > 0 {
                self.evolve_site(k, -half)?;
            }
        }
        Ok(())
    }
}

/// One symmetric TDVP step of length `dt_ns` under `mpo`. The state is brought
/// to center 0 first and ends with center 0.
pub fn tdvp_step(
    mps: &mut MatrixProductState,
    mpo: &MatrixProductOperator,
    dt_ns: f64,
    cfg: &TdvpConfig,
) -> Result<StepDiagnostics> {
    cfg.validate()?;
    if mpo.len() != mps.len() {
        return Err(Error::Dimension {
            expected: mps.len(),
            actual: mpo.len(),
        });
    }
    mps.move_center(0);
    let env = Environments::build(mps, mpo)?;
    let mut sweeper = Sweeper {
        mps,
        mpo,
        env,
        cfg,
        diag: StepDiagnostics::default(),
    };
    sweeper.run(dt_ns)?;
    let mut diag = sweeper.diag;
    diag.max_bond = diag.max_bond.max(mps.max_bond());
    Ok(diag)
}
