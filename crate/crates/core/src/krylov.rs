//! Action of `exp(−i H dt)` on a vector via Lanczos, for Hermitian `H` given as a
//! matvec. Shared by both backends.
//!
//! The Krylov basis is grown until the a-posteriori estimate
//! `β_k |[exp(−i T_k τ)]_{k,1}|` drops below the tolerance (relative to `‖ψ‖`),
//! with full re-orthogonalization of every new vector. The small tridiagonal
//! exponential is evaluated by dense eigendecomposition.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{inner, norm};
use crate::pulse::NS_TO_US;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovConfig {
    /// Residual threshold `p`, relative to the input norm.
    pub tolerance: f64,
    pub max_krylov_dim: usize,
    /// Inputs with norm at or below this are treated as zero.
    pub norm_epsilon: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_krylov_dim: 100,
            norm_epsilon: 1e-300,
        }
    }
}

impl KrylovConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-1) {
            return Err(Error::config(format!(
                "Krylov tolerance must lie in (0, 0.1], got {}",
                self.tolerance
            )));
        }
        if self.max_krylov_dim < 2 {
            return Err(Error::config("max_krylov_dim must be at least 2"));
        }
        if !(self.norm_epsilon >= 0.0) {
            return Err(Error::config("norm_epsilon must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovReport {
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Relative size of `β_k` below which the Krylov space is taken to be invariant.
const BREAKDOWN: f64 = 1e-14;

/// Returns `exp(−i H dt) ψ` where `dt` is in ns and `H` (as applied by
/// `matvec(x, out)`) in rad/µs. `dt` may be negative.
///
/// Non-convergence is not an error here: the best estimate is returned together
/// with `converged = false` and the caller decides.
pub fn expm_multiply<F>(
    mut matvec: F,
    psi: &[C64],
    dt_ns: f64,
    cfg: &KrylovConfig,
) -> Result<(Vec<C64>, KrylovReport)>
where
    F: FnMut(&[C64], &mut [C64]),
{
    cfg.validate()?;
    let psi_norm = norm(psi);
    if psi_norm <= cfg.norm_epsilon {
        let report = KrylovReport {
            iterations: 0,
            converged: true,
            residual: 0.0,
        };
        return Ok((psi.to_vec(), report));
    }
    let tau = dt_ns * NS_TO_US;
    if tau == 0.0 {
        let report = KrylovReport {
            iterations: 1,
            converged: true,
            residual: 0.0,
        };
        return Ok((psi.to_vec(), report));
    }

    let dim = psi.len();
    let zero = C64::new(0.0, 0.0);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(cfg.max_krylov_dim.min(dim) + 1);
    basis.push(psi.iter().map(|a| a / psi_norm).collect());
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![zero; dim];
    let mut scale = 0.0f64;

    loop {
        let j = basis.len() - 1;
        matvec(&basis[j], &mut w);
        let alpha = inner(&basis[j], &w).re;
        for (x, v) in w.iter_mut().zip(&basis[j]) {
            *x -= v * alpha;
        }
        if j > 0 {
            let b = betas[j - 1];
            for (x, v) in w.iter_mut().zip(&basis[j - 1]) {
                *x -= v * b;
            }
        }
        for v in &basis {
            let c = inner(v, &w);
            for (x, vi) in w.iter_mut().zip(v) {
                *x -= vi * c;
            }
        }
        let beta = norm(&w);
        alphas.push(alpha);
        scale = scale.max(alpha.abs()).max(beta);

        let coeffs = tridiagonal_exp_e1(&alphas, &betas, tau);
        let residual = beta * coeffs[j].norm();
        let breakdown = beta <= BREAKDOWN * scale || basis.len() == dim;
        let converged = breakdown || residual <= cfg.tolerance;
        if converged || basis.len() >= cfg.max_krylov_dim {
            let mut out = vec![zero; dim];
            for (v, &c) in basis.iter().zip(&coeffs) {
                let c = c * psi_norm;
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x * c;
                }
            }
            let report = KrylovReport {
                iterations: basis.len(),
                converged,
                residual: if breakdown { 0.0 } else { residual },
            };
            return Ok((out, report));
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
}

/// First column of `exp(−i T τ)` for the symmetric tridiagonal `T`.
fn tridiagonal_exp_e1(alphas: &[f64], betas: &[f64], tau: f64) -> Vec<C64> {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (values, vectors) = symmetric_eigen(&t);
    let phases: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(m, &lam)| C64::from_polar(1.0, -lam * tau) * vectors[(0, m)])
        .collect();
    (0..k)
        .map(|i| phases.iter().enumerate().map(|(m, &p)| p * vectors[(i, m)]).sum())
        .collect()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real
/// symmetric matrix.
pub fn symmetric_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let m = Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition converges");
    let values = (0..n).map(|i| eig.S()[i]).collect();
    let u = eig.U();
    (values, DMatrix::from_fn(n, n, |i, j| u[(i, j)]))
}

/// Dense `exp(−i H dt) ψ` for a real symmetric `H`, by eigendecomposition.
/// Independent of the Lanczos path; used as the reference in tests and by the
/// exact backend.
pub fn expm_dense_apply(h: &DMatrix<f64>, psi: &[C64], dt_ns: f64) -> Vec<C64> {
    DenseExponential::new(h.clone()).apply(psi, dt_ns)
}

/// Cached eigendecomposition of a real symmetric generator.
pub struct DenseExponential {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl DenseExponential {
    pub fn new(h: DMatrix<f64>) -> Self {
        let (eigenvalues, eigenvectors) = symmetric_eigen(&h);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn apply(&self, psi: &[C64], dt_ns: f64) -> Vec<C64> {
        let tau = dt_ns * NS_TO_US;
        let q = &self.eigenvectors;
        let dim = psi.len();
        // coefficients in the eigenbasis, rotated
        let rotated: Vec<C64> = (0..dim)
            .map(|m| {
                let c: C64 = (0..dim).map(|b| psi[b] * q[(b, m)]).sum();
                c * C64::from_polar(1.0, -self.eigenvalues[m] * tau)
            })
            .collect();
        (0..dim)
            .map(|b| (0..dim).map(|m| rotated[m] * q[(b, m)]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HamiltonianSlice, InteractionMatrix, Parallelism};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_matvec(h: &DMatrix<f64>) -> impl FnMut(&[C64], &mut [C64]) + '_ {
        move |x, out| {
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..x.len()).map(|c| x[c] * h[(r, c)]).sum();
            }
        }
    }

    fn random_vec(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
        (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn random_slice(rng: &mut impl Rng, n: usize) -> HamiltonianSlice {
        let rabi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..15.0)).collect();
        let det: Vec<f64> = (0..n).map(|_| rng.gen_range(-15.0..15.0)).collect();
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let v = rng.gen_range(0.0..40.0);
                u[i * n + j] = v;
                u[j * n + i] = v;
            }
        }
        HamiltonianSlice::new(&rabi, &det, &InteractionMatrix::from_dense(n, u).unwrap()).unwrap()
    }

    fn dist(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn diagonal_generator() {
        let lams = [0.0, 3.0, -7.5, 12.0, 100.0];
        let psi: Vec<C64> = (0..5).map(|i| C64::new(1.0 + i as f64, -0.5)).collect();
        let cfg = KrylovConfig::with_tolerance(1e-12);
        let (out, rep) = expm_multiply(
            |x, o| {
                for i in 0..5 {
                    o[i] = x[i] * lams[i];
                }
            },
            &psi,
            20.0,
            &cfg,
        )
        .unwrap();
        assert!(rep.converged);
        for i in 0..5 {
            let expect = psi[i] * C64::from_polar(1.0, -lams[i] * 20.0 * NS_TO_US);
            assert!((out[i] - expect).norm() < 1e-12 * norm(&psi));
        }
    }

    #[test]
    fn rabi_rotation() {
        let omega = 2.0 * std::f64::consts::PI;
        let h = HamiltonianSlice::new(&[omega], &[0.0], &InteractionMatrix::zeros(1)).unwrap();
        let cfg = KrylovConfig::with_tolerance(1e-12);
        for t in [1.0, 37.0, 125.0, 250.0, 400.0] {
            let (out, rep) = expm_multiply(
                |x, o| h.apply_into(x, o, Parallelism::Sequential).unwrap(),
                &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                t,
                &cfg,
            )
            .unwrap();
            assert!(rep.converged);
            let phi = omega * t * NS_TO_US / 2.0;
            assert!((out[0] - C64::new(phi.cos(), 0.0)).norm() < 1e-12);
            assert!((out[1] - C64::new(0.0, -phi.sin())).norm() < 1e-12);
            // independent 2x2 dense exponential
            let dense = expm_dense_apply(&h.build_dense().unwrap(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], t);
            assert!(dist(&dense, &out) < 1e-12);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let psi = vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.9)];
        let (out, rep) = expm_multiply(|x, o| o.copy_from_slice(x), &psi, 0.0, &KrylovConfig::default()).unwrap();
        assert_eq!(out, psi);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn zero_vector_is_returned_unchanged() {
        let psi = vec![C64::new(0.0, 0.0); 4];
        let (out, rep) = expm_multiply(|x, o| o.copy_from_slice(x), &psi, 10.0, &KrylovConfig::default()).unwrap();
        assert_eq!(out, psi);
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_slice(&mut rng, 8);
        let psi = random_vec(&mut rng, 256);
        let cfg = KrylovConfig {
            tolerance: 1e-12,
            max_krylov_dim: 3,
            ..KrylovConfig::default()
        };
        let (_, rep) = expm_multiply(|x, o| h.apply_into(x, o, Parallelism::Sequential).unwrap(), &psi, 100.0, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        assert!(rep.residual > cfg.tolerance);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = KrylovConfig {
            tolerance: 0.5,
            ..KrylovConfig::default()
        };
        assert!(expm_multiply(|x, o| o.copy_from_slice(x), &[C64::new(1.0, 0.0)], 1.0, &bad).is_err());
        let bad = KrylovConfig {
            max_krylov_dim: 1,
            ..KrylovConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn eigendecomposition_residual_on_strong_interactions() {
        let n = 9;
        let pts: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * 6.0, 0.0]).collect();
        let u = crate::hamiltonian::Register::from_points(&pts, 5.42e6)
            .unwrap()
            .interaction_matrix()
            .unwrap();
        let rabi: Vec<f64> = (0..n).map(|i| 3.0 + i as f64).collect();
        let det: Vec<f64> = (0..n).map(|i| 4.0 - i as f64).collect();
        let h = HamiltonianSlice::new(&rabi, &det, &u).unwrap().build_dense().unwrap();
        let (values, vectors) = symmetric_eigen(&h);
        let residual = (&h * &vectors - &vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values))).norm();
        assert!(residual < 1e-9 * h.norm(), "residual {residual}");
        let orth = (vectors.transpose() * &vectors - DMatrix::identity(h.nrows(), h.nrows())).norm();
        assert!(orth < 1e-10);
    }

    #[test]
    fn eigenvector_terminates_early() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_slice(&mut rng, 5);
        let dense = h.build_dense().unwrap();
        let (values, vectors) = symmetric_eigen(&dense);
        for m in [0, 7, 31] {
            let v: Vec<C64> = vectors.column(m).iter().map(|&x| C64::new(x, 0.0)).collect();
            let (out, rep) = expm_multiply(dense_matvec(&dense), &v, 50.0, &KrylovConfig::with_tolerance(1e-12)).unwrap();
            assert!(rep.iterations <= 2, "iterations {}", rep.iterations);
            let phase = C64::from_polar(1.0, -values[m] * 50.0 * NS_TO_US);
            let expect: Vec<C64> = v.iter().map(|x| x * phase).collect();
            assert!(dist(&out, &expect) < 1e-11);
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let p = 1e-10;
        let cfg = KrylovConfig::with_tolerance(p);
        for trial in 0..40 {
            let n = 1 + trial % 10;
            let h = random_slice(&mut rng, n);
            let mut psi = random_vec(&mut rng, 1 << n);
            let nrm = norm(&psi);
            psi.iter_mut().for_each(|x| *x /= nrm);
            let dt = rng.gen_range(1.0..20.0);
            let (out, rep) = expm_multiply(|x, o| h.apply_into(x, o, Parallelism::Sequential).unwrap(), &psi, dt, &cfg).unwrap();
            assert!(rep.converged);
            let reference = expm_dense_apply(&h.build_dense().unwrap(), &psi, dt);
            assert!(dist(&out, &reference) <= 100.0 * p, "trial {trial}: {}", dist(&out, &reference));
            assert!((norm(&out) - 1.0).abs() <= 10.0 * p);
        }
    }

    #[test]
    fn tighter_tolerance_never_uses_fewer_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let h = random_slice(&mut rng, 7);
        let psi = random_vec(&mut rng, 128);
        let mut last = 0;
        for p in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12] {
            let (_, rep) = expm_multiply(|x, o| h.apply_into(x, o, Parallelism::Sequential).unwrap(), &psi, 15.0, &KrylovConfig::with_tolerance(p)).unwrap();
            assert!(rep.iterations >= last);
            last = rep.iterations;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scaling_commutes(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_slice(&mut rng, 5);
            let psi = random_vec(&mut rng, 32);
            let alpha = C64::new(re, im);
            let scaled: Vec<C64> = psi.iter().map(|x| x * alpha).collect();
            let cfg = KrylovConfig::with_tolerance(1e-12);
            let mv = |x: &[C64], o: &mut [C64]| h.apply_into(x, o, Parallelism::Sequential).unwrap();
            let (a, _) = expm_multiply(mv, &psi, 8.0, &cfg).unwrap();
            let (b, _) = expm_multiply(mv, &scaled, 8.0, &cfg).unwrap();
            let a: Vec<C64> = a.iter().map(|x| x * alpha).collect();
            prop_assert!(dist(&a, &b) <= 1e-12 * norm(&b));
        }

        #[test]
        fn preserves_norm(seed in any::<u64>(), dt in -30.0f64..30.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_slice(&mut rng, 6);
            let psi = random_vec(&mut rng, 64);
            let p = 1e-10;
            let (out, _) = expm_multiply(|x, o| h.apply_into(x, o, Parallelism::Sequential).unwrap(), &psi, dt, &KrylovConfig::with_tolerance(p)).unwrap();
            prop_assert!((norm(&out) - norm(&psi)).abs() <= 10.0 * p * norm(&psi));
        }
    }
}
