//! Small dense-tensor toolkit: `tensordot` on row-major `ArrayD`, and the
//! truncated SVD used for every two-site split.

use faer::Mat;
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64 as C64;

pub type Tensor = ArrayD<C64>;

/// Contract `a[axes_a]` with `b[axes_b]`. Result axes: free axes of `a` in order,
/// then free axes of `b` in order.
pub fn tensordot(a: &Tensor, b: &Tensor, axes_a: &[usize], axes_b: &[usize]) -> Tensor {
    debug_assert_eq!(axes_a.len(), axes_b.len());
    let free_a: Vec<usize> = (0..a.ndim()).filter(|i| !axes_a.contains(i)).collect();
    let free_b: Vec<usize> = (0..b.ndim()).filter(|i| !axes_b.contains(i)).collect();
    for (&i, &j) in axes_a.iter().zip(axes_b) {
        debug_assert_eq!(a.shape()[i], b.shape()[j], "contracted extents differ");
    }

    let rows: usize = free_a.iter().map(|&i| a.shape()[i]).product();
    let inner: usize = axes_a.iter().map(|&i| a.shape()[i]).product();
    let cols: usize = free_b.iter().map(|&i| b.shape()[i]).product();

    let perm_a: Vec<usize> = free_a.iter().chain(axes_a).copied().collect();
    let perm_b: Vec<usize> = axes_b.iter().chain(&free_b).copied().collect();
    let mat_a = as_matrix(a, &perm_a, rows, inner);
    let mat_b = as_matrix(b, &perm_b, inner, cols);
    let prod = mat_a.dot(&mat_b);

    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape()[i])
        .chain(free_b.iter().map(|&i| b.shape()[i]))
        .collect();
    prod.into_shape_with_order(IxDyn(&shape))
        .expect("row-major product reshapes to the free axes")
}

fn as_matrix(t: &Tensor, perm: &[usize], rows: usize, cols: usize) -> Array2<C64> {
    let view = t.view().permuted_axes(IxDyn(perm));
    let owned = view.as_standard_layout().into_owned();
    owned
        .into_shape_with_order((rows, cols))
        .expect("standard layout reshapes")
}

pub fn permute(t: &Tensor, perm: &[usize]) -> Tensor {
    t.view()
        .permuted_axes(IxDyn(perm))
        .as_standard_layout()
        .into_owned()
}

pub fn reshape(t: Tensor, shape: &[usize]) -> Tensor {
    let t = if t.is_standard_layout() {
        t
    } else {
        t.as_standard_layout().into_owned()
    };
    t.into_shape_with_order(IxDyn(shape)).expect("reshape preserves size")
}

pub fn conj(t: &Tensor) -> Tensor {
    t.mapv(|x| x.conj())
}

pub fn to_nalgebra(t: &Tensor, rows: usize, cols: usize) -> DMatrix<C64> {
    let t = t.as_standard_layout();
    let flat = t.as_slice().expect("standard layout is contiguous");
    DMatrix::from_row_slice(rows, cols, flat)
}

pub fn from_nalgebra(m: &DMatrix<C64>, shape: &[usize]) -> Tensor {
    let (r, c) = m.shape();
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(m[(i, j)]);
        }
    }
    ArrayD::from_shape_vec(IxDyn(shape), data).expect("size matches")
}

#[cfg(test)]
pub(crate) fn frobenius_sq(t: &Tensor) -> f64 {
    t.iter().map(|x| x.norm_sqr()).sum()
}

/// Outcome of a truncated SVD `M ≈ U · diag(s) · Vh`.
#[derive(Debug, Clone)]
pub struct Split {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub vh: DMatrix<C64>,
    /// Discarded squared singular values relative to the total.
    pub discarded_weight: f64,
    /// The bond-dimension cap removed values the precision rule would have kept.
    pub saturated: bool,
}

/// Thin SVD `m = U·diag(s)·Vh` with `s` nonincreasing.
pub(crate) fn svd(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let (r, c) = m.shape();
    let k = r.min(c);
    let f = Mat::<C64>::from_fn(r, c, |i, j| m[(i, j)]);
    let dec = f.thin_svd().expect("SVD converges");
    let (fu, fs, fv) = (dec.U(), dec.S(), dec.V());
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| fs[b].re.total_cmp(&fs[a].re));
    let s = idx.iter().map(|&i| fs[i].re).collect();
    let u = DMatrix::from_fn(r, k, |i, j| fu[(i, idx[j])]);
    let vh = DMatrix::from_fn(k, c, |i, j| fv[(j, idx[i])].conj());
    (u, s, vh)
}

/// SVD with the truncation rule: drop the smallest singular values whose
/// cumulative squared sum is at most `precision²` of the total, then cap at
/// `max_bond`; the kept spectrum is rescaled to the original norm.
pub fn truncated_svd(m: DMatrix<C64>, precision: f64, max_bond: usize) -> Split {
    let (u_all, s_all, vh_all) = svd(&m);
    let total: f64 = s_all.iter().map(|x| x * x).sum();

    let mut keep = s_all.len();
    if total > 0.0 {
        let budget = precision * precision * total;
        let mut tail = 0.0;
        while keep > 1 {
            let next = tail + s_all[keep - 1] * s_all[keep - 1];
            if next > budget {
                break;
            }
            tail = next;
            keep -= 1;
        }
    } else {
        keep = 1;
    }
    let saturated = keep > max_bond;
    let keep = keep.min(max_bond).max(1);

    let kept: f64 = s_all[..keep].iter().map(|x| x * x).sum();
    let tail: f64 = s_all[keep..].iter().map(|x| x * x).sum();
    let discarded_weight = if total > 0.0 { tail / total } else { 0.0 };
    let rescale = if kept > 0.0 { (total / kept).sqrt() } else { 1.0 };

    let u = u_all.columns(0, keep).into_owned();
    let vh = vh_all.rows(0, keep).into_owned();
    let s = s_all[..keep].iter().map(|x| x * rescale).collect();
    Split {
        u,
        s,
        vh,
        discarded_weight,
        saturated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::ArrayD;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor {
        ArrayD::from_shape_fn(IxDyn(shape), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn tensordot_matches_explicit_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = random_tensor(&mut rng, &[3, 4, 2]);
        let b = random_tensor(&mut rng, &[2, 5, 3]);
        // c[j, k] = Σ_{i, l} a[i, j, l] b[l, k, i]
        let c = tensordot(&a, &b, &[0, 2], &[2, 0]);
        assert_eq!(c.shape(), &[4, 5]);
        for j in 0..4 {
            for k in 0..5 {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..3 {
                    for l in 0..2 {
                        acc += a[[i, j, l]] * b[[l, k, i]];
                    }
                }
                assert!((acc - c[[j, k]]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn truncation_rule() {
        // diag(1, 0.1, 1e-4, 1e-6)
        let mut m = DMatrix::<C64>::zeros(4, 4);
        for (i, s) in [1.0, 0.1, 1e-4, 1e-6].iter().enumerate() {
            m[(i, i)] = C64::new(*s, 0.0);
        }
        let total = 1.0 + 1e-2 + 1e-8 + 1e-12;
        let split = truncated_svd(m.clone(), 1e-3, 10);
        // tail weight 1e-8 + 1e-12 ≤ 1e-6·total, next would add 1e-2
        assert_eq!(split.s.len(), 2);
        assert!((split.discarded_weight - (1e-8 + 1e-12) / total).abs() < 1e-18);
        assert!(!split.saturated);
        let kept: f64 = split.s.iter().map(|x| x * x).sum();
        assert!((kept - total).abs() < 1e-14);

        let capped = truncated_svd(m.clone(), 1e-12, 3);
        assert_eq!(capped.s.len(), 3);
        assert!(capped.saturated);

        let exact = truncated_svd(m, 1e-12, 10);
        assert_eq!(exact.s.len(), 4);
        assert_eq!(exact.discarded_weight, 0.0);
    }

    #[test]
    fn rank_one_keeps_one() {
        let m = DMatrix::<C64>::from_fn(3, 4, |i, j| C64::new((i + 1) as f64 * (j + 2) as f64, 0.0));
        let split = truncated_svd(m, 1e-10, 8);
        assert_eq!(split.s.len(), 1);
    }
}
