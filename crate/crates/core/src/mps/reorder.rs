//! Reverse Cuthill-McKee site ordering from the interaction graph.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::hamiltonian::InteractionMatrix;

/// Default edge threshold: two orders of magnitude below the strongest coupling.
pub fn default_threshold(u: &InteractionMatrix) -> f64 {
    u.max_coupling() / 100.0
}

/// Site ordering (`order[s]` = qubit on site `s`) from reverse Cuthill-McKee on
/// the graph with edges `U_ij ≥ threshold`. Ties go to the lower qubit index.
pub fn reorder_qubits(u: &InteractionMatrix, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0) {
        return Err(Error::config(format!("reordering threshold must be positive, got {threshold}")));
    }
    let n = u.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && u.get(i, j) >= threshold).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node remains");
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    Ok(order)
}

/// Largest `|pos(i) − pos(j)|` over graph edges under the given site ordering.
pub fn bandwidth(u: &InteractionMatrix, threshold: f64, order: &[usize]) -> usize {
    let mut pos = vec![0; order.len()];
    for (s, &q) in order.iter().enumerate() {
        pos[q] = s;
    }
    let n = u.len();
    let mut bw = 0;
    for i in 0..n {
        for j in i + 1..n {
            if u.get(i, j) >= threshold {
                bw = bw.max(pos[i].abs_diff(pos[j]));
            }
        }
    }
    bw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Register;

    fn register(points: &[[f64; 2]]) -> InteractionMatrix {
        Register::from_points(points, 5.42e6).unwrap().interaction_matrix().unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn chain_keeps_bandwidth_one() {
        let pts: Vec<[f64; 2]> = (0..8).map(|i| [6.0 * i as f64, 0.0]).collect();
        let u = register(&pts);
        // next-nearest couplings are 1/64 of nearest ones
        let threshold = u.max_coupling() / 10.0;
        let order = reorder_qubits(&u, threshold).unwrap();
        assert_eq!(bandwidth(&u, threshold, &order), 1);
        assert!(order == (0..8).collect::<Vec<_>>() || order == (0..8).rev().collect::<Vec<_>>());
    }

    #[test]
    fn square_is_optimal() {
        let u = register(&[[0.0, 0.0], [6.0, 0.0], [0.0, 6.0], [6.0, 6.0]]);
        // diagonals are 1/8 of the sides
        let threshold = u.max_coupling() / 4.0;
        let order = reorder_qubits(&u, threshold).unwrap();
        let best = permutations(4).iter().map(|p| bandwidth(&u, threshold, p)).min().unwrap();
        assert_eq!(best, 2);
        assert_eq!(bandwidth(&u, threshold, &order), 2);
    }

    #[test]
    fn grid_beats_scrambled_order() {
        let pts: Vec<[f64; 2]> = (0..16).map(|i| [6.0 * (i % 4) as f64, 6.0 * (i / 4) as f64]).collect();
        let u = register(&pts);
        let threshold = u.max_coupling() / 4.0;
        let scrambled: Vec<usize> = vec![0, 15, 5, 10, 3, 12, 6, 9, 1, 14, 7, 8, 2, 13, 4, 11];
        let order = reorder_qubits(&u, threshold).unwrap();
        assert!(bandwidth(&u, threshold, &order) <= 4);
        assert!(bandwidth(&u, threshold, &order) < bandwidth(&u, threshold, &scrambled));
    }

    #[test]
    fn deterministic_on_complete_graph() {
        let u = InteractionMatrix::from_dense(4, vec![0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        let a = reorder_qubits(&u, 0.5).unwrap();
        assert_eq!(a, reorder_qubits(&u, 0.5).unwrap());
        assert_eq!(a, vec![3, 2, 1, 0]);
    }

    #[test]
    fn disconnected_components_are_concatenated() {
        let u = register(&[[0.0, 0.0], [100.0, 0.0], [6.0, 0.0], [106.0, 0.0]]);
        let order = reorder_qubits(&u, default_threshold(&u)).unwrap();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        let pos = |q: usize| order.iter().position(|&x| x == q).unwrap();
        assert_eq!(pos(0).abs_diff(pos(2)), 1);
        assert_eq!(pos(1).abs_diff(pos(3)), 1);
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        assert!(reorder_qubits(&InteractionMatrix::zeros(2), 0.0).is_err());
    }
}
