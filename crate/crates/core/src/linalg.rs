//! Direct solvers for linear systems whose sparsity pattern is a forest.
//!
//! Every finite window of a comb induces a forest, so the grounded Laplacian
//! and the killed generator `I - P` both have tree-shaped off-diagonal
//! patterns. Gaussian elimination in leaves-first order produces no fill-in,
//! which makes the factorization linear in the number of vertices and lets the
//! same code run over `f64` and exact rationals.

use std::collections::VecDeque;

use num_traits::Num;

use crate::error::{Error, Result};

/// LU factors of a forest-patterned matrix.
#[derive(Clone, Debug)]
pub struct ForestSystem<T> {
    parent: Vec<Option<usize>>,
    /// Children before parents.
    order: Vec<usize>,
    /// Pivots after eliminating all descendants.
    pivot: Vec<T>,
    /// `a[i][parent(i)]`.
    up: Vec<T>,
    /// `a[parent(i)][i]`.
    down: Vec<T>,
}

impl<T: Clone + Num> ForestSystem<T> {
    /// Factor the matrix with diagonal `diag` and off-diagonal entries given as
    /// `(i, j, a_ij, a_ji)`. Each unordered pair may appear once, and the pairs
    /// must form a forest.
    pub fn new(diag: Vec<T>, edges: &[(usize, usize, T, T)]) -> Result<Self> {
        let size = diag.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); size];
        for (k, &(i, j, _, _)) in edges.iter().enumerate() {
            if i >= size || j >= size || i == j {
                return Err(Error::InvalidParameter(format!(
                    "bad off-diagonal entry ({i},{j})"
                )));
            }
            adj[i].push((j, k));
            adj[j].push((i, k));
        }

        let mut parent = vec![None; size];
        let mut up = vec![T::zero(); size];
        let mut down = vec![T::zero(); size];
        let mut seen = vec![false; size];
        let mut bfs = Vec::with_capacity(size);
        let mut queue = VecDeque::new();
        for root in 0..size {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                bfs.push(v);
                for &(w, k) in &adj[v] {
                    if parent[v].map(|(_, pk)| pk) == Some(k) {
                        continue;
                    }
                    if seen[w] {
                        return Err(Error::InvalidParameter(
                            "off-diagonal pattern has a cycle".into(),
                        ));
                    }
                    seen[w] = true;
                    let (i, _, a_ij, a_ji) = &edges[k];
                    // Entry a[w][v] and a[v][w].
                    let (wv, vw) = if *i == w { (a_ij, a_ji) } else { (a_ji, a_ij) };
                    up[w] = wv.clone();
                    down[w] = vw.clone();
                    parent[w] = Some((v, k));
                    queue.push_back(w);
                }
            }
        }
        let parent: Vec<Option<usize>> = parent.into_iter().map(|p| p.map(|(v, _)| v)).collect();

        let order: Vec<usize> = bfs.into_iter().rev().collect();
        let mut pivot = diag;
        for &i in &order {
            if pivot[i].is_zero() {
                return Err(Error::Singular(format!("zero pivot at row {i}")));
            }
            if let Some(p) = parent[i] {
                let fill = down[i].clone() * up[i].clone() / pivot[i].clone();
                pivot[p] = pivot[p].clone() - fill;
            }
        }
        Ok(ForestSystem {
            parent,
            order,
            pivot,
            up,
            down,
        })
    }

    pub fn len(&self) -> usize {
        self.pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot.is_empty()
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        assert_eq!(rhs.len(), self.len(), "right-hand side has wrong length");
        let mut b = rhs.to_vec();
        for &i in &self.order {
            if let Some(p) = self.parent[i] {
                let t = self.down[i].clone() * b[i].clone() / self.pivot[i].clone();
                b[p] = b[p].clone() - t;
            }
        }
        let mut x = vec![T::zero(); self.len()];
        for &i in self.order.iter().rev() {
            let mut v = b[i].clone();
            if let Some(p) = self.parent[i] {
                v = v - self.up[i].clone() * x[p].clone();
            }
            x[i] = v / self.pivot[i].clone();
        }
        x
    }

    /// Column `j` of the inverse.
    pub fn inverse_column(&self, j: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.len()];
        e[j] = T::one();
        self.solve(&e)
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};
    use num_rational::BigRational;
    use proptest::prelude::*;

    use super::*;

    fn dense(diag: &[f64], edges: &[(usize, usize, f64, f64)]) -> DMatrix<f64> {
        let mut a = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        for &(i, j, aij, aji) in edges {
            a[(i, j)] = aij;
            a[(j, i)] = aji;
        }
        a
    }

    #[test]
    fn path_laplacian() {
        // Grounded path 0-1-2 with both ends tied to ground.
        let diag = vec![2.0f64, 2.0, 2.0];
        let edges = [(0, 1, -1.0, -1.0), (1, 2, -1.0, -1.0)];
        let sys = ForestSystem::new(diag, &edges).unwrap();
        let g = sys.inverse_column(1);
        // Middle of a 4-edge path: 2*2/4 = 1.
        assert!((g[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_cycles_and_zero_pivots() {
        let edges = [(0, 1, -1.0, -1.0), (1, 2, -1.0, -1.0), (2, 0, -1.0, -1.0)];
        assert!(ForestSystem::new(vec![3.0; 3], &edges).is_err());
        let edges = [(0, 1, -1.0, -1.0)];
        assert!(matches!(
            ForestSystem::new(vec![1.0, 1.0], &edges),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn exact_rationals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let diag = vec![r(1, 1); 3];
        let edges = [(0, 1, r(-1, 2), r(-1, 2)), (1, 2, r(-1, 2), r(-1, 2))];
        let sys = ForestSystem::new(diag, &edges).unwrap();
        // Exit time of the path {1,2,3} in {0..4} from each site: k(4-k).
        let m = sys.solve(&[r(1, 1), r(1, 1), r(1, 1)]);
        assert_eq!(m, vec![r(3, 1), r(4, 1), r(3, 1)]);
    }

    fn random_forest() -> impl Strategy<Value = (Vec<f64>, Vec<(usize, usize, f64, f64)>, Vec<f64>)>
    {
        (2usize..40).prop_flat_map(|size| {
            let parents =
                proptest::collection::vec(proptest::option::weighted(0.9, 0usize..1000), size - 1);
            let weights = proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), size - 1);
            let rhs = proptest::collection::vec(-5.0f64..5.0, size);
            (parents, weights, rhs).prop_map(move |(parents, weights, rhs)| {
                let mut edges = Vec::new();
                let mut diag = vec![0.0; size];
                for (k, (p, (a, b))) in parents.into_iter().zip(weights).enumerate() {
                    let child = k + 1;
                    if let Some(p) = p {
                        let p = p % child;
                        edges.push((p, child, a, b));
                        diag[p] += a.abs() + b.abs();
                        diag[child] += a.abs() + b.abs();
                    }
                }
                for d in &mut diag {
                    *d += 0.5;
                }
                (diag, edges, rhs)
            })
        })
    }

    proptest! {
        #[test]
        fn agrees_with_dense_lu((diag, edges, rhs) in random_forest()) {
            let sys = ForestSystem::new(diag.clone(), &edges).unwrap();
            let x = sys.solve(&rhs);
            let a = dense(&diag, &edges);
            let want = a.lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
            for (got, want) in x.iter().zip(want.iter()) {
                prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }
}
