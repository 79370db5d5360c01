//! Electrical networks on finite windows of a comb.
//!
//! Every edge has unit conductance. A window is described by its interior set
//! `B`; all vertices outside `B` are fused into one grounded node. Because
//! the comb is a tree, the grounded Laplacian has a forest pattern and is
//! factored with [`ForestSystem`] in linear time.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Comb, Vertex};
use crate::linalg::ForestSystem;

/// Occupation density of the walk started at `start` and killed on leaving the
/// interior.
#[derive(Clone, Debug, Serialize)]
pub struct ExitProfile {
    pub start: Vertex,
    pub vertices: Vec<Vertex>,
    pub degrees: Vec<u32>,
    /// Expected visits to each vertex divided by its degree.
    pub g: Vec<f64>,
    pub resistance_to_boundary: f64,
    pub expected_exit_time: f64,
}

impl ExitProfile {
    pub fn density(&self, y: Vertex) -> f64 {
        self.vertices
            .iter()
            .position(|&v| v == y)
            .map_or(0.0, |i| self.g[i])
    }
}

fn index_interior(comb: &Comb, interior: &[Vertex]) -> Result<HashMap<Vertex, usize>> {
    if interior.is_empty() {
        return Err(Error::Domain("interior set is empty".into()));
    }
    let mut index = HashMap::with_capacity(interior.len());
    for (i, &v) in interior.iter().enumerate() {
        comb.check(v)?;
        if index.insert(v, i).is_some() {
            return Err(Error::InvalidParameter(format!("vertex {v} listed twice")));
        }
    }
    Ok(index)
}

/// Diagonal entries and interior edges of a forest-patterned operator, with
/// weights produced from vertex degrees.
fn forest_operator<T: Clone + Num>(
    comb: &Comb,
    interior: &[Vertex],
    index: &HashMap<Vertex, usize>,
    diag: impl Fn(u32) -> T,
    off: impl Fn(u32) -> T,
) -> Result<ForestSystem<T>> {
    let mut d = Vec::with_capacity(interior.len());
    let mut edges = Vec::new();
    for (i, &v) in interior.iter().enumerate() {
        let deg = comb.degree_unchecked(v);
        d.push(diag(deg));
        for w in comb.neighbors_unchecked(v) {
            if let Some(&j) = index.get(&w) {
                if i < j {
                    let dw = comb.degree_unchecked(w);
                    edges.push((i, j, off(deg), off(dw)));
                }
            }
        }
    }
    ForestSystem::new(d, &edges)
}

/// The window `B` with its complement fused to ground.
#[derive(Clone, Debug)]
pub struct FusedNetwork {
    comb: Comb,
    interior: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    laplacian: ForestSystem<f64>,
}

impl FusedNetwork {
    pub fn new(comb: &Comb, interior: Vec<Vertex>) -> Result<Self> {
        let index = index_interior(comb, &interior)?;
        let laplacian = forest_operator(comb, &interior, &index, f64::from, |_| -1.0)?;
        Ok(FusedNetwork {
            comb: comb.clone(),
            interior,
            index,
            laplacian,
        })
    }

    /// The closed ball `B(center, radius)` as interior.
    pub fn ball(comb: &Comb, center: Vertex, radius: u64) -> Result<Self> {
        Self::new(comb, comb.ball(center, radius)?.members)
    }

    pub fn interior(&self) -> &[Vertex] {
        &self.interior
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.index.contains_key(&v)
    }

    fn slot(&self, v: Vertex) -> Result<usize> {
        self.index
            .get(&v)
            .copied()
            .ok_or_else(|| Error::Domain(format!("vertex {v} is not in the interior")))
    }

    /// Potentials when unit current enters at `x` and leaves through ground;
    /// entry `j` is the Green function `G(x, interior[j])`.
    pub fn green_column(&self, x: Vertex) -> Result<Vec<f64>> {
        Ok(self.laplacian.inverse_column(self.slot(x)?))
    }

    /// `R(x, B^c)`.
    pub fn resistance_to_boundary(&self, x: Vertex) -> Result<f64> {
        let i = self.slot(x)?;
        Ok(self.laplacian.inverse_column(i)[i])
    }

    /// `R_{B^c}(x, y)`: resistance between `x` and `y` with the complement fused.
    pub fn fused_pair_resistance(&self, x: Vertex, y: Vertex) -> Result<f64> {
        let (i, j) = (self.slot(x)?, self.slot(y)?);
        if i == j {
            return Ok(0.0);
        }
        let gx = self.laplacian.inverse_column(i);
        let gy = self.laplacian.inverse_column(j);
        Ok((gx[i] + gy[j] - 2.0 * gx[j]).max(0.0))
    }

    /// Occupation density from the three-resistance identity
    /// `2 g(y) = R(x, B^c) + R(y, B^c) - R_{B^c}(x, y)`.
    pub fn occupation_density(&self, x: Vertex) -> Result<ExitProfile> {
        let i = self.slot(x)?;
        let gx = self.laplacian.inverse_column(i);
        let rx = gx[i];
        let mut g = Vec::with_capacity(self.interior.len());
        let mut degrees = Vec::with_capacity(self.interior.len());
        let mut total = 0.0;
        for (j, &y) in self.interior.iter().enumerate() {
            let gy = self.laplacian.inverse_column(j);
            let ry = gy[j];
            let rxy = if i == j { 0.0 } else { rx + ry - 2.0 * gx[j] };
            let value = ((rx + ry - rxy) / 2.0).max(0.0);
            let deg = self.comb.degree_unchecked(y);
            total += value * f64::from(deg);
            g.push(value);
            degrees.push(deg);
        }
        Ok(ExitProfile {
            start: x,
            vertices: self.interior.clone(),
            degrees,
            g,
            resistance_to_boundary: rx,
            expected_exit_time: total,
        })
    }
}

/// Effective resistance between two vertices of the infinite comb. On a tree
/// this is the graph distance.
pub fn pair_resistance(comb: &Comb, u: Vertex, v: Vertex) -> Result<f64> {
    Ok(comb.distance(u, v)? as f64)
}

/// Effective resistance between `u` and `v` inside the finite subgraph induced
/// by `window`, by a dense Cholesky solve of the Laplacian grounded at `v`.
pub fn pair_resistance_solve(comb: &Comb, u: Vertex, v: Vertex, window: &[Vertex]) -> Result<f64> {
    if u == v {
        return Ok(0.0);
    }
    let index = index_interior(comb, window)?;
    let (Some(&iu), Some(&iv)) = (index.get(&u), index.get(&v)) else {
        return Err(Error::Domain(format!(
            "{u} and {v} must both lie in the window"
        )));
    };
    let size = window.len();
    let shrink = |i: usize| if i > iv { i - 1 } else { i };
    let mut lap = DMatrix::<f64>::zeros(size - 1, size - 1);
    for (i, &a) in window.iter().enumerate() {
        for b in comb.neighbors_unchecked(a) {
            let Some(&j) = index.get(&b) else { continue };
            if i != iv {
                lap[(shrink(i), shrink(i))] += 1.0;
                if j != iv {
                    lap[(shrink(i), shrink(j))] -= 1.0;
                }
            }
        }
    }
    let chol = lap
        .cholesky()
        .ok_or_else(|| Error::Singular("window is not connected to the grounded vertex".into()))?;
    let mut e = nalgebra::DVector::zeros(size - 1);
    e[shrink(iu)] = 1.0;
    Ok(chol.solve(&e)[shrink(iu)])
}

/// `R(x, B^c)` for a general interior set `B` (so the absorbing set is its
/// complement, e.g. `B = ball minus {y}` fuses `{y}` with the outside).
pub fn resistance_to_boundary(comb: &Comb, x: Vertex, interior: &[Vertex]) -> Result<f64> {
    FusedNetwork::new(comb, interior.to_vec())?.resistance_to_boundary(x)
}

pub fn fused_pair_resistance(
    comb: &Comb,
    x: Vertex,
    y: Vertex,
    interior: &[Vertex],
) -> Result<f64> {
    FusedNetwork::new(comb, interior.to_vec())?.fused_pair_resistance(x, y)
}

pub fn occupation_density(comb: &Comb, x: Vertex, interior: &[Vertex]) -> Result<ExitProfile> {
    FusedNetwork::new(comb, interior.to_vec())?.occupation_density(x)
}

/// Expected exit times from every interior vertex, by solving
/// `m = 1 + P m` on the interior with `m = 0` outside. Aligned with `interior`.
pub fn exit_times(comb: &Comb, interior: &[Vertex]) -> Result<Vec<f64>> {
    let index = index_interior(comb, interior)?;
    let sys = forest_operator(comb, interior, &index, |_| 1.0, |d| -1.0 / f64::from(d))?;
    Ok(sys.solve(&vec![1.0; interior.len()]))
}

/// Exact rational version of [`exit_times`].
pub fn exit_times_exact(comb: &Comb, interior: &[Vertex]) -> Result<Vec<BigRational>> {
    let index = index_interior(comb, interior)?;
    let one = || BigRational::from_integer(BigInt::from(1));
    let sys = forest_operator(
        comb,
        interior,
        &index,
        |_| one(),
        |d| -BigRational::new(BigInt::from(1), BigInt::from(d)),
    )?;
    Ok(sys.solve(&vec![one(); interior.len()]))
}

pub fn expected_exit_time_direct(comb: &Comb, x: Vertex, interior: &[Vertex]) -> Result<f64> {
    let i = interior
        .iter()
        .position(|&v| v == x)
        .ok_or_else(|| Error::Domain(format!("vertex {x} is not in the interior")))?;
    Ok(exit_times(comb, interior)?[i])
}

/// Dense LU solve of the exit-time system; independent of the forest solver.
pub fn exit_times_dense(comb: &Comb, interior: &[Vertex]) -> Result<Vec<f64>> {
    let index = index_interior(comb, interior)?;
    let size = interior.len();
    let mut a = DMatrix::<f64>::identity(size, size);
    for (i, &v) in interior.iter().enumerate() {
        let deg = f64::from(comb.degree_unchecked(v));
        for w in comb.neighbors_unchecked(v) {
            if let Some(&j) = index.get(&w) {
                a[(i, j)] -= 1.0 / deg;
            }
        }
    }
    let m = a
        .lu()
        .solve(&nalgebra::DVector::from_element(size, 1.0))
        .ok_or_else(|| Error::Singular("exit-time system".into()))?;
    Ok(m.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    use super::*;
    use crate::graph::CombSpec;

    fn segment(lo: i64, hi: i64) -> Vec<Vertex> {
        (lo..=hi).map(Vertex::backbone).collect()
    }

    #[test]
    fn tree_identity() {
        let comb = Comb::log(1.0).unwrap();
        assert_eq!(
            pair_resistance(&comb, Vertex::new(0, 0), Vertex::new(1, 0)).unwrap(),
            1.0
        );
        let unit = Comb::new(CombSpec::custom(|_| 2));
        assert_eq!(
            pair_resistance(&unit, Vertex::new(2, 1), Vertex::new(5, 0)).unwrap(),
            4.0
        );
        let window = comb.ball(Vertex::new(20, 0), 12).unwrap().members;
        let r =
            pair_resistance_solve(&comb, Vertex::new(12, 0), Vertex::new(30, 2), &window).unwrap();
        assert!((r - 20.0).abs() < 1e-9);
    }

    #[test]
    fn interval_series_parallel() {
        // Interior {1..L-1} on a bare line; x at distance a from 0, b from L.
        let line = Comb::new(CombSpec::line());
        let l = 11;
        let interior = segment(1, l - 1);
        for a in 1..l {
            let b = l - a;
            let r = resistance_to_boundary(&line, Vertex::backbone(a), &interior).unwrap();
            let want = (a * b) as f64 / l as f64;
            assert!((r - want).abs() < 1e-12, "a={a}: {r} vs {want}");
        }
    }

    #[test]
    fn occupation_density_matches_direct() {
        let comb = Comb::log(1.0).unwrap();
        let x = Vertex::new(40, 0);
        let net = FusedNetwork::ball(&comb, x, 10).unwrap();
        let profile = net.occupation_density(x).unwrap();
        assert!((profile.density(x) - profile.resistance_to_boundary).abs() < 1e-12);
        assert!(profile.resistance_to_boundary >= 10.0 / 8.0);
        let direct = expected_exit_time_direct(&comb, x, net.interior()).unwrap();
        assert!((profile.expected_exit_time - direct).abs() < 1e-9);
        assert!(profile.g.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn trivial_exit_time() {
        let comb = Comb::log(1.0).unwrap();
        let x = Vertex::new(7, 1);
        assert_eq!(expected_exit_time_direct(&comb, x, &[x]).unwrap(), 1.0);
    }

    #[test]
    fn interval_exit_time_exact() {
        let line = Comb::new(CombSpec::line());
        for m in [1i64, 2, 7, 30] {
            let interior = segment(-m, m);
            let times = exit_times_exact(&line, &interior).unwrap();
            let centre = &times[m as usize];
            assert_eq!(centre.to_i64(), Some((m + 1) * (m + 1)));
            assert!(centre.is_integer());
        }
    }

    #[test]
    fn errors() {
        let comb = Comb::log(1.0).unwrap();
        let interior = segment(0, 3);
        assert!(resistance_to_boundary(&comb, Vertex::backbone(9), &interior).is_err());
        assert!(resistance_to_boundary(&comb, Vertex::ORIGIN, &[]).is_err());
        assert!(FusedNetwork::new(&comb, vec![Vertex::new(0, 1)]).is_err());
    }

    #[test]
    fn far_boundary_recovers_distance() {
        // On a bare line the only competing route runs through the fused
        // boundary, and its resistance grows with the window.
        let line = Comb::new(CombSpec::line());
        let net = FusedNetwork::new(&line, segment(-600_000, 600_000)).unwrap();
        let r = net
            .fused_pair_resistance(Vertex::backbone(0), Vertex::backbone(1))
            .unwrap();
        assert!((r - 1.0).abs() < 1e-6, "{r}");

        let comb = Comb::log(1.0).unwrap();
        let x = Vertex::new(50, 0);
        let y = Vertex::new(53, 1);
        let d = comb.distance(x, y).unwrap() as f64;
        let mut last = 0.0;
        for radius in [50, 500, 2000] {
            let net = FusedNetwork::ball(&comb, x, radius).unwrap();
            let r = net.fused_pair_resistance(x, y).unwrap();
            assert!(r <= d + 1e-9 && r > last);
            last = r;
        }
        assert!(d - last < 1e-2, "{last} vs {d}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fused_resistance_properties(alpha in 0.5f64..2.0, n in 0i64..120, r in 1u64..12, pick in 0usize..1000) {
            let comb = Comb::log(alpha).unwrap();
            let x = Vertex::backbone(n);
            let net = FusedNetwork::ball(&comb, x, r).unwrap();
            let y = net.interior()[pick % net.interior().len()];
            let rxy = net.fused_pair_resistance(x, y).unwrap();
            prop_assert!(rxy <= comb.distance(x, y).unwrap() as f64 + 1e-9);
            let rx = net.resistance_to_boundary(x).unwrap();
            let ry = net.resistance_to_boundary(y).unwrap();
            prop_assert!(ry >= rx - rxy - 1e-9);
            // Monotone in the interior set.
            let bigger = FusedNetwork::ball(&comb, x, r + 3).unwrap();
            prop_assert!(bigger.resistance_to_boundary(x).unwrap() >= rx - 1e-12);
            let dense = exit_times_dense(&comb, net.interior()).unwrap();
            let forest = exit_times(&comb, net.interior()).unwrap();
            for (a, b) in dense.iter().zip(&forest) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }
}
