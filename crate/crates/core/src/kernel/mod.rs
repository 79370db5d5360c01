//! Exact transition densities by propagation of walker laws.
//!
//! `p_n(x, y) = P^x(X_n = y) / deg(y)`; the killed version `p_n^B` only counts
//! paths that stay inside `B` up to time `n`.

mod collisions;
mod dist;
mod interval;
pub mod moments;

use serde::Serialize;

pub use collisions::{collision_series, k_collision_probability, triple_collision_probability};
pub use dist::{six_pow, DistVector, Mass, SixAdic};
pub use interval::{interval_kernel, interval_kernel_rows};

use crate::error::Result;
use crate::graph::{Comb, Region, Vertex};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub n: usize,
    pub x: Vertex,
    pub y: Vertex,
    pub killed_on: Option<Region>,
    /// `P^x(tau_B > n)`, or 1 for the free walk.
    pub survival_mass: f64,
    pub support_size: usize,
}

/// Propagate the law of a walker started at `x` for `n` steps.
pub fn propagate(
    comb: &Comb,
    x: Vertex,
    n: usize,
    killed_on: Option<&Region>,
) -> Result<DistVector<f64>> {
    Ok(DistVector::point(comb, x, killed_on.cloned())?.advance(n))
}

pub fn kernel(
    comb: &Comb,
    x: Vertex,
    y: Vertex,
    n: usize,
    killed_on: Option<&Region>,
) -> Result<KernelValue> {
    comb.check(y)?;
    let d = propagate(comb, x, n, killed_on)?;
    Ok(KernelValue {
        value: d.kernel_at(y),
        n,
        x,
        y,
        killed_on: killed_on.cloned(),
        survival_mass: d.total(),
        support_size: d.support_size(),
    })
}

/// `p_{2k}(x, x)` for `0 <= 2k <= n_max`.
pub fn on_diagonal_series(
    comb: &Comb,
    x: Vertex,
    n_max: usize,
    killed_on: Option<&Region>,
) -> Result<Vec<f64>> {
    let mut d = DistVector::<f64>::point(comb, x, killed_on.cloned())?;
    let mut out = Vec::with_capacity(n_max / 2 + 1);
    for k in 0..=n_max / 2 {
        if k > 0 {
            d = d.step();
        }
        out.push(d.self_pairing());
    }
    Ok(out)
}

/// `P^x(T_y = j, tau_B > j)` for `j = 0..=n_max`, where `T_y` is the first
/// hitting time of `y`.
pub fn first_hit_profile(
    comb: &Comb,
    x: Vertex,
    y: Vertex,
    n_max: usize,
    killed_on: Option<&Region>,
) -> Result<Vec<f64>> {
    comb.check(y)?;
    let mut d = DistVector::<f64>::point(comb, x, killed_on.cloned())?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(d.take(y));
    for _ in 0..n_max {
        d = d.step();
        out.push(d.take(y));
    }
    Ok(out)
}
