use crate::error::{Error, Result};
use crate::graph::{Comb, Region, Vertex};

use super::DistVector;

/// Distinct starts with multiplicities.
fn group(starts: &[Vertex]) -> Vec<(Vertex, i32)> {
    let mut out: Vec<(Vertex, i32)> = Vec::new();
    for &s in starts {
        match out.iter_mut().find(|(v, _)| *v == s) {
            Some((_, k)) => *k += 1,
            None => out.push((s, 1)),
        }
    }
    out
}

fn meet(laws: &[(DistVector<f64>, i32)]) -> f64 {
    let (first, k0) = &laws[0];
    first
        .iter()
        .map(|(w, &m)| {
            let mut p = m.powi(*k0);
            for (d, k) in &laws[1..] {
                if p == 0.0 {
                    break;
                }
                p *= d.prob(w).powi(*k);
            }
            p
        })
        .sum()
}

/// `P(X^1_j = ... = X^k_j [, all alive])` for `j = 0..=n_max`, for
/// independent walkers started at `starts`.
pub fn collision_series(
    comb: &Comb,
    starts: &[Vertex],
    n_max: usize,
    killed_on: Option<&Region>,
) -> Result<Vec<f64>> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one walker is required".into(),
        ));
    }
    let mut laws = group(starts)
        .into_iter()
        .map(|(s, k)| Ok((DistVector::point(comb, s, killed_on.cloned())?, k)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(meet(&laws));
    for _ in 0..n_max {
        for (d, _) in laws.iter_mut() {
            *d = d.step();
        }
        out.push(meet(&laws));
    }
    Ok(out)
}

pub fn k_collision_probability(
    comb: &Comb,
    starts: &[Vertex],
    n: usize,
    killed_on: Option<&Region>,
) -> Result<f64> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one walker is required".into(),
        ));
    }
    let laws = group(starts)
        .into_iter()
        .map(|(s, k)| {
            Ok((
                DistVector::point(comb, s, killed_on.cloned())?.advance(n),
                k,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(meet(&laws))
}

pub fn triple_collision_probability(
    comb: &Comb,
    x: Vertex,
    y: Vertex,
    z: Vertex,
    n: usize,
    killed_on: Option<&Region>,
) -> Result<f64> {
    k_collision_probability(comb, &[x, y, z], n, killed_on)
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    #[test]
    fn trivial_cases() {
        let comb = Comb::log(1.0).unwrap();
        let o = Vertex::ORIGIN;
        assert_eq!(
            triple_collision_probability(&comb, o, o, o, 0, None).unwrap(),
            1.0
        );
        assert_eq!(
            triple_collision_probability(&comb, o, o, Vertex::backbone(2), 0, None).unwrap(),
            0.0
        );
        assert!((k_collision_probability(&comb, &[o], 7, None).unwrap() - 1.0).abs() < 1e-15);
        let strip = Region::strip(1);
        let survive = k_collision_probability(&comb, &[o], 1, Some(&strip)).unwrap();
        assert_eq!(survive, 1.0);
        let survive = k_collision_probability(&comb, &[o], 2, Some(&strip)).unwrap();
        assert_eq!(survive, 0.5);
        assert!(k_collision_probability(&comb, &[o; 4], 5, None).unwrap() > 0.0);
        let mixed = [o, o, o, Vertex::backbone(1)];
        assert_eq!(
            k_collision_probability(&comb, &mixed, 5, None).unwrap(),
            0.0
        );
        assert_eq!(
            triple_collision_probability(&comb, o, o, Vertex::backbone(1), 6, None).unwrap(),
            0.0
        );
        assert!(k_collision_probability(&comb, &[], 1, None).is_err());
    }

    #[test]
    fn two_step_enumeration() {
        // Enumerate all 2-step paths from the origin by hand.
        let comb = Comb::log(1.0).unwrap();
        let mut law: HashMap<Vertex, f64> = HashMap::new();
        for a in comb.neighbors(Vertex::ORIGIN).unwrap() {
            let p1 = 0.5;
            let nb = comb.neighbors(a).unwrap();
            for b in &nb {
                *law.entry(*b).or_default() += p1 / nb.len() as f64;
            }
        }
        assert_eq!(law[&Vertex::ORIGIN], 0.5);
        assert_eq!(law[&Vertex::backbone(2)], 0.25);
        let want3: f64 = law.values().map(|p| p.powi(3)).sum();
        let want4: f64 = law.values().map(|p| p.powi(4)).sum();
        let o = Vertex::ORIGIN;
        assert!(
            (triple_collision_probability(&comb, o, o, o, 2, None).unwrap() - want3).abs() < 1e-15
        );
        assert!((k_collision_probability(&comb, &[o; 4], 2, None).unwrap() - want4).abs() < 1e-15);
        let series = collision_series(&comb, &[o; 3], 2, None).unwrap();
        assert_eq!(series[0], 1.0);
        assert!((series[2] - want3).abs() < 1e-15);
    }
}
