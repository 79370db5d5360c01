//! Exact moments and laws of collision counts.
//!
//! A counting problem fixes `k` walkers, a region they must stay alive in, a
//! target set and a time window; the count `H` is the number of times `n` in
//! the window at which all walkers sit on the same target vertex with none of
//! them having left the region. Once all walkers share a vertex their futures
//! are independent copies started there, so every joint quantity reduces to
//! single-walker laws: no product chain is ever built.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Comb, CombSpec, Region, Strip, Vertex};

use super::DistVector;

/// Default budget for exact computations, in elementary operations.
pub const DEFAULT_WORK_CAP: u128 = 4_000_000_000;

/// `floor(c2 (1 - eps) N^2 log^alpha N)`.
pub fn t1(spec: &CombSpec, n: u64, eps: f64, c2: f64) -> usize {
    (c2 * (1.0 - eps) * (n as f64).powi(2) * spec.log_power(n as f64))
        .floor()
        .max(0.0) as usize
}

/// `floor(delta N^2 log^alpha N)`.
pub fn t2(spec: &CombSpec, n: u64, delta: f64) -> usize {
    (delta * (n as f64).powi(2) * spec.log_power(n as f64))
        .floor()
        .max(0.0) as usize
}

/// Integer heights in `[eps log^alpha(N/2), 2 eps log^alpha(N/2)]`.
pub fn h1_height_band(spec: &CombSpec, n: u64, eps: f64) -> (u64, u64) {
    let l = spec.log_power(n as f64 / 2.0);
    let lo = (eps * l - 1e-12).ceil().max(0.0) as u64;
    let hi = (2.0 * eps * l + 1e-12).floor().max(0.0) as u64;
    (lo, hi)
}

/// Sites `(w, l)` with `N/2 < w <= N` and `l` in the height band.
pub fn h1_target(comb: &Comb, n: u64, eps: f64) -> Vec<Vertex> {
    let (lo, hi) = h1_height_band(comb.spec(), n, eps);
    let mut out = Vec::new();
    for w in (n / 2 + 1)..=n {
        let top = comb.tooth_height(w as i64).min(hi);
        out.extend((lo..=top).map(|l| Vertex::new(w as i64, l)));
    }
    out
}

/// All vertices with `inner < |n| <= outer`.
pub fn annulus(comb: &Comb, inner: u64, outer: u64) -> Vec<Vertex> {
    let outer = outer as i64;
    let inner = inner as i64;
    comb.region_vertices(&Region::strip(outer as u64))
        .into_iter()
        .filter(|v| v.n.abs() > inner)
        .collect()
}

#[derive(Clone, Debug)]
pub struct CountingProblem {
    pub comb: Comb,
    pub starts: Vec<Vertex>,
    pub alive: Region,
    pub target: Vec<Vertex>,
    /// Counted times are `t_lo..=t_hi`.
    pub t_lo: usize,
    pub t_hi: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
}

impl Moments {
    pub fn variance(&self) -> f64 {
        (self.second - self.mean * self.mean).max(0.0)
    }
}

fn check_starts(starts: &[Vertex], strip: Strip) -> Result<()> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one walker is required".into(),
        ));
    }
    if let Some(v) = starts.iter().find(|v| !strip.contains(**v)) {
        return Err(Error::Domain(format!(
            "start {v} lies outside |n| <= {}",
            strip.half_width
        )));
    }
    Ok(())
}

impl CountingProblem {
    /// Collisions on the high band of the teeth in `(N/2, N]` up to `T1`,
    /// before any walker leaves `V_{hN}`.
    pub fn h1(comb: &Comb, n: u64, eps: f64, h: u64, c2: f64, starts: &[Vertex]) -> Result<Self> {
        check_scale(n, h)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {eps}"
            )));
        }
        check_starts(starts, Strip::new(n))?;
        for s in starts {
            comb.check(*s)?;
        }
        let target = h1_target(comb, n, eps);
        if target.is_empty() {
            let (lo, hi) = h1_height_band(comb.spec(), n, eps);
            return Err(Error::EmptyTargetRegion(format!(
                "no integer height in [{lo}, {hi}] fits on the teeth in ({}, {n}] for eps={eps}",
                n / 2
            )));
        }
        Ok(CountingProblem {
            comb: comb.clone(),
            starts: starts.to_vec(),
            alive: Region::strip(h * n),
            target,
            t_lo: 1,
            t_hi: t1(comb.spec(), n, eps, c2),
        })
    }

    /// Collisions in `V_{2N} \ V_{N/2}` up to `T2`, before any walker leaves
    /// `V_{hN}`.
    pub fn h2(comb: &Comb, n: u64, delta: f64, h: u64, starts: &[Vertex]) -> Result<Self> {
        check_scale(n, h)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        check_starts(starts, Strip::new(n))?;
        for s in starts {
            comb.check(*s)?;
        }
        Ok(CountingProblem {
            comb: comb.clone(),
            starts: starts.to_vec(),
            alive: Region::strip(h * n),
            target: annulus(comb, n / 2, 2 * n),
            t_lo: 1,
            t_hi: t2(comb.spec(), n, delta),
        })
    }

    /// Collisions anywhere before any walker leaves `V_{hN}`, up to `t_hi`.
    pub fn h_all(comb: &Comb, n: u64, h: u64, t_hi: usize, starts: &[Vertex]) -> Result<Self> {
        check_scale(n, h)?;
        check_starts(starts, Strip::new(h * n))?;
        for s in starts {
            comb.check(*s)?;
        }
        let alive = Region::strip(h * n);
        Ok(CountingProblem {
            target: comb.region_vertices(&alive),
            comb: comb.clone(),
            starts: starts.to_vec(),
            alive,
            t_lo: 1,
            t_hi,
        })
    }

    pub fn with_window(mut self, t_lo: usize, t_hi: usize) -> Self {
        self.t_lo = t_lo.max(1);
        self.t_hi = t_hi;
        self
    }

    fn alive_size(&self) -> u128 {
        self.comb.region_vertices(&self.alive).len() as u128
    }

    fn guard(&self, what: &str, needed: u128, cap: u128) -> Result<()> {
        if needed > cap {
            Err(Error::ResourceLimit {
                what: what.to_string(),
                needed,
                cap,
            })
        } else {
            Ok(())
        }
    }

    fn grouped_starts(&self) -> Vec<(Vertex, i32)> {
        let mut out: Vec<(Vertex, i32)> = Vec::new();
        for &s in &self.starts {
            match out.iter_mut().find(|(v, _)| *v == s) {
                Some((_, k)) => *k += 1,
                None => out.push((s, 1)),
            }
        }
        out
    }

    /// `a[n][i] = P(all walkers at target[i] at time n, all alive)` for
    /// `n = 0..=t_hi`.
    fn joint_occupation(&self) -> Result<Vec<Vec<f64>>> {
        let mut laws = self
            .grouped_starts()
            .into_iter()
            .map(|(s, k)| {
                Ok((
                    DistVector::<f64>::point(&self.comb, s, Some(self.alive.clone()))?,
                    k,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(self.t_hi + 1);
        for n in 0..=self.t_hi {
            if n > 0 {
                for (d, _) in laws.iter_mut() {
                    *d = d.step();
                }
            }
            out.push(
                self.target
                    .iter()
                    .map(|&w| laws.iter().map(|(d, k)| d.prob(w).powi(*k)).product())
                    .collect(),
            );
        }
        Ok(out)
    }

    /// `g[j][i][l] = P^{target[i]}(X_j = target[l], alive)^k` for `j = 0..=t_hi`.
    fn return_kernel(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        let k = self.starts.len() as i32;
        let span = self.t_hi;
        let mut g = vec![vec![vec![0.0; self.target.len()]; self.target.len()]; span + 1];
        for (i, &w) in self.target.iter().enumerate() {
            let mut d = DistVector::<f64>::point(&self.comb, w, Some(self.alive.clone()))?;
            for (j, gj) in g.iter_mut().enumerate() {
                if j > 0 {
                    d = d.step();
                }
                for (l, &w2) in self.target.iter().enumerate() {
                    gj[i][l] = d.prob(w2).powi(k);
                }
            }
        }
        Ok(g)
    }

    /// `E[H]`.
    pub fn expectation(&self) -> Result<f64> {
        let a = self.joint_occupation()?;
        Ok(self.window().map(|n| a[n].iter().sum::<f64>()).sum())
    }

    /// `P(counted collision at time n)` for `n = 0..=t_hi` (zero outside the window).
    pub fn collision_rates(&self) -> Result<Vec<f64>> {
        let a = self.joint_occupation()?;
        Ok((0..=self.t_hi)
            .map(|n| {
                if n >= self.t_lo {
                    a[n].iter().sum()
                } else {
                    0.0
                }
            })
            .collect())
    }

    fn window(&self) -> std::ops::RangeInclusive<usize> {
        self.t_lo..=self.t_hi
    }

    /// Work estimate for [`Self::moments`].
    pub fn moments_cost(&self) -> u128 {
        (self.target.len() + self.starts.len()) as u128
            * (self.t_hi as u128 + 1)
            * self.alive_size()
    }

    /// Work estimate for [`Self::law`].
    pub fn law_cost(&self) -> u128 {
        let t = self.target.len() as u128;
        let span = self.t_hi as u128 + 1;
        self.moments_cost() + t * t * span * span
    }

    /// `E[H]` and `E[H^2]`, using
    /// `E[H^2] = E[H] + 2 sum_n sum_w a_n(w) sum_{j=1}^{t_hi-n} f_j(w)` with
    /// `f_j(w) = sum_{w'} P^w(X_j = w', alive)^k`.
    pub fn moments(&self, cap: u128) -> Result<Moments> {
        self.guard("exact second moment", self.moments_cost(), cap)?;
        let a = self.joint_occupation()?;
        let k = self.starts.len() as i32;
        let span = self.t_hi;
        // tail[i][m] = sum_{j=1}^{m} f_j(target[i]).
        let mut tail = vec![vec![0.0; span + 1]; self.target.len()];
        for (i, &w) in self.target.iter().enumerate() {
            let mut d = DistVector::<f64>::point(&self.comb, w, Some(self.alive.clone()))?;
            for m in 1..=span {
                d = d.step();
                let f: f64 = self.target.iter().map(|&w2| d.prob(w2).powi(k)).sum();
                tail[i][m] = tail[i][m - 1] + f;
            }
        }
        let mut mean = 0.0;
        let mut cross = 0.0;
        for n in self.window() {
            for (i, &p) in a[n].iter().enumerate() {
                mean += p;
                cross += p * tail[i][self.t_hi - n];
            }
        }
        Ok(Moments {
            mean,
            second: mean + 2.0 * cross,
        })
    }

    /// Exact law of `H`: entry `j` is `P(H = j)`.
    pub fn law(&self, cap: u128) -> Result<Vec<f64>> {
        self.guard("exact collision-count law", self.law_cost(), cap)?;
        let a = self.joint_occupation()?;
        let g = self.return_kernel()?;
        let t = self.target.len();
        let span = self.t_hi;
        let lo = self.t_lo;

        // First counted collision: a_n = sum_{lo<=m<=n} phi_m g_{n-m}.
        let mut phi = vec![vec![0.0; t]; span + 1];
        for n in self.window() {
            for l in 0..t {
                let mut v = a[n][l];
                for m in lo..n {
                    for i in 0..t {
                        v -= phi[m][i] * g[n - m][i][l];
                    }
                }
                phi[n][l] = v.max(0.0);
            }
        }
        // Next counted collision after one at target[i]:
        // g_j = sum_{1<=q<=j} rho_q g_{j-q}.
        let mut rho = vec![vec![vec![0.0; t]; t]; span + 1];
        for j in 1..=span {
            for i in 0..t {
                for l in 0..t {
                    let mut v = g[j][i][l];
                    for q in 1..j {
                        for m in 0..t {
                            v -= rho[q][i][m] * g[j - q][m][l];
                        }
                    }
                    rho[j][i][l] = v.max(0.0);
                }
            }
        }

        let mut at_least = vec![1.0];
        let mut current = phi;
        loop {
            let p: f64 = current[lo..].iter().flatten().sum();
            if p < 1e-30 || at_least.len() > span + 1 {
                break;
            }
            at_least.push(p.min(*at_least.last().unwrap()));
            let mut next = vec![vec![0.0; t]; span + 1];
            for n in lo..=span {
                for m in lo..n {
                    for i in 0..t {
                        let c = current[m][i];
                        if c == 0.0 {
                            continue;
                        }
                        for l in 0..t {
                            next[n][l] += c * rho[n - m][i][l];
                        }
                    }
                }
            }
            current = next;
        }
        let mut law: Vec<f64> = at_least
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .collect();
        law.push(*at_least.last().unwrap());
        while law.len() > 1 && *law.last().unwrap() == 0.0 {
            law.pop();
        }
        Ok(law)
    }
}

fn check_scale(n: u64, h: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "N must be at least 2, got {n}"
        )));
    }
    if h < 2 {
        return Err(Error::InvalidParameter(format!(
            "h must be at least 2, got {h}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    /// Joint chain of all walkers, enumerated state by state.
    fn joint_brute(p: &CountingProblem) -> (f64, f64, Vec<f64>) {
        // State: positions, count so far, alive flag. Dead walkers are merged.
        type State = (Vec<Vertex>, usize);
        let target: std::collections::HashSet<Vertex> = p.target.iter().copied().collect();
        let mut law: HashMap<State, f64> = HashMap::from([((p.starts.clone(), 0), 1.0)]);
        let mut dead: HashMap<usize, f64> = HashMap::new();
        for n in 1..=p.t_hi {
            let mut next: HashMap<State, f64> = HashMap::new();
            for ((pos, c), m) in law {
                let mut moves: Vec<(Vec<Vertex>, f64)> = vec![(Vec::new(), m)];
                for v in &pos {
                    let nb = p.comb.neighbors(*v).unwrap();
                    let mut grown = Vec::new();
                    for (prefix, q) in &moves {
                        for w in &nb {
                            let mut pre = prefix.clone();
                            pre.push(*w);
                            grown.push((pre, q / nb.len() as f64));
                        }
                    }
                    moves = grown;
                }
                for (new_pos, q) in moves {
                    if new_pos.iter().all(|w| p.alive.contains(*w)) {
                        let hit = n >= p.t_lo
                            && new_pos.iter().all(|w| *w == new_pos[0])
                            && target.contains(&new_pos[0]);
                        *next.entry((new_pos, c + usize::from(hit))).or_default() += q;
                    } else {
                        *dead.entry(c).or_default() += q;
                    }
                }
            }
            law = next;
        }
        let mut dist = vec![0.0; p.t_hi + 2];
        for ((_, c), m) in law {
            dist[c] += m;
        }
        for (c, m) in dead {
            dist[c] += m;
        }
        let mean = dist.iter().enumerate().map(|(c, m)| c as f64 * m).sum();
        let second = dist
            .iter()
            .enumerate()
            .map(|(c, m)| (c * c) as f64 * m)
            .sum();
        while dist.len() > 1 && *dist.last().unwrap() == 0.0 {
            dist.pop();
        }
        (mean, second, dist)
    }

    fn toy(starts: &[Vertex], t_hi: usize) -> CountingProblem {
        let comb = Comb::log(1.0).unwrap();
        CountingProblem {
            alive: Region::strip(6),
            target: annulus(&comb, 1, 5),
            comb,
            starts: starts.to_vec(),
            t_lo: 1,
            t_hi,
        }
    }

    #[test]
    fn matches_joint_enumeration() {
        for starts in [
            vec![Vertex::backbone(2); 3],
            vec![Vertex::backbone(1), Vertex::backbone(3), Vertex::new(5, 1)],
            vec![Vertex::backbone(2), Vertex::backbone(4)],
        ] {
            let p = toy(&starts, 9);
            let (mean, second, dist) = joint_brute(&p);
            let m = p.moments(DEFAULT_WORK_CAP).unwrap();
            assert!((m.mean - mean).abs() < 1e-13, "{} vs {mean}", m.mean);
            assert!(
                (m.second - second).abs() < 1e-12,
                "{} vs {second}",
                m.second
            );
            assert!((p.expectation().unwrap() - mean).abs() < 1e-13);
            let law = p.law(DEFAULT_WORK_CAP).unwrap();
            assert_eq!(law.len(), dist.len());
            for (a, b) in law.iter().zip(&dist) {
                assert!((a - b).abs() < 1e-12, "{law:?} vs {dist:?}");
            }
            assert!(m.second >= m.mean);
        }
    }

    #[test]
    fn shifted_window() {
        let p = toy(&[Vertex::backbone(2); 3], 9).with_window(4, 9);
        let (mean, second, dist) = joint_brute(&p);
        let m = p.moments(DEFAULT_WORK_CAP).unwrap();
        assert!((m.mean - mean).abs() < 1e-13);
        assert!((m.second - second).abs() < 1e-12);
        let law = p.law(DEFAULT_WORK_CAP).unwrap();
        for (a, b) in law.iter().zip(&dist) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn target_construction() {
        let comb = Comb::log(1.0).unwrap();
        let starts = [Vertex::backbone(2); 3];
        let err = CountingProblem::h1(&comb, 4, 0.3, 4, 0.5, &starts).unwrap_err();
        assert!(matches!(err, Error::EmptyTargetRegion(_)));
        let s = h1_target(&comb, 16, 0.3);
        assert_eq!(s, (9..=16).map(|w| Vertex::new(w, 1)).collect::<Vec<_>>());
        // ln 8 = 2.079: eps = 0.1 admits no integer height in [0.21, 0.42].
        assert!(h1_target(&comb, 16, 0.1).is_empty());
        let p = CountingProblem::h1(&comb, 16, 0.3, 4, 0.5, &starts).unwrap();
        assert_eq!(p.t_hi, (0.5 * 0.7 * 256.0 * 16f64.ln()).floor() as usize);
        let odd = [
            Vertex::backbone(2),
            Vertex::backbone(3),
            Vertex::backbone(2),
        ];
        let p = CountingProblem::h1(&comb, 16, 0.3, 4, 0.5, &odd).unwrap();
        assert_eq!(p.expectation().unwrap(), 0.0);
        let p = CountingProblem::h2(&comb, 16, 0.05, 4, &starts)
            .unwrap()
            .with_window(1, 0);
        assert_eq!(p.expectation().unwrap(), 0.0);
        assert!(CountingProblem::h2(&comb, 16, 0.05, 1, &starts).is_err());
        assert!(CountingProblem::h2(&comb, 16, 0.05, 4, &[Vertex::backbone(40)]).is_err());
    }

    #[test]
    fn resource_guard() {
        let comb = Comb::log(1.0).unwrap();
        let p = CountingProblem::h1(&comb, 16, 0.3, 4, 0.5, &[Vertex::backbone(10); 3]).unwrap();
        assert!(matches!(p.moments(10), Err(Error::ResourceLimit { .. })));
        assert!(matches!(p.law(10), Err(Error::ResourceLimit { .. })));
    }
}
