use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::Result;
use crate::graph::{Comb, Region, Vertex};

/// Scalar carried by a [`DistVector`].
pub trait Mass: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn unit() -> Self;
    fn is_zero(&self) -> bool;
    /// The amount sent along each edge out of a vertex of degree `deg`.
    fn share(&self, deg: u32) -> Self;
    fn accumulate(&mut self, other: &Self);
    /// Probability represented after `steps` steps.
    fn probability(&self, steps: usize) -> f64;
}

impl Mass for f64 {
    fn zero() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn share(&self, deg: u32) -> Self {
        self / f64::from(deg)
    }
    #[inline]
    fn accumulate(&mut self, other: &Self) {
        *self += other
    }
    fn probability(&self, _steps: usize) -> f64 {
        *self
    }
}

/// Exact probability scaled by `6^steps`. Every degree divides 6, so the
/// scaled mass stays an integer.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SixAdic(pub BigUint);

impl SixAdic {
    pub fn to_rational(&self, steps: usize) -> BigRational {
        BigRational::new(BigInt::from(self.0.clone()), BigInt::from(six_pow(steps)))
    }
}

pub fn six_pow(steps: usize) -> BigUint {
    BigUint::from(6u32).pow(steps as u32)
}

impl Mass for SixAdic {
    fn zero() -> Self {
        SixAdic(BigUint::zero())
    }
    fn unit() -> Self {
        SixAdic(BigUint::one())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn share(&self, deg: u32) -> Self {
        SixAdic(&self.0 * (6 / deg))
    }
    fn accumulate(&mut self, other: &Self) {
        self.0 += &other.0
    }
    fn probability(&self, steps: usize) -> f64 {
        self.to_rational(steps).to_f64().unwrap_or(f64::NAN)
    }
}

/// Law of a walker after `step_index` steps, optionally killed on leaving a
/// region. Storage is a run of backbone columns, each holding a contiguous
/// range of heights, so no window beyond the reachable set is allocated.
#[derive(Clone, Debug)]
pub struct DistVector<M> {
    comb: Comb,
    killed_on: Option<Region>,
    step_index: usize,
    n_lo: i64,
    x_lo: Vec<u64>,
    offsets: Vec<usize>,
    mass: Vec<M>,
}

impl<M: Mass> DistVector<M> {
    /// Unit mass at `start`. A start outside the killing region is absorbed at
    /// time zero, giving the empty vector.
    pub fn point(comb: &Comb, start: Vertex, killed_on: Option<Region>) -> Result<Self> {
        comb.check(start)?;
        let alive = killed_on.as_ref().is_none_or(|r| r.contains(start));
        let mut d = DistVector {
            comb: comb.clone(),
            killed_on,
            step_index: 0,
            n_lo: start.n,
            x_lo: Vec::new(),
            offsets: vec![0],
            mass: Vec::new(),
        };
        if alive {
            d.x_lo.push(start.x);
            d.offsets.push(1);
            d.mass.push(M::unit());
        }
        Ok(d)
    }

    pub fn comb(&self) -> &Comb {
        &self.comb
    }

    pub fn killed_on(&self) -> Option<&Region> {
        self.killed_on.as_ref()
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    fn columns(&self) -> usize {
        self.x_lo.len()
    }

    #[inline]
    fn slot(&self, v: Vertex) -> Option<usize> {
        let c = v.n.checked_sub(self.n_lo)?;
        if c < 0 || c as usize >= self.columns() {
            return None;
        }
        let c = c as usize;
        let lo = self.x_lo[c];
        let len = self.offsets[c + 1] - self.offsets[c];
        if v.x < lo || v.x - lo >= len as u64 {
            return None;
        }
        Some(self.offsets[c] + (v.x - lo) as usize)
    }

    pub fn mass_at(&self, v: Vertex) -> M {
        self.slot(v).map_or_else(M::zero, |i| self.mass[i].clone())
    }

    /// Nonzero entries in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Vertex, &M)> + '_ {
        (0..self.columns()).flat_map(move |c| {
            let n = self.n_lo + c as i64;
            let lo = self.x_lo[c];
            self.mass[self.offsets[c]..self.offsets[c + 1]]
                .iter()
                .enumerate()
                .filter(|(_, m)| !m.is_zero())
                .map(move |(k, m)| (Vertex::new(n, lo + k as u64), m))
        })
    }

    pub fn support_size(&self) -> usize {
        self.mass.iter().filter(|m| !m.is_zero()).count()
    }

    pub fn total(&self) -> M {
        let mut t = M::zero();
        for m in &self.mass {
            t.accumulate(m);
        }
        t
    }

    pub fn is_empty(&self) -> bool {
        self.mass.iter().all(M::is_zero)
    }

    fn alive(&self, v: Vertex) -> bool {
        self.killed_on.as_ref().is_none_or(|r| r.contains(v))
    }

    /// One step of the walk: mass at `v` is split evenly among its
    /// neighbours, and mass landing outside the killing region is dropped.
    pub fn step(&self) -> Self {
        let cols = self.columns();
        if cols == 0 {
            let mut d = self.clone();
            d.step_index += 1;
            return d;
        }
        let mut new_lo = self.n_lo - 1;
        let mut new_hi = self.n_lo + cols as i64;
        if let Some(r) = &self.killed_on {
            let (a, b) = r.n_extent();
            new_lo = new_lo.max(a);
            new_hi = new_hi.min(b);
        }

        let old_range = |n: i64| -> Option<(u64, u64)> {
            let c = n - self.n_lo;
            if c < 0 || c as usize >= cols {
                return None;
            }
            let c = c as usize;
            let len = (self.offsets[c + 1] - self.offsets[c]) as u64;
            (len > 0).then(|| (self.x_lo[c], self.x_lo[c] + len - 1))
        };

        let width = (new_hi - new_lo + 1).max(0) as usize;
        let mut x_lo = Vec::with_capacity(width);
        let mut offsets = Vec::with_capacity(width + 1);
        offsets.push(0usize);
        for n in new_lo..=new_hi {
            let mut lo = u64::MAX;
            let mut hi = 0u64;
            if let Some((a, b)) = old_range(n) {
                lo = a.saturating_sub(1);
                hi = b + 1;
            }
            let side = |m: i64| old_range(m).is_some_and(|(a, _)| a == 0);
            if side(n - 1) || side(n + 1) {
                lo = 0;
            }
            hi = hi.min(self.comb.tooth_height(n));
            if let Some(r) = &self.killed_on {
                match r.column(n) {
                    Some((rl, rh)) => {
                        lo = lo.max(rl);
                        hi = hi.min(rh);
                    }
                    None => lo = u64::MAX,
                }
            }
            let len = if lo == u64::MAX || lo > hi {
                0
            } else {
                (hi - lo + 1) as usize
            };
            x_lo.push(if len == 0 { 0 } else { lo });
            offsets.push(offsets.last().unwrap() + len);
        }

        let mut next = DistVector {
            comb: self.comb.clone(),
            killed_on: self.killed_on.clone(),
            step_index: self.step_index + 1,
            n_lo: new_lo,
            x_lo,
            offsets,
            mass: Vec::new(),
        };
        next.mass = vec![M::zero(); *next.offsets.last().unwrap()];

        for c in 0..cols {
            let n = self.n_lo + c as i64;
            let lo = self.x_lo[c];
            for (k, m) in self.mass[self.offsets[c]..self.offsets[c + 1]]
                .iter()
                .enumerate()
            {
                if m.is_zero() {
                    continue;
                }
                let v = Vertex::new(n, lo + k as u64);
                let share = m.share(self.comb.degree_unchecked(v));
                for w in self.comb.neighbors_unchecked(v) {
                    if !self.alive(w) {
                        continue;
                    }
                    let i = next
                        .slot(w)
                        .expect("neighbour outside the propagated range");
                    next.mass[i].accumulate(&share);
                }
            }
        }
        next.trim();
        next
    }

    fn trim(&mut self) {
        let empty = |c: usize, s: &Self| s.offsets[c + 1] == s.offsets[c];
        let mut lead = 0;
        while lead < self.columns() && empty(lead, self) {
            lead += 1;
        }
        let mut cols = self.columns();
        while cols > lead && empty(cols - 1, self) {
            cols -= 1;
        }
        if lead == 0 && cols == self.columns() {
            return;
        }
        if lead == cols {
            self.x_lo.clear();
            self.offsets = vec![0];
            self.mass.clear();
            return;
        }
        let base = self.offsets[lead];
        self.x_lo = self.x_lo[lead..cols].to_vec();
        self.offsets = self.offsets[lead..=cols].iter().map(|o| o - base).collect();
        self.n_lo += lead as i64;
        // Leading columns are empty, so the mass slice already starts at `base`.
        self.mass.truncate(base + *self.offsets.last().unwrap());
        self.mass.drain(..base);
    }

    /// Advance `steps` times.
    pub fn advance(mut self, steps: usize) -> Self {
        for _ in 0..steps {
            self = self.step();
        }
        self
    }

    /// Multiply every entry by `f`, applied through a closure so that exact
    /// masses can be rescaled too.
    pub fn map_masses(&mut self, mut f: impl FnMut(Vertex, &mut M)) {
        for c in 0..self.columns() {
            let n = self.n_lo + c as i64;
            let lo = self.x_lo[c];
            for k in self.offsets[c]..self.offsets[c + 1] {
                f(
                    Vertex::new(n, lo + (k - self.offsets[c]) as u64),
                    &mut self.mass[k],
                );
            }
        }
    }

    /// Remove and return the mass at `v`.
    pub fn take(&mut self, v: Vertex) -> M {
        match self.slot(v) {
            Some(i) => std::mem::replace(&mut self.mass[i], M::zero()),
            None => M::zero(),
        }
    }
}

impl DistVector<f64> {
    pub fn prob(&self, v: Vertex) -> f64 {
        self.mass_at(v)
    }

    /// `P(X_n = v) / deg(v)`.
    pub fn kernel_at(&self, v: Vertex) -> f64 {
        if !self.comb.contains(v) {
            return 0.0;
        }
        self.mass_at(v) / f64::from(self.comb.degree_unchecked(v))
    }

    /// `sum_w P^a(X_n = w) P^b(X_m = w) / deg(w)`, which by reversibility is
    /// `p_{n+m}(a, b)` for free walks and its killed analogue otherwise.
    pub fn pairing(&self, other: &Self) -> f64 {
        let (small, large) = if self.support_size() <= other.support_size() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .iter()
            .map(|(w, m)| m * large.mass_at(w) / f64::from(self.comb.degree_unchecked(w)))
            .sum()
    }

    /// `sum_w P(X_n = w)^2 / deg(w)`, i.e. `p_{2n}(start, start)`.
    pub fn self_pairing(&self) -> f64 {
        self.iter()
            .map(|(w, m)| m * m / f64::from(self.comb.degree_unchecked(w)))
            .sum()
    }
}

impl DistVector<SixAdic> {
    pub fn exact_prob(&self, v: Vertex) -> BigRational {
        self.mass_at(v).to_rational(self.step_index)
    }

    /// Exact `p_{2n}(start, start)`.
    pub fn exact_self_pairing(&self) -> BigRational {
        let mut num = BigRational::zero();
        for (w, m) in self.iter() {
            let sq = BigInt::from(&m.0 * &m.0);
            num += BigRational::new(sq, BigInt::from(self.comb.degree_unchecked(w)));
        }
        num / BigRational::from_integer(BigInt::from(six_pow(2 * self.step_index)))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;
    use crate::graph::CombSpec;

    /// Brute-force law by expanding the dense transition map step by step.
    fn brute(
        comb: &Comb,
        start: Vertex,
        steps: usize,
        region: Option<&Region>,
    ) -> HashMap<Vertex, f64> {
        let mut law = HashMap::from([(start, 1.0)]);
        for _ in 0..steps {
            let mut next = HashMap::new();
            for (v, m) in law {
                let nb = comb.neighbors(v).unwrap();
                for w in &nb {
                    if region.is_none_or(|r| r.contains(*w)) {
                        *next.entry(*w).or_insert(0.0) += m / nb.len() as f64;
                    }
                }
            }
            law = next;
        }
        law
    }

    #[test]
    fn first_steps() {
        let comb = Comb::log(1.0).unwrap();
        let d = DistVector::<f64>::point(&comb, Vertex::ORIGIN, None)
            .unwrap()
            .step();
        assert_eq!(
            d.iter().map(|(v, &m)| (v, m)).collect::<Vec<_>>(),
            vec![(Vertex::new(-1, 0), 0.5), (Vertex::new(1, 0), 0.5)]
        );
        let top = DistVector::<f64>::point(&comb, Vertex::new(10, 2), None)
            .unwrap()
            .step();
        assert_eq!(top.prob(Vertex::new(10, 1)), 1.0);
        assert_eq!(top.support_size(), 1);
        // Killed on |n| <= 1 from (1,0): the edge to (2,0) leaks.
        let killed =
            DistVector::<f64>::point(&comb, Vertex::new(1, 0), Some(Region::strip(1))).unwrap();
        let after = killed.step();
        assert!((after.total() - 0.5).abs() < 1e-15);
        assert_eq!(after.prob(Vertex::ORIGIN), 0.5);
    }

    #[test]
    fn exact_mode_matches_float() {
        let comb = Comb::log(2.0).unwrap();
        let start = Vertex::new(6, 1);
        let mut f = DistVector::<f64>::point(&comb, start, None).unwrap();
        let mut e = DistVector::<SixAdic>::point(&comb, start, None).unwrap();
        for _ in 0..25 {
            f = f.step();
            e = e.step();
        }
        assert_eq!(e.total().0, six_pow(25));
        for (v, m) in f.iter() {
            assert!((e.mass_at(v).probability(25) - m).abs() < 1e-15);
        }
        let exact = e.exact_self_pairing().to_f64().unwrap();
        assert!((exact - f.self_pairing()).abs() < 1e-15);
    }

    #[test]
    fn start_outside_region_is_absorbed() {
        let comb = Comb::log(1.0).unwrap();
        let d =
            DistVector::<f64>::point(&comb, Vertex::backbone(5), Some(Region::strip(2))).unwrap();
        assert!(d.is_empty());
        assert!(d.step().is_empty());
        assert!(DistVector::<f64>::point(&comb, Vertex::new(0, 1), None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_brute_force(alpha in 0.5f64..2.5, n in -30i64..30, x in 0u64..6, steps in 0usize..24, kill in proptest::option::of(1u64..12)) {
            let comb = Comb::log(alpha).unwrap();
            let start = Vertex::new(n, x.min(comb.tooth_height(n)));
            let region = kill.map(|w| Region::strip(w + n.unsigned_abs()));
            let mut d = DistVector::<f64>::point(&comb, start, region.clone()).unwrap();
            let mut totals = vec![d.total()];
            for _ in 0..steps {
                d = d.step();
                totals.push(d.total());
            }
            let want = brute(&comb, start, steps, region.as_ref());
            for (v, m) in d.iter() {
                prop_assert!((want.get(&v).copied().unwrap_or(0.0) - m).abs() < 1e-13);
                prop_assert_eq!(v.parity(), (start.parity() + steps as u8 % 2) % 2);
                prop_assert!(comb.distance(start, v).unwrap() <= steps as u64);
            }
            for (v, m) in want {
                prop_assert!((d.prob(v) - m).abs() < 1e-13);
            }
            if region.is_none() {
                prop_assert!((d.total() - 1.0).abs() < 1e-12);
            }
            prop_assert!(totals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }

        #[test]
        fn ball_killing(n in -20i64..20, x in 0u64..3, radius in 0u64..8, steps in 0usize..20) {
            let comb = Comb::new(CombSpec::poly(1.0).unwrap());
            let centre = Vertex::new(n, x.min(comb.tooth_height(n)));
            let region = Region::ball(centre, radius);
            let d = DistVector::<f64>::point(&comb, centre, Some(region.clone())).unwrap().advance(steps);
            let want = brute(&comb, centre, steps, Some(&region));
            for (v, m) in want {
                prop_assert!((d.prob(v) - m).abs() < 1e-13);
            }
        }
    }
}
