//! Comb graphs over the integer backbone.
//!
//! A comb is `Z` (the backbone, height 0) with a vertical path of
//! `tooth_height(n)` extra vertices attached at every backbone site `n`. The
//! graph is infinite and never materialized: every query is answered from the
//! [`CombSpec`] on demand. [`Comb`] wraps a spec together with a table of
//! precomputed heights for the hot paths.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex `(n, x)`: backbone coordinate `n`, height `x` on the tooth at `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub n: i64,
    pub x: u64,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { n: 0, x: 0 };

    pub const fn new(n: i64, x: u64) -> Self {
        Vertex { n, x }
    }

    pub const fn backbone(n: i64) -> Self {
        Vertex { n, x: 0 }
    }

    pub fn is_backbone(&self) -> bool {
        self.x == 0
    }

    /// `(n + x) mod 2`; flips at every step of a nearest-neighbour walk.
    pub fn parity(&self) -> u8 {
        (self.n.rem_euclid(2) as u64 + self.x % 2) as u8 % 2
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.x)
    }
}

impl FromStr for Vertex {
    type Err = Error;

    /// Accepts `n,x` or `(n,x)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = t.split(',');
        let bad = || Error::InvalidParameter(format!("cannot parse vertex from {s:?}"));
        let n = parts
            .next()
            .ok_or_else(bad)?
            .trim()
            .parse::<i64>()
            .map_err(|_| bad())?;
        let x = parts
            .next()
            .ok_or_else(bad)?
            .trim()
            .parse::<u64>()
            .map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Vertex { n, x })
    }
}

pub type HeightFn = Arc<dyn Fn(i64) -> u64 + Send + Sync>;

/// Tooth-height law of the comb.
#[derive(Clone)]
pub enum Family {
    /// `floor(log^alpha(|n| v 1))`.
    Log { alpha: f64 },
    /// `floor(|n|^alpha)`.
    Poly { alpha: f64 },
    /// Arbitrary heights.
    Custom(HeightFn),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Log { alpha } => write!(f, "Log {{ alpha: {alpha} }}"),
            Family::Poly { alpha } => write!(f, "Poly {{ alpha: {alpha} }}"),
            Family::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

// Rounding slack when flooring a height that is mathematically an integer.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct CombSpec {
    pub family: Family,
    /// Base of the logarithm in the `Log` family (natural log by default).
    pub log_base: f64,
}

impl CombSpec {
    pub fn log(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(CombSpec {
            family: Family::Log { alpha },
            log_base: std::f64::consts::E,
        })
    }

    pub fn poly(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(CombSpec {
            family: Family::Poly { alpha },
            log_base: std::f64::consts::E,
        })
    }

    pub fn custom<F>(height: F) -> Self
    where
        F: Fn(i64) -> u64 + Send + Sync + 'static,
    {
        CombSpec {
            family: Family::Custom(Arc::new(height)),
            log_base: std::f64::consts::E,
        }
    }

    /// The comb with no teeth at all, i.e. the integer line.
    pub fn line() -> Self {
        Self::custom(|_| 0)
    }

    pub fn with_log_base(mut self, base: f64) -> Result<Self> {
        if !(base.is_finite() && base > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "log base must exceed 1, got {base}"
            )));
        }
        self.log_base = base;
        Ok(self)
    }

    /// Exponent of the family; custom combs report 1.
    pub fn alpha(&self) -> f64 {
        match self.family {
            Family::Log { alpha } | Family::Poly { alpha } => alpha,
            Family::Custom(_) => 1.0,
        }
    }

    /// Logarithm in the configured base.
    pub fn log_of(&self, t: f64) -> f64 {
        if self.log_base == std::f64::consts::E {
            t.ln()
        } else {
            t.ln() / self.log_base.ln()
        }
    }

    /// `log^alpha(t)` in the configured base, clamped to 0 for `t <= 1`.
    pub fn log_power(&self, t: f64) -> f64 {
        if t <= 1.0 {
            0.0
        } else {
            self.log_of(t).powf(self.alpha())
        }
    }

    pub fn tooth_height(&self, n: i64) -> u64 {
        let m = n.unsigned_abs();
        match &self.family {
            Family::Log { alpha } => {
                if m <= 1 {
                    return 0;
                }
                let v = self.log_of(m as f64).powf(*alpha);
                (v + FLOOR_SLACK).floor() as u64
            }
            Family::Poly { alpha } => {
                if alpha.fract() == 0.0 && *alpha <= 64.0 {
                    m.saturating_pow(*alpha as u32)
                } else {
                    let v = (m as f64).powf(*alpha) + FLOOR_SLACK;
                    if v >= u64::MAX as f64 {
                        u64::MAX
                    } else {
                        v.floor() as u64
                    }
                }
            }
            Family::Custom(f) => f(n),
        }
    }

    /// Short human-readable tag, e.g. `log(alpha=1)`.
    pub fn describe(&self) -> String {
        match self.family {
            Family::Log { alpha } => format!("log(alpha={alpha})"),
            Family::Poly { alpha } => format!("poly(alpha={alpha})"),
            Family::Custom(_) => "custom".to_string(),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )))
    }
}

/// Vertices of `{ (n, x) : |n| <= half_width }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strip {
    pub half_width: u64,
}

impl Strip {
    pub fn new(half_width: u64) -> Self {
        Strip { half_width }
    }

    /// The strip `|n| <= t` for a real `t >= 0`.
    pub fn from_real(t: f64) -> Self {
        Strip {
            half_width: t.max(0.0).floor() as u64,
        }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.n.unsigned_abs() <= self.half_width
    }
}

/// A finite region used to kill walkers on exit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Strip(Strip),
    Ball { center: Vertex, radius: u64 },
}

impl Region {
    pub fn strip(half_width: u64) -> Self {
        Region::Strip(Strip::new(half_width))
    }

    pub fn ball(center: Vertex, radius: u64) -> Self {
        Region::Ball { center, radius }
    }

    /// Membership for an admissible vertex.
    pub fn contains(&self, v: Vertex) -> bool {
        match self.column(v.n) {
            Some((lo, hi)) => lo <= v.x && v.x <= hi,
            None => false,
        }
    }

    /// Range of backbone coordinates the region touches.
    pub fn n_extent(&self) -> (i64, i64) {
        match *self {
            Region::Strip(s) => {
                let w = s.half_width.min(i64::MAX as u64) as i64;
                (-w, w)
            }
            Region::Ball { center, radius } => {
                let reach = radius.saturating_sub(center.x).min(i64::MAX as u64 / 2) as i64;
                (center.n - reach, center.n + reach)
            }
        }
    }

    /// Heights `[lo, hi]` of the region on the tooth at `n`, before capping by the
    /// tooth height; `None` when the region misses that tooth entirely.
    pub fn column(&self, n: i64) -> Option<(u64, u64)> {
        match *self {
            Region::Strip(s) => (n.unsigned_abs() <= s.half_width).then_some((0, u64::MAX)),
            Region::Ball { center, radius } => {
                let dn = n.abs_diff(center.n);
                if dn == 0 {
                    Some((
                        center.x.saturating_sub(radius),
                        center.x.saturating_add(radius),
                    ))
                } else {
                    let used = center.x.checked_add(dn)?;
                    (used <= radius).then(|| (0, radius - used))
                }
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Strip(s) => write!(f, "strip({})", s.half_width),
            Region::Ball { center, radius } => write!(f, "ball({center},{radius})"),
        }
    }
}

/// Closed ball `{ y : d(center, y) <= radius }` with its members listed in
/// canonical `(n, x)` order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ball {
    pub center: Vertex,
    pub radius: u64,
    pub members: Vec<Vertex>,
}

impl Ball {
    pub fn volume(&self) -> u64 {
        self.members.len() as u64
    }
}

pub type Neighbors = ArrayVec<Vertex, 3>;

/// Heights of teeth with `|n|` up to this radius are tabulated by [`Comb::new`].
pub const DEFAULT_TABLE_RADIUS: i64 = 1 << 16;

/// A comb spec plus a height table; cheap to clone.
#[derive(Clone)]
pub struct Comb {
    spec: Arc<CombSpec>,
    table: Arc<[u64]>,
    radius: i64,
}

impl fmt::Debug for Comb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Comb").field("spec", &self.spec).finish()
    }
}

impl Comb {
    pub fn new(spec: CombSpec) -> Self {
        Self::with_table_radius(spec, DEFAULT_TABLE_RADIUS)
    }

    pub fn with_table_radius(spec: CombSpec, radius: i64) -> Self {
        let radius = radius.max(0);
        let table: Arc<[u64]> = (-radius..=radius).map(|n| spec.tooth_height(n)).collect();
        Comb {
            spec: Arc::new(spec),
            table,
            radius,
        }
    }

    /// Logarithmic comb in the natural base.
    pub fn log(alpha: f64) -> Result<Self> {
        CombSpec::log(alpha).map(Self::new)
    }

    pub fn poly(alpha: f64) -> Result<Self> {
        CombSpec::poly(alpha).map(Self::new)
    }

    pub fn spec(&self) -> &CombSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha()
    }

    #[inline]
    pub fn tooth_height(&self, n: i64) -> u64 {
        if n.abs() <= self.radius {
            self.table[(n + self.radius) as usize]
        } else {
            self.spec.tooth_height(n)
        }
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        v.x <= self.tooth_height(v.n)
    }

    pub fn check(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Inadmissible(v))
        }
    }

    #[inline]
    pub(crate) fn degree_unchecked(&self, v: Vertex) -> u32 {
        let h = self.tooth_height(v.n);
        if v.x == 0 {
            2 + u32::from(h >= 1)
        } else {
            1 + u32::from(v.x < h)
        }
    }

    pub fn degree(&self, v: Vertex) -> Result<u32> {
        self.check(v)?;
        Ok(self.degree_unchecked(v))
    }

    #[inline]
    pub(crate) fn neighbors_unchecked(&self, v: Vertex) -> Neighbors {
        let h = self.tooth_height(v.n);
        let mut out = Neighbors::new();
        if v.x == 0 {
            out.push(Vertex::backbone(v.n - 1));
            if h >= 1 {
                out.push(Vertex::new(v.n, 1));
            }
            out.push(Vertex::backbone(v.n + 1));
        } else {
            out.push(Vertex::new(v.n, v.x - 1));
            if v.x < h {
                out.push(Vertex::new(v.n, v.x + 1));
            }
        }
        out
    }

    /// Neighbours in canonical order (by `n`, then `x`).
    pub fn neighbors(&self, v: Vertex) -> Result<Neighbors> {
        self.check(v)?;
        Ok(self.neighbors_unchecked(v))
    }

    /// Length of the unique tree path between `u` and `v`.
    pub fn distance(&self, u: Vertex, v: Vertex) -> Result<u64> {
        self.check(u)?;
        self.check(v)?;
        Ok(tree_distance(u, v))
    }

    pub fn ball(&self, center: Vertex, radius: u64) -> Result<Ball> {
        self.check(center)?;
        let mut members = Vec::new();
        self.for_each_column_of_ball(center, radius, |n, lo, hi| {
            members.extend((lo..=hi).map(|x| Vertex::new(n, x)));
        });
        Ok(Ball {
            center,
            radius,
            members,
        })
    }

    pub fn volume(&self, center: Vertex, radius: u64) -> Result<u64> {
        self.check(center)?;
        let mut total = 0u64;
        self.for_each_column_of_ball(center, radius, |_, lo, hi| total += hi - lo + 1);
        Ok(total)
    }

    fn for_each_column_of_ball(
        &self,
        center: Vertex,
        radius: u64,
        mut f: impl FnMut(i64, u64, u64),
    ) {
        let region = Region::ball(center, radius);
        let (lo_n, hi_n) = region.n_extent();
        for n in lo_n..=hi_n {
            if let Some((lo, hi)) = region.column(n) {
                let hi = hi.min(self.tooth_height(n));
                if lo <= hi {
                    f(n, lo, hi);
                }
            }
        }
    }

    /// `sum_{y = x+1}^{x+r-u} min(height(y), r - u - (y - x))` for `center = (x, u)`:
    /// a count of tooth vertices guaranteed to lie in `B(center, r)`.
    pub fn volume_witness_lower_bound(&self, center: Vertex, radius: u64) -> Result<u64> {
        self.check(center)?;
        if center.n < 0 {
            return Err(Error::Domain(format!(
                "witness bound needs n >= 0, got {center}"
            )));
        }
        if radius < center.x {
            return Err(Error::Domain(format!(
                "witness bound needs radius >= height, got r={radius} at {center}"
            )));
        }
        let span = radius - center.x;
        Ok((1..=span)
            .map(|k| self.tooth_height(center.n + k as i64).min(span - k))
            .sum())
    }

    /// All vertices of a finite region in canonical order.
    pub fn region_vertices(&self, region: &Region) -> Vec<Vertex> {
        let (lo_n, hi_n) = region.n_extent();
        let mut out = Vec::new();
        for n in lo_n..=hi_n {
            if let Some((lo, hi)) = region.column(n) {
                let hi = hi.min(self.tooth_height(n));
                out.extend((lo..=hi).map(|x| Vertex::new(n, x)));
            }
        }
        out
    }
}

/// Graph distance on the comb; valid for admissible vertices.
#[inline]
pub fn tree_distance(u: Vertex, v: Vertex) -> u64 {
    if u.n == v.n {
        u.x.abs_diff(v.x)
    } else {
        u.x + u.n.abs_diff(v.n) + v.x
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{HashMap, VecDeque};

    use proptest::prelude::*;

    use super::*;

    fn bfs_distances(comb: &Comb, from: Vertex, max: u64) -> HashMap<Vertex, u64> {
        let mut dist = HashMap::from([(from, 0u64)]);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == max {
                continue;
            }
            for w in comb.neighbors(v).unwrap() {
                dist.entry(w).or_insert_with(|| {
                    queue.push_back(w);
                    d + 1
                });
            }
        }
        dist
    }

    #[test]
    fn tooth_heights() {
        let log1 = Comb::log(1.0).unwrap();
        assert_eq!(log1.tooth_height(0), 0);
        assert_eq!(log1.tooth_height(1), 0);
        assert_eq!(log1.tooth_height(-1), 0);
        // ln 10 = 2.302585...
        assert_eq!(log1.tooth_height(10), 2);
        assert_eq!(log1.tooth_height(-10), 2);
        // ln 5 = 1.609...
        assert_eq!(log1.tooth_height(5), 1);
        let poly2 = Comb::poly(2.0).unwrap();
        assert_eq!(poly2.tooth_height(3), 9);
        assert_eq!(poly2.tooth_height(-3), 9);
        let far = 1i64 << 20;
        assert_eq!(log1.tooth_height(far), log1.spec().tooth_height(far));
    }

    #[test]
    fn log_base_override() {
        let spec = CombSpec::log(1.0).unwrap().with_log_base(10.0).unwrap();
        assert_eq!(spec.tooth_height(100), 2);
        assert_eq!(spec.tooth_height(99), 1);
        assert!(CombSpec::log(1.0).unwrap().with_log_base(1.0).is_err());
        assert!(CombSpec::log(0.0).is_err());
        assert!(CombSpec::poly(f64::NAN).is_err());
    }

    #[test]
    fn degrees_and_neighbors() {
        let comb = Comb::log(1.0).unwrap();
        assert_eq!(comb.degree(Vertex::ORIGIN).unwrap(), 2);
        assert_eq!(comb.degree(Vertex::new(10, 2)).unwrap(), 1);
        assert_eq!(comb.degree(Vertex::new(10, 0)).unwrap(), 3);
        assert_eq!(
            comb.neighbors(Vertex::ORIGIN).unwrap().as_slice(),
            &[Vertex::new(-1, 0), Vertex::new(1, 0)]
        );
        assert_eq!(
            comb.neighbors(Vertex::new(10, 1)).unwrap().as_slice(),
            &[Vertex::new(10, 0), Vertex::new(10, 2)]
        );
        assert_eq!(
            comb.neighbors(Vertex::new(5, 0)).unwrap().as_slice(),
            &[Vertex::new(4, 0), Vertex::new(5, 1), Vertex::new(6, 0)]
        );
        assert!(matches!(
            comb.degree(Vertex::new(10, 3)),
            Err(Error::Inadmissible(_))
        ));
        assert!(comb.neighbors(Vertex::new(0, 1)).is_err());
    }

    #[test]
    fn distances() {
        let comb = Comb::log(1.0).unwrap();
        assert_eq!(
            comb.distance(Vertex::new(2, 0), Vertex::new(5, 0)).unwrap(),
            3
        );
        assert_eq!(
            comb.distance(Vertex::new(3, 1), Vertex::new(3, 1)).unwrap(),
            0
        );
        // (2,1) is not admissible on the log comb (height 0 at n=2); use a
        // comb with unit teeth for the fixed examples.
        let unit = Comb::new(CombSpec::custom(|_| 3));
        assert_eq!(
            unit.distance(Vertex::new(2, 1), Vertex::new(5, 0)).unwrap(),
            4
        );
        assert_eq!(
            unit.distance(Vertex::new(3, 2), Vertex::new(3, 2)).unwrap(),
            0
        );
        assert_eq!(
            unit.distance(Vertex::new(-2, 1), Vertex::new(2, 1))
                .unwrap(),
            6
        );
        let bfs = bfs_distances(&unit, Vertex::new(-2, 1), 10);
        assert_eq!(bfs[&Vertex::new(2, 1)], 6);
    }

    #[test]
    fn balls_and_volumes() {
        let comb = Comb::log(1.0).unwrap();
        assert_eq!(comb.volume(Vertex::ORIGIN, 1).unwrap(), 3);
        for c in [Vertex::ORIGIN, Vertex::new(10, 2), Vertex::new(-40, 1)] {
            assert_eq!(comb.volume(c, 0).unwrap(), 1);
        }
        let center = Vertex::new(40, 0);
        let ball = comb.ball(center, 10).unwrap();
        let bfs = bfs_distances(&comb, center, 10);
        assert_eq!(ball.volume(), bfs.len() as u64);
        assert_eq!(comb.volume(center, 10).unwrap(), bfs.len() as u64);
        let mut sorted = ball.members.clone();
        sorted.sort();
        assert_eq!(sorted, ball.members);
        assert!(ball.members.iter().all(|v| bfs.contains_key(v)));
    }

    #[test]
    fn witness_lower_bound() {
        let comb = Comb::log(1.0).unwrap();
        assert_eq!(
            comb.volume_witness_lower_bound(Vertex::new(10, 2), 2)
                .unwrap(),
            0
        );
        assert_eq!(
            comb.volume_witness_lower_bound(Vertex::ORIGIN, 3).unwrap(),
            0
        );
        let c = Vertex::new(40, 0);
        let w = comb.volume_witness_lower_bound(c, 10).unwrap();
        assert!(w > 0 && w <= comb.volume(c, 10).unwrap());
        assert!(comb
            .volume_witness_lower_bound(Vertex::new(-3, 0), 3)
            .is_err());
        assert!(comb
            .volume_witness_lower_bound(Vertex::new(10, 2), 1)
            .is_err());
    }

    #[test]
    fn region_columns() {
        let comb = Comb::log(2.0).unwrap();
        let ball = Region::ball(Vertex::new(30, 5), 3);
        let members = comb.region_vertices(&ball);
        assert_eq!(members, comb.ball(Vertex::new(30, 5), 3).unwrap().members);
        assert!(members.iter().all(|v| v.n == 30));
        let strip = Region::strip(2);
        assert_eq!(comb.region_vertices(&strip).len(), 5);
    }

    #[test]
    fn vertex_parsing() {
        assert_eq!("3,2".parse::<Vertex>().unwrap(), Vertex::new(3, 2));
        assert_eq!("(-4, 0)".parse::<Vertex>().unwrap(), Vertex::new(-4, 0));
        assert!("1".parse::<Vertex>().is_err());
        assert!("1,-2".parse::<Vertex>().is_err());
    }

    fn arb_vertex(comb: Comb) -> impl Strategy<Value = Vertex> {
        (-60i64..60, 0u64..40).prop_map(move |(n, x)| Vertex::new(n, x.min(comb.tooth_height(n))))
    }

    proptest! {
        #[test]
        fn degree_matches_neighbors(alpha in 0.3f64..2.5, v in (-80i64..80, 0u64..30)) {
            let comb = Comb::log(alpha).unwrap();
            let v = Vertex::new(v.0, v.1.min(comb.tooth_height(v.0)));
            let nb = comb.neighbors(v).unwrap();
            let deg = comb.degree(v).unwrap();
            prop_assert!((1..=3).contains(&deg));
            prop_assert_eq!(deg as usize, nb.len());
            for w in nb {
                prop_assert!(comb.neighbors(w).unwrap().contains(&v));
                prop_assert_ne!(w.parity(), v.parity());
            }
        }

        #[test]
        fn distance_matches_bfs(u in arb_vertex(Comb::log(1.5).unwrap()), v in arb_vertex(Comb::log(1.5).unwrap())) {
            let comb = Comb::log(1.5).unwrap();
            let d = comb.distance(u, v).unwrap();
            prop_assert_eq!(d, comb.distance(v, u).unwrap());
            let bfs = bfs_distances(&comb, u, d);
            prop_assert_eq!(bfs.get(&v).copied(), Some(d));
        }

        #[test]
        fn triangle_inequality(a in arb_vertex(Comb::log(1.0).unwrap()), b in arb_vertex(Comb::log(1.0).unwrap()), c in arb_vertex(Comb::log(1.0).unwrap())) {
            let comb = Comb::log(1.0).unwrap();
            let d = |p, q| comb.distance(p, q).unwrap();
            prop_assert!(d(a, c) <= d(a, b) + d(b, c));
            prop_assert_eq!(d(a, a), 0);
        }

        #[test]
        fn volume_bounds(alpha in 0.3f64..2.5, n in 0i64..200, x in 0u64..20, r in 0u64..40) {
            let comb = Comb::log(alpha).unwrap();
            let c = Vertex::new(n, x.min(comb.tooth_height(n)));
            let vol = comb.volume(c, r).unwrap();
            prop_assert!(vol > r);
            if r >= c.x {
                prop_assert!(comb.volume_witness_lower_bound(c, r).unwrap() <= vol);
            }
        }
    }
}
