use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::{spread, BoundReport, BoundSpec, CheckOptions, GridPoint, Orientation, Row};
use crate::error::{Error, Result};
use crate::graph::{Comb, Family, Region, Vertex};
use crate::kernel::{k_collision_probability, on_diagonal_series, six_pow, DistVector, SixAdic};

/// Tails of the quadruple-collision series beyond the fitting range must add
/// less than this per step.
const TAIL_INCREMENT: f64 = 1e-4;

fn mirror_symmetric(comb: &Comb) -> bool {
    !matches!(comb.spec().family, Family::Custom(_))
}

/// Vertices of `B(0, r)`, keeping only `n >= 0` when the comb is symmetric.
fn half_ball(comb: &Comb, r: u64) -> Result<Vec<Vertex>> {
    let sym = mirror_symmetric(comb);
    Ok(comb
        .ball(Vertex::ORIGIN, r)?
        .members
        .into_iter()
        .filter(|v| !sym || v.n >= 0)
        .collect())
}

fn sorted_grid(grid: &[u64], min: u64) -> (Vec<u64>, Vec<u64>) {
    let mut g: Vec<u64> = grid.to_vec();
    g.sort_unstable();
    g.dedup();
    let dropped = g.iter().copied().filter(|&n| n < min).collect();
    g.retain(|&n| n >= min);
    (g, dropped)
}

fn point(comb: &Comb) -> GridPoint {
    GridPoint {
        alpha: Some(comb.alpha()),
        ..Default::default()
    }
}

/// `p_{2m}(x, x)` by propagating `m` steps and pairing the law with itself.
fn diagonal(comb: &Comb, x: Vertex, m: u64, killed_on: Option<Region>) -> Result<f64> {
    Ok(DistVector::<f64>::point(comb, x, killed_on)?
        .advance(m as usize)
        .self_pairing())
}

fn hku1_shape(comb: &Comb, n: u64) -> f64 {
    1.0 / ((n as f64).sqrt() * comb.spec().log_power(n as f64).sqrt())
}

/// `sup_{x in B(0,n)} p_{2 floor(n/2)}(x, x)` against `n^{-1/2} log^{-alpha/2} n`.
pub fn check_hku1(comb: &Comb, n_grid: &[u64], opts: &CheckOptions) -> Result<BoundReport> {
    let (grid, dropped) = sorted_grid(n_grid, 2);
    let spec = BoundSpec {
        id: "hku1",
        alpha: Some(comb.alpha()),
        grid: format!("n in {grid:?}, x in B(0,n)"),
        orientation: Orientation::Upper,
        stated: None,
    };
    let Some(&n_max) = grid.last() else {
        return Ok(BoundReport::assemble(spec, Vec::new(), opts));
    };
    let xs = half_ball(comb, n_max)?;
    let per_x: Vec<Vec<Row>> = opts.pool()?.install(|| {
        xs.par_iter()
            .map(|&x| {
                let d0 = comb.distance(Vertex::ORIGIN, x)?;
                let series = on_diagonal_series(comb, x, (n_max / 2 * 2) as usize, None)?;
                Ok(grid
                    .iter()
                    .filter(|&&n| n >= d0)
                    .map(|&n| {
                        let p = GridPoint {
                            x: Some(x),
                            time: Some(n),
                            ..point(comb)
                        };
                        Row::new(n, p, series[(n / 2) as usize], hku1_shape(comb, n))
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = BoundReport::assemble(spec, per_x.into_iter().flatten().collect(), opts);
    if !dropped.is_empty() {
        report.note(format!("grid points below 2 dropped: {dropped:?}"));
    }
    Ok(report)
}

pub(crate) fn eval_hku1(comb: &Comb, p: &GridPoint) -> Result<(f64, f64)> {
    let (x, n) = need_xn(p)?;
    Ok((diagonal(comb, x, n / 2, None)?, hku1_shape(comb, n)))
}

fn need_xn(p: &GridPoint) -> Result<(Vertex, u64)> {
    match (p.x, p.time) {
        (Some(x), Some(n)) => Ok((x, n)),
        _ => Err(Error::InvalidParameter(format!(
            "grid point {p} lacks x or n"
        ))),
    }
}

fn need_scale(p: &GridPoint) -> Result<u64> {
    p.n_scale
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks N")))
}

/// `16 log^{3 alpha} N`, the time separating the two regimes.
fn k0(comb: &Comb, n: u64) -> f64 {
    16.0 * comb.spec().log_power(n as f64).powi(3)
}

fn hku2_shape(comb: &Comb, n_scale: u64, n: u64) -> f64 {
    let s = 1.0 / (n as f64).sqrt();
    if (n as f64) < k0(comb, n_scale) {
        s
    } else {
        s / comb.spec().log_power(n_scale as f64).sqrt()
    }
}

/// Starting points `x` with `N/4 < |x.n| <= N`: sampled columns on the
/// positive side, each at the backbone, mid-tooth and tooth top.
fn outer_sites(comb: &Comb, n: u64, opts: &CheckOptions) -> Vec<Vertex> {
    let first = n / 4 + 1;
    let cols: Vec<u64> = (first..=n).collect();
    let mut out = Vec::new();
    for w in spread(&cols, opts.max_columns) {
        let top = comb.tooth_height(w as i64);
        for x in [0, top / 2, top] {
            let v = Vertex::new(w as i64, x);
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// Rough cost of propagating one law for `steps` steps: the support grows to
/// `2 steps` columns of height at most `tooth`.
fn propagation_cost(steps: u64, tooth: u64) -> u128 {
    steps as u128 * steps as u128 * (tooth as u128 + 1)
}

/// On-diagonal `p_n(x, x)` for `x` in `V_N \ V_{N/4}`, in both time regimes.
pub fn check_hku2(comb: &Comb, n_scales: &[u64], opts: &CheckOptions) -> Result<Vec<BoundReport>> {
    let (scales, dropped) = sorted_grid(n_scales, 2);
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut notes = Vec::new();
    let pool = opts.pool()?;
    for &big_n in &scales {
        let k = k0(comb, big_n);
        let mut times: Vec<u64> = (1..)
            .map(|j| 2u64 << (j - 1))
            .take_while(|&t| (t as f64) < k)
            .collect();
        let n0 = {
            let c = k.ceil() as u64;
            c + c % 2
        };
        let xs = outer_sites(comb, big_n, opts);
        let tooth = comb
            .tooth_height((2 * big_n) as i64)
            .max(comb.tooth_height(big_n as i64));
        let mut large_times = Vec::new();
        for t in [n0, 2 * n0] {
            let cost = propagation_cost(t / 2, tooth) * xs.len() as u128;
            if cost <= opts.work_cap {
                large_times.push(t);
            } else {
                notes.push(format!(
                    "N={big_n}: large-n time {t} skipped (cost {cost} > cap {})",
                    opts.work_cap
                ));
            }
        }
        times.extend(&large_times);
        let t_max = times.iter().copied().max().unwrap_or(0);
        let per_x: Vec<Vec<(u64, Vertex, f64)>> = pool.install(|| {
            xs.par_iter()
                .map(|&x| {
                    let series = on_diagonal_series(comb, x, t_max as usize, None)?;
                    Ok(times
                        .iter()
                        .map(|&t| (t, x, series[(t / 2) as usize]))
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (t, x, v) in per_x.into_iter().flatten() {
            let p = GridPoint {
                n_scale: Some(big_n),
                x: Some(x),
                y: Some(x),
                time: Some(t),
                ..point(comb)
            };
            let row = Row::new(big_n, p, v, hku2_shape(comb, big_n, t));
            if (t as f64) < k {
                small.push(row);
            } else {
                large.push(row);
            }
        }
    }
    let grid = format!("N in {scales:?}, x = y in V_N \\ V_N/4 (sampled), even n");
    let mut out = vec![
        BoundReport::assemble(
            BoundSpec {
                id: "hku2-small-n",
                alpha: Some(comb.alpha()),
                grid: grid.clone(),
                orientation: Orientation::Upper,
                stated: None,
            },
            small,
            opts,
        ),
        BoundReport::assemble(
            BoundSpec {
                id: "hku2-large-n",
                alpha: Some(comb.alpha()),
                grid,
                orientation: Orientation::Upper,
                stated: None,
            },
            large,
            opts,
        ),
    ];
    for r in out.iter_mut() {
        r.note("odd n and odd-distance pairs vanish and are omitted; x != y reduces to x = y by Cauchy-Schwarz");
        if !dropped.is_empty() {
            r.note(format!("scales below 2 dropped: {dropped:?}"));
        }
        for n in &notes {
            r.note(n.clone());
        }
    }
    Ok(out)
}

pub(crate) fn eval_hku2(comb: &Comb, p: &GridPoint) -> Result<(f64, f64)> {
    let (x, n) = need_xn(p)?;
    let big_n = need_scale(p)?;
    Ok((diagonal(comb, x, n / 2, None)?, hku2_shape(comb, big_n, n)))
}

/// Admissible time window `[ceil(c1 N^2 L), floor(c2 N^2 L)]`, `L = log^alpha N`.
fn lower_window(comb: &Comb, big_n: u64, opts: &CheckOptions) -> (u64, u64) {
    let s = (big_n as f64).powi(2) * comb.spec().log_power(big_n as f64);
    (
        (opts.window_c1 * s).ceil() as u64,
        (opts.window_c2 * s).floor() as u64,
    )
}

fn lower_shape(comb: &Comb, big_n: u64) -> f64 {
    1.0 / (big_n as f64 * comb.spec().log_power(big_n as f64))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Site {
    Backbone,
    ToothInner,
    ToothTop,
}

impl Site {
    fn of(comb: &Comb, y: Vertex) -> Self {
        if y.x == 0 {
            Site::Backbone
        } else if y.x == comb.tooth_height(y.n) {
            Site::ToothTop
        } else {
            Site::ToothInner
        }
    }

    fn name(self) -> &'static str {
        match self {
            Site::Backbone => "backbone",
            Site::ToothInner => "tooth_inner",
            Site::ToothTop => "tooth_top",
        }
    }
}

/// Killed kernel `p_n^{V_hN}(x, y)` over the time window, for `x in V_N` and
/// `y in V_N \ V_{N/4}` at even parity, against `1 / (N log^alpha N)`.
pub fn check_lower_bound(
    comb: &Comb,
    n_scales: &[u64],
    opts: &CheckOptions,
) -> Result<BoundReport> {
    let (scales, _) = sorted_grid(n_scales, 2);
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut by_site: BTreeMap<Site, f64> = BTreeMap::new();
    let pool = opts.pool()?;
    let mut skipped = 0;
    for &big_n in &scales {
        let (lo, hi) = lower_window(comb, big_n, opts);
        if lo > hi || hi == 0 {
            notes.push(format!("N={big_n}: empty time window [{lo}, {hi}]"));
            continue;
        }
        let alive = Region::strip(opts.h * big_n);
        let alive_size = comb.region_vertices(&alive).len() as u128;
        let half = big_n as i64 / 2;
        let mut xs: Vec<Vertex> = Vec::new();
        for v in [
            Vertex::ORIGIN,
            Vertex::backbone(half),
            Vertex::new(big_n as i64, comb.tooth_height(big_n as i64)),
            Vertex::backbone(-(big_n as i64)),
            Vertex::new(-half, comb.tooth_height(-half) / 2),
        ] {
            if !xs.contains(&v) {
                xs.push(v);
            }
        }
        let ys: Vec<Vertex> = comb
            .region_vertices(&Region::strip(big_n))
            .into_iter()
            .filter(|y| 4 * y.n.unsigned_abs() > big_n)
            .collect();
        let cost = hi as u128 * (alive_size + ys.len() as u128) * xs.len() as u128;
        if cost > opts.work_cap {
            notes.push(format!(
                "N={big_n}: skipped, killed-kernel cost {cost} exceeds cap {}",
                opts.work_cap
            ));
            skipped += 1;
            continue;
        }
        let by_parity: [Vec<(Vertex, Site)>; 2] = [0u8, 1].map(|par| {
            ys.iter()
                .filter(|y| y.parity() == par)
                .map(|&y| (y, Site::of(comb, y)))
                .collect()
        });
        let shape = lower_shape(comb, big_n);
        let per_x: Vec<Vec<Row>> = pool.install(|| {
            xs.par_iter()
                .map(|&x| {
                    let mut d = DistVector::<f64>::point(comb, x, Some(alive.clone()))?;
                    // Minimum per site class: (value, y, t).
                    let mut best: BTreeMap<Site, (f64, Vertex, u64)> = BTreeMap::new();
                    for t in 1..=hi {
                        d = d.step();
                        if t < lo {
                            continue;
                        }
                        let par = ((x.parity() as u64 + t) % 2) as usize;
                        for &(y, site) in &by_parity[par] {
                            let v = d.kernel_at(y);
                            let e = best.entry(site).or_insert((v, y, t));
                            if v < e.0 {
                                *e = (v, y, t);
                            }
                        }
                    }
                    Ok(best
                        .into_iter()
                        .map(|(site, (v, y, t))| {
                            let p = GridPoint {
                                n_scale: Some(big_n),
                                x: Some(x),
                                y: Some(y),
                                time: Some(t),
                                label: Some(site.name().into()),
                                ..point(comb)
                            };
                            Row::new(big_n, p, v, shape)
                        })
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for row in per_x.into_iter().flatten() {
            let site = match row.point.label.as_deref() {
                Some("backbone") => Site::Backbone,
                Some("tooth_top") => Site::ToothTop,
                _ => Site::ToothInner,
            };
            let e = by_site.entry(site).or_insert(f64::INFINITY);
            *e = e.min(row.ratio);
            rows.push(row);
        }
    }
    if !scales.is_empty() && skipped == scales.len() {
        return Err(Error::ResourceLimit {
            what: "killed heat kernel on every scale".into(),
            needed: u128::MAX,
            cap: opts.work_cap,
        });
    }
    let spec = BoundSpec {
        id: "lower-corollary",
        alpha: Some(comb.alpha()),
        grid: format!(
            "N in {scales:?}, h={}, n in [{}, {}] N^2 log^alpha N, x in V_N (5 sites), y in V_N \\ V_N/4",
            opts.h, opts.window_c1, opts.window_c2
        ),
        orientation: Orientation::Lower,
        stated: None,
    };
    let mut report = BoundReport::assemble(spec, rows, opts);
    for (site, c) in by_site {
        report.extras.insert(format!("c3_{}", site.name()), c);
    }
    for n in notes {
        report.note(n);
    }
    Ok(report)
}

pub(crate) fn eval_lower(comb: &Comb, p: &GridPoint, opts: &CheckOptions) -> Result<(f64, f64)> {
    let (x, n) = need_xn(p)?;
    let big_n = need_scale(p)?;
    let y =
        p.y.ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks y")))?;
    let d =
        DistVector::<f64>::point(comb, x, Some(Region::strip(opts.h * big_n)))?.advance(n as usize);
    Ok((d.kernel_at(y), lower_shape(comb, big_n)))
}

fn hkbound_rhs(r: u64, m: u64, volume: u64) -> f64 {
    4.0 * r as f64 / m as f64 + 2.0 / volume as f64
}

/// `p_{2 floor(n/2)}(x, x) <= 4r / floor(n/2) + 2 / V(x, r)` for every `x` in
/// `B(0, radius)`, `2 <= n <= n_max`, `1 <= r <= r_max`, with an exact
/// rational re-check on `exact_points` grid points.
pub fn check_hkbound(
    comb: &Comb,
    radius: u64,
    n_max: u64,
    r_max: u64,
    exact_points: usize,
    opts: &CheckOptions,
) -> Result<BoundReport> {
    if n_max < 2 || r_max < 1 {
        return Err(Error::InvalidParameter(
            "need n_max >= 2 and r_max >= 1".into(),
        ));
    }
    let xs = comb.ball(Vertex::ORIGIN, radius)?.members;
    let m_max = n_max / 2;
    let pool = opts.pool()?;
    let data: Vec<(Vec<f64>, Vec<u64>)> = pool.install(|| {
        xs.par_iter()
            .map(|&x| {
                let series = on_diagonal_series(comb, x, (2 * m_max) as usize, None)?;
                let vols = (0..=r_max)
                    .map(|r| comb.volume(x, r))
                    .collect::<Result<Vec<_>>>()?;
                Ok((series, vols))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    for (&x, (series, vols)) in xs.iter().zip(&data) {
        for n in 2..=n_max {
            let m = n / 2;
            let lhs = series[m as usize];
            let (r, rhs) = (1..=r_max)
                .map(|r| (r, hkbound_rhs(r, m, vols[r as usize])))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            let p = GridPoint {
                x: Some(x),
                time: Some(n),
                radius: Some(r),
                ..point(comb)
            };
            rows.push(Row::new(n, p, lhs, rhs));
        }
    }

    // Exact re-check on a strided subgrid of (x, n, r).
    let per_x = (n_max - 1) * r_max;
    let total = xs.len() as u64 * per_x;
    let k = (exact_points as u64).min(total);
    let mut picks: BTreeMap<usize, Vec<(u64, u64)>> = BTreeMap::new();
    for j in 0..k {
        let i = j * total / k;
        let xi = (i / per_x) as usize;
        let rem = i % per_x;
        picks
            .entry(xi)
            .or_default()
            .push((2 + rem / r_max, 1 + rem % r_max));
    }
    let checks: Vec<(u64, u64, f64)> = pool.install(|| {
        picks
            .par_iter()
            .map(|(&xi, pts)| {
                let exact = exact_diagonal_series(comb, xs[xi], m_max)?;
                let (series, vols) = &data[xi];
                let mut bad = 0u64;
                let mut drift = 0.0f64;
                for &(n, r) in pts {
                    let m = n / 2;
                    let lhs = &exact[m as usize];
                    let rhs = BigRational::new(BigInt::from(4 * r), BigInt::from(m))
                        + BigRational::new(BigInt::from(2), BigInt::from(vols[r as usize]));
                    if lhs > &rhs {
                        bad += 1;
                    }
                    let f = lhs.to_f64().unwrap_or(f64::NAN);
                    drift = drift.max((f - series[m as usize]).abs() / f.max(f64::MIN_POSITIVE));
                }
                Ok((pts.len() as u64, bad, drift))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let checked: u64 = checks.iter().map(|c| c.0).sum();
    let violations: u64 = checks.iter().map(|c| c.1).sum();
    let drift = checks.iter().map(|c| c.2).fold(0.0, f64::max);

    let spec = BoundSpec {
        id: "hkbound",
        alpha: Some(comb.alpha()),
        grid: format!(
            "x in B(0,{radius}), n in [2,{n_max}], r in [1,{r_max}] (rows keep the tightest r)"
        ),
        orientation: Orientation::Upper,
        stated: Some(1.0),
    };
    let mut report = BoundReport::assemble(spec, rows, opts);
    report.extras.insert("exact_points".into(), checked as f64);
    report
        .extras
        .insert("exact_violations".into(), violations as f64);
    report
        .extras
        .insert("float_vs_exact_max_rel_diff".into(), drift);
    if violations > 0 {
        report.fail(format!("{violations} exact violations"));
    }
    Ok(report)
}

pub(crate) fn eval_hkbound(comb: &Comb, p: &GridPoint) -> Result<(f64, f64)> {
    let (x, n) = need_xn(p)?;
    let r = p
        .radius
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks r")))?;
    Ok((
        diagonal(comb, x, n / 2, None)?,
        hkbound_rhs(r, n / 2, comb.volume(x, r)?),
    ))
}

/// Exact `p_{2k}(x, x)` for `k = 0..=k_max`.
fn exact_diagonal_series(comb: &Comb, x: Vertex, k_max: u64) -> Result<Vec<BigRational>> {
    let mut d = DistVector::<SixAdic>::point(comb, x, None)?;
    let mut out = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        if k > 0 {
            d = d.step();
        }
        out.push(exact_self_pairing(&d));
    }
    Ok(out)
}

/// `sum_w m_w^2 / deg(w)` grouped by degree, so only three big sums are formed.
fn exact_self_pairing(d: &DistVector<SixAdic>) -> BigRational {
    let mut sums = [BigUint::zero(), BigUint::zero(), BigUint::zero()];
    for (w, m) in d.iter() {
        let deg = d.comb().degree_unchecked(w) as usize;
        sums[deg - 1] += &m.0 * &m.0;
    }
    let [s1, s2, s3] = sums;
    let num = BigInt::from(s1 * 6u32 + s2 * 3u32 + s3 * 2u32);
    BigRational::new(num, BigInt::from(six_pow(2 * d.step_index()) * 6u32))
}

fn lemma21_rhs(sup: f64) -> f64 {
    9.0 * sup * sup
}

/// `P(X_n = Y_n = Z_n)` from the origin against `9 sup_{B(0,n)} p_{2 floor(n/2)}(x,x)^2`,
/// checked in floating point and exactly.
pub fn check_lemma21(comb: &Comb, n_max: u64, opts: &CheckOptions) -> Result<BoundReport> {
    let xs = half_ball(comb, n_max)?;
    let pool = opts.pool()?;
    let series: Vec<(u64, Vec<f64>)> = pool.install(|| {
        xs.par_iter()
            .map(|&x| {
                Ok((
                    comb.distance(Vertex::ORIGIN, x)?,
                    on_diagonal_series(comb, x, (n_max / 2 * 2) as usize, None)?,
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    // Float triple probabilities and the exact ones from the same propagation.
    let mut triple = Vec::with_capacity(n_max as usize + 1);
    let mut triple_exact = Vec::with_capacity(n_max as usize + 1);
    let mut d = DistVector::<f64>::point(comb, Vertex::ORIGIN, None)?;
    let mut e = DistVector::<SixAdic>::point(comb, Vertex::ORIGIN, None)?;
    for n in 0..=n_max {
        if n > 0 {
            d = d.step();
            e = e.step();
        }
        triple.push(d.iter().map(|(_, m)| m.powi(3)).sum::<f64>());
        let mut s = BigUint::zero();
        for (_, m) in e.iter() {
            s += &m.0 * &m.0 * &m.0;
        }
        triple_exact.push(BigRational::new(
            BigInt::from(s),
            BigInt::from(six_pow(3 * n as usize)),
        ));
    }

    let mut rows = Vec::new();
    let mut argmax = Vec::new();
    for n in 0..=n_max {
        let m = (n / 2) as usize;
        let (i, sup) = series
            .iter()
            .enumerate()
            .filter(|(_, (d0, _))| *d0 <= n)
            .map(|(i, (_, s))| (i, s[m]))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        argmax.push(xs[i]);
        let p = GridPoint {
            time: Some(n),
            x: Some(xs[i]),
            ..point(comb)
        };
        rows.push(Row::new(n, p, triple[n as usize], lemma21_rhs(sup)));
    }

    // Exact check at the float maximiser; the supremum can only be larger.
    let mut cache: BTreeMap<Vertex, Vec<BigRational>> = BTreeMap::new();
    let nine = BigRational::from_integer(BigInt::from(9));
    let mut violations = 0u64;
    for n in 0..=n_max {
        let x = argmax[n as usize];
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(x) {
            e.insert(exact_diagonal_series(comb, x, n_max / 2)?);
        }
        let p = &cache[&x][(n / 2) as usize];
        if triple_exact[n as usize] > &nine * p * p {
            let full = exact_sup(comb, n)?;
            if triple_exact[n as usize] > &nine * &full * &full {
                violations += 1;
            }
        }
    }

    let spec = BoundSpec {
        id: "lemma21",
        alpha: Some(comb.alpha()),
        grid: format!("n in [0,{n_max}], walkers from the origin"),
        orientation: Orientation::Upper,
        stated: Some(9.0),
    };
    let mut report = BoundReport::assemble(spec, rows, opts);
    report
        .extras
        .insert("exact_points".into(), (n_max + 1) as f64);
    report
        .extras
        .insert("exact_violations".into(), violations as f64);
    if violations > 0 {
        report.fail(format!("{violations} exact violations"));
    }
    Ok(report)
}

fn exact_sup(comb: &Comb, n: u64) -> Result<BigRational> {
    let mut best = BigRational::zero();
    for x in half_ball(comb, n)? {
        let v = exact_diagonal_series(comb, x, n / 2)?.pop().unwrap();
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

pub(crate) fn eval_lemma21(comb: &Comb, p: &GridPoint) -> Result<(f64, f64)> {
    let n = p
        .time
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks n")))?;
    let lhs = k_collision_probability(comb, &[Vertex::ORIGIN; 3], n as usize, None)?;
    let mut sup = f64::NEG_INFINITY;
    for x in half_ball(comb, n)? {
        sup = sup.max(diagonal(comb, x, n / 2, None)?);
    }
    Ok((lhs, lemma21_rhs(sup)))
}

fn dyadic(n: u64) -> u64 {
    1 << (63 - n.leading_zeros())
}

/// Quadruple-collision probability from the origin against `n^{-3/2}` for
/// `1 <= n <= fit_max`, plus the tail of the expected-count series up to
/// `n_max`.
pub fn check_quadruple(
    comb: &Comb,
    n_max: u64,
    fit_max: u64,
    opts: &CheckOptions,
) -> Result<BoundReport> {
    if fit_max < 1 || n_max < fit_max {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= fit_max <= n_max, got {fit_max}, {n_max}"
        )));
    }
    let mut p3 = Vec::with_capacity(n_max as usize + 1);
    let mut p4 = Vec::with_capacity(n_max as usize + 1);
    let mut d = DistVector::<f64>::point(comb, Vertex::ORIGIN, None)?;
    for n in 0..=n_max {
        if n > 0 {
            d = d.step();
        }
        p3.push(d.iter().map(|(_, m)| m.powi(3)).sum::<f64>());
        p4.push(d.iter().map(|(_, m)| m.powi(4)).sum::<f64>());
    }
    let rows = (1..=fit_max)
        .map(|n| {
            let p = GridPoint {
                time: Some(n),
                ..point(comb)
            };
            Row::new(dyadic(n), p, p4[n as usize], (n as f64).powf(-1.5))
        })
        .collect();
    let spec = BoundSpec {
        id: "quadruple",
        alpha: Some(comb.alpha()),
        grid: format!(
            "n in [1,{fit_max}] (dyadic blocks), tail to {n_max}, walkers from the origin"
        ),
        orientation: Orientation::Upper,
        stated: None,
    };
    let mut report = BoundReport::assemble(spec, rows, opts);
    let tail = p4[fit_max as usize + 1..]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    report.extras.insert("max_tail_increment".into(), tail);
    report
        .extras
        .insert("quadruple_partial_sum".into(), p4.iter().sum());
    report
        .extras
        .insert("triple_partial_sum".into(), p3.iter().sum());
    report.extras.insert(
        "triple_max_tail_increment".into(),
        p3[fit_max as usize + 1..]
            .iter()
            .copied()
            .fold(0.0, f64::max),
    );
    // Ratio of consecutive dyadic block sums; about 2^{-1/2} for an n^{-3/2} summand.
    let mut blocks = Vec::new();
    let mut lo = 1u64;
    while 2 * lo - 1 <= n_max {
        blocks.push(p4[lo as usize..(2 * lo) as usize].iter().sum::<f64>());
        lo *= 2;
    }
    if blocks.len() >= 2 {
        let k = blocks.len();
        report
            .extras
            .insert("last_block_ratio".into(), blocks[k - 1] / blocks[k - 2]);
    }
    if tail >= TAIL_INCREMENT {
        report.fail(format!(
            "tail increment {tail:e} is not below {TAIL_INCREMENT:e}"
        ));
    }
    Ok(report)
}

pub(crate) fn eval_quadruple(comb: &Comb, p: &GridPoint) -> Result<(f64, f64)> {
    let n = p
        .time
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks n")))?;
    Ok((
        k_collision_probability(comb, &[Vertex::ORIGIN; 4], n as usize, None)?,
        (n as f64).powf(-1.5),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::reevaluate;
    use crate::kernel::triple_collision_probability;

    fn opts() -> CheckOptions {
        CheckOptions {
            jobs: 2,
            ..Default::default()
        }
    }

    fn reproduces(report: &BoundReport, comb: &Comb) {
        for w in &report.witnesses {
            let r = reevaluate(report, w, comb, &opts()).unwrap();
            assert!(
                (r - w.ratio).abs() <= 1e-10 * w.ratio.abs().max(1.0),
                "{}: {r} vs {}",
                report.bound_id,
                w.ratio
            );
        }
    }

    #[test]
    fn exact_pairing_matches_generic() {
        let comb = Comb::log(1.0).unwrap();
        let d = DistVector::<SixAdic>::point(&comb, Vertex::new(8, 1), None)
            .unwrap()
            .advance(7);
        assert_eq!(exact_self_pairing(&d), d.exact_self_pairing());
    }

    #[test]
    fn hku1_small_grid() {
        let comb = Comb::log(1.0).unwrap();
        let r = check_hku1(&comb, &[1, 2, 8, 16, 32], &opts()).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("[1]")));
        assert_eq!(r.per_scale.len(), 4);
        // n = 2 only looks at p_2 on B(0, 2).
        let want = comb
            .ball(Vertex::ORIGIN, 2)
            .unwrap()
            .members
            .iter()
            .map(|&x| diagonal(&comb, x, 1, None).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(r.per_scale[0].constant, want / hku1_shape(&comb, 2));
        reproduces(&r, &comb);
    }

    #[test]
    fn hku2_regimes() {
        let comb = Comb::log(1.0).unwrap();
        let reports = check_hku2(
            &comb,
            &[16],
            &CheckOptions {
                max_columns: 3,
                ..opts()
            },
        )
        .unwrap();
        assert_eq!(reports[0].bound_id, "hku2-small-n");
        assert!(!reports[0].empty && !reports[1].empty);
        let k = k0(&comb, 16);
        assert!(reports[0]
            .rows
            .iter()
            .all(|r| (r.point.time.unwrap() as f64) < k));
        assert!(reports[1]
            .rows
            .iter()
            .all(|r| (r.point.time.unwrap() as f64) >= k));
        for r in &reports {
            reproduces(r, &comb);
        }
    }

    #[test]
    fn lower_bound_small_scale() {
        let comb = Comb::log(1.0).unwrap();
        let r = check_lower_bound(&comb, &[8], &opts()).unwrap();
        assert!(r.fitted_constant > 0.0);
        assert!(r.extras.contains_key("c3_backbone") && r.extras.contains_key("c3_tooth_top"));
        for row in &r.rows {
            let (x, y, t) = (
                row.point.x.unwrap(),
                row.point.y.unwrap(),
                row.point.time.unwrap(),
            );
            assert_eq!((tree_parity(x, y) + t) % 2, 0);
        }
        reproduces(&r, &comb);
        let capped = CheckOptions {
            work_cap: 10,
            ..opts()
        };
        assert!(matches!(
            check_lower_bound(&comb, &[8], &capped),
            Err(Error::ResourceLimit { .. })
        ));
    }

    fn tree_parity(x: Vertex, y: Vertex) -> u64 {
        crate::graph::tree_distance(x, y) % 2
    }

    #[test]
    fn hkbound_holds_exactly() {
        let comb = Comb::log(1.0).unwrap();
        let r = check_hkbound(&comb, 4, 12, 6, 100, &opts()).unwrap();
        assert!(r.pass, "{:?}", r.notes);
        assert_eq!(r.extras["exact_points"], 100.0);
        assert!(r.extras["float_vs_exact_max_rel_diff"] < 1e-12);
        reproduces(&r, &comb);
    }

    #[test]
    fn lemma21_small() {
        let comb = Comb::log(1.0).unwrap();
        let r = check_lemma21(&comb, 12, &opts()).unwrap();
        assert!(r.pass, "{:?}", r.notes);
        for row in &r.rows {
            let n = row.point.time.unwrap() as usize;
            let o = Vertex::ORIGIN;
            assert_eq!(
                row.lhs,
                triple_collision_probability(&comb, o, o, o, n, None).unwrap()
            );
        }
        reproduces(&r, &comb);
    }

    #[test]
    fn quadruple_tail() {
        let comb = Comb::log(1.0).unwrap();
        let r = check_quadruple(&comb, 200, 100, &opts()).unwrap();
        assert!(r.extras["max_tail_increment"] < 1e-2);
        assert_eq!(
            r.per_scale.iter().map(|s| s.scale).collect::<Vec<_>>(),
            vec![1, 2, 4, 8, 16, 32, 64]
        );
        reproduces(&r, &comb);
        assert!(check_quadruple(&comb, 10, 20, &opts()).is_err());
    }
}
