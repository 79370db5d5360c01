use rayon::prelude::*;

use super::{spread, BoundReport, BoundSpec, CheckOptions, GridPoint, Orientation, Row};
use crate::error::{Error, Result};
use crate::graph::{Comb, Region, Vertex};
use crate::kernel::DistVector;
use crate::resistance::{exit_times, expected_exit_time_direct};

const ETU_CONSTANT: f64 = 12.0;
const LOWER_CONSTANT: f64 = 1.0 / 2048.0;
const SURVIVAL_DIVISOR: f64 = 4096.0;
/// Radii below `RADIUS_FACTOR * log^alpha N` are outside the lower-bound regime.
const RADIUS_FACTOR: f64 = 256.0;

/// Centres `x` with `N/4 <= x.n <= N`, sampled columns at the backbone and
/// tooth top.
fn centres(comb: &Comb, big_n: u64, opts: &CheckOptions) -> Vec<Vertex> {
    let cols: Vec<u64> = (big_n.div_ceil(4)..=big_n).collect();
    let mut out = Vec::new();
    for w in spread(&cols, opts.max_columns) {
        for x in [0, comb.tooth_height(w as i64)] {
            let v = Vertex::new(w as i64, x);
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

fn default_radii(big_n: u64) -> Vec<u64> {
    (0..)
        .map(|k| 1u64 << k)
        .take_while(|&r| r <= big_n)
        .collect()
}

fn survival_time(comb: &Comb, big_n: u64, r: u64) -> u64 {
    ((r * r) as f64 * comb.spec().log_power(big_n as f64) / SURVIVAL_DIVISOR).floor() as u64
}

fn survival(comb: &Comb, x: Vertex, r: u64, t: u64) -> Result<f64> {
    Ok(DistVector::<f64>::point(comb, x, Some(Region::ball(x, r)))?
        .advance(t as usize)
        .total())
}

fn lower_rhs(comb: &Comb, big_n: u64, r: u64) -> f64 {
    LOWER_CONSTANT * (r * r) as f64 * comb.spec().log_power(big_n as f64)
}

/// Exit-time bounds on balls `B(x, r)` for each scale `N`:
///
/// * `etu`: `sup_{y in B(x,r)} E^y tau_B <= 12 r V(x, r)`;
/// * `exit-lower`: `E^x tau_B >= r^2 log^alpha N / 2048` for `r >= 256 log^alpha N`;
/// * `exitprob`: `P^x(tau_B > floor(r^2 log^alpha N / 4096))` bounded below.
///
/// `radii` defaults to the powers of two up to `N`; only `1 <= r <= N` is used.
pub fn check_exit_time_bounds(
    comb: &Comb,
    n_scales: &[u64],
    radii: Option<&[u64]>,
    opts: &CheckOptions,
) -> Result<Vec<BoundReport>> {
    let mut scales: Vec<u64> = n_scales.to_vec();
    scales.sort_unstable();
    scales.dedup();
    let dropped: Vec<u64> = scales.iter().copied().filter(|&n| n < 16).collect();
    scales.retain(|&n| n >= 16);

    let mut etu = Vec::new();
    let mut lower = Vec::new();
    let mut prob = Vec::new();
    let pool = opts.pool()?;
    for &big_n in &scales {
        let rs: Vec<u64> = match radii {
            Some(r) => r
                .iter()
                .copied()
                .filter(|&r| r >= 1 && r <= big_n)
                .collect(),
            None => default_radii(big_n),
        };
        let r_min_lower = RADIUS_FACTOR * comb.spec().log_power(big_n as f64);
        let cases: Vec<(Vertex, u64)> = centres(comb, big_n, opts)
            .into_iter()
            .flat_map(|x| rs.iter().map(move |&r| (x, r)))
            .collect();
        let base = GridPoint {
            alpha: Some(comb.alpha()),
            n_scale: Some(big_n),
            ..Default::default()
        };
        let out: Vec<(Row, Option<Row>, Row)> = pool.install(|| {
            cases
                .par_iter()
                .map(|&(x, r)| {
                    let ball = comb.ball(x, r)?;
                    let times = exit_times(comb, &ball.members)?;
                    let (i, sup) = times
                        .iter()
                        .copied()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                    let vol = ball.volume();
                    let p = GridPoint {
                        x: Some(x),
                        y: Some(ball.members[i]),
                        radius: Some(r),
                        ..base.clone()
                    };
                    let up = Row::new(big_n, p, sup, ETU_CONSTANT * r as f64 * vol as f64);

                    let lo = (r as f64 >= r_min_lower).then(|| {
                        let at = ball
                            .members
                            .binary_search(&x)
                            .map(|j| times[j])
                            .unwrap_or(0.0);
                        let p = GridPoint {
                            x: Some(x),
                            radius: Some(r),
                            ..base.clone()
                        };
                        Row::new(big_n, p, at, lower_rhs(comb, big_n, r))
                    });

                    let t = survival_time(comb, big_n, r);
                    let p = GridPoint {
                        x: Some(x),
                        radius: Some(r),
                        time: Some(t),
                        ..base.clone()
                    };
                    let pr = Row::new(big_n, p, survival(comb, x, r, t)?, 1.0);
                    Ok((up, lo, pr))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (u, l, p) in out {
            etu.push(u);
            lower.extend(l);
            prob.push(p);
        }
    }

    let alpha = Some(comb.alpha());
    let grid = format!(
        "N in {scales:?}, x in V_N \\ V_N/4 (sampled columns, backbone and tooth top), r {}",
        radii.map_or("in powers of 2 up to N".to_string(), |r| format!(
            "in {r:?} with 1 <= r <= N"
        ))
    );
    let mut reports = vec![
        BoundReport::assemble(
            BoundSpec {
                id: "etu",
                alpha,
                grid: grid.clone(),
                orientation: Orientation::Upper,
                stated: Some(ETU_CONSTANT),
            },
            etu,
            opts,
        ),
        BoundReport::assemble(
            BoundSpec {
                id: "exit-lower",
                alpha,
                grid: format!("{grid}, r >= 256 log^alpha N"),
                orientation: Orientation::Lower,
                stated: Some(LOWER_CONSTANT),
            },
            lower,
            opts,
        ),
        BoundReport::assemble(
            BoundSpec {
                id: "exitprob",
                alpha,
                grid: format!("{grid}, t = floor(r^2 log^alpha N / 4096)"),
                orientation: Orientation::Lower,
                stated: None,
            },
            prob,
            opts,
        ),
    ];
    reports[2].note("evaluated on the whole radius grid, including radii below 256 log^alpha N");
    if !dropped.is_empty() {
        for r in reports.iter_mut() {
            r.note(format!("scales below 16 dropped: {dropped:?}"));
        }
    }
    Ok(reports)
}

pub(crate) fn eval(id: &str, comb: &Comb, p: &GridPoint) -> Result<(f64, f64)> {
    let missing = || Error::InvalidParameter(format!("grid point {p} is incomplete"));
    let x = p.x.ok_or_else(missing)?;
    let r = p.radius.ok_or_else(missing)?;
    let big_n = p.n_scale.ok_or_else(missing)?;
    let ball = comb.ball(x, r)?;
    match id {
        "etu" => {
            let y = p.y.ok_or_else(missing)?;
            let lhs = expected_exit_time_direct(comb, y, &ball.members)?;
            Ok((lhs, ETU_CONSTANT * r as f64 * ball.volume() as f64))
        }
        "exit-lower" => Ok((
            expected_exit_time_direct(comb, x, &ball.members)?,
            lower_rhs(comb, big_n, r),
        )),
        "exitprob" => {
            let t = p.time.ok_or_else(missing)?;
            Ok((survival(comb, x, r, t)?, 1.0))
        }
        _ => Err(Error::InvalidParameter(format!("unknown exit bound {id}"))),
    }
}
