use rayon::prelude::*;

use super::{BoundReport, BoundSpec, CheckOptions, GridPoint, Orientation, Row};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::kernel::{interval_kernel, interval_kernel_rows};

fn shape(n: u64) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// Killed interval kernel `q^L_n(x, y)` against `n^{-1/2}` for
/// `x in [eps L, (1 - eps) L]`, `1 <= n <= c1 L^2`, `|x - y| <= c2 sqrt(n)`
/// and `x - y + n` even. Rows keep the minimum over `(x, y)` for each
/// `(L, n)`.
pub fn check_hk1d(l_grid: &[u64], opts: &CheckOptions) -> Result<BoundReport> {
    let (eps, c1, c2) = (opts.hk1d_eps, opts.hk1d_c1, opts.hk1d_c2);
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "hk1d eps must lie in (0, 1/2), got {eps}"
        )));
    }
    let mut ls: Vec<u64> = l_grid.to_vec();
    ls.sort_unstable();
    ls.dedup();
    let pool = opts.pool()?;
    let mut rows = Vec::new();
    for &l in &ls {
        let lf = l as f64;
        let x_lo = (eps * lf).ceil() as u64;
        let x_hi = ((1.0 - eps) * lf).floor() as u64;
        let n_max = (c1 * lf * lf).floor() as u64;
        if x_lo > x_hi || n_max == 0 || l < 2 {
            continue;
        }
        // best[n] = (q, x, y) minimising q over admissible pairs.
        let per_x: Vec<Vec<Option<(f64, u64, u64)>>> = pool.install(|| {
            (x_lo..=x_hi)
                .into_par_iter()
                .map(|x| {
                    let q = interval_kernel_rows(l, x, n_max as usize)?;
                    Ok((0..=n_max)
                        .map(|n| {
                            if n == 0 {
                                return None;
                            }
                            let reach = (c2 * (n as f64).sqrt()).floor() as u64;
                            let lo = x.saturating_sub(reach).max(1);
                            let hi = (x + reach).min(l - 1);
                            (lo..=hi)
                                .filter(|y| (x + y + n) % 2 == 0)
                                .map(|y| (q[n as usize][y as usize], x, y))
                                .fold(None, |a: Option<(f64, u64, u64)>, b| match a {
                                    Some(a) if a.0 <= b.0 => Some(a),
                                    _ => Some(b),
                                })
                        })
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for n in 1..=n_max {
            let best = per_x.iter().filter_map(|v| v[n as usize]).fold(
                None,
                |a: Option<(f64, u64, u64)>, b| match a {
                    Some(a) if a.0 <= b.0 => Some(a),
                    _ => Some(b),
                },
            );
            if let Some((q, x, y)) = best {
                let p = GridPoint {
                    n_scale: Some(l),
                    x: Some(Vertex::backbone(x as i64)),
                    y: Some(Vertex::backbone(y as i64)),
                    time: Some(n),
                    ..Default::default()
                };
                rows.push(Row::new(l, p, q, shape(n)));
            }
        }
    }
    let spec = BoundSpec {
        id: "hk1d",
        alpha: None,
        grid: format!(
            "L in {ls:?}, x in [{eps} L, {} L], 1 <= n <= {c1} L^2, |x-y| <= {c2} sqrt(n)",
            1.0 - eps
        ),
        orientation: Orientation::Lower,
        stated: None,
    };
    Ok(BoundReport::assemble(spec, rows, opts))
}

pub(crate) fn eval(p: &GridPoint) -> Result<(f64, f64)> {
    match (p.n_scale, p.x, p.y, p.time) {
        (Some(l), Some(x), Some(y), Some(n)) => Ok((
            interval_kernel(l, x.n as u64, y.n as u64, n as usize)?,
            shape(n),
        )),
        _ => Err(Error::InvalidParameter(format!(
            "grid point {p} is incomplete"
        ))),
    }
}
