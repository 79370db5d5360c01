use crate::error::{Error, Result};

fn check(l: u64, x: u64) -> Result<()> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!(
            "interval length must be at least 2, got {l}"
        )));
    }
    if x > l {
        return Err(Error::Domain(format!("{x} is outside {{0..{l}}}")));
    }
    Ok(())
}

/// `q_n(x, .)` for `n = 0..=n_max`: the kernel of simple random walk on
/// `{0..L}` killed at the endpoints, normalized by the interior degree 2.
/// Entries at the endpoints are 0.
pub fn interval_kernel_rows(l: u64, x: u64, n_max: usize) -> Result<Vec<Vec<f64>>> {
    check(l, x)?;
    let len = l as usize + 1;
    let mut p = vec![0.0; len];
    if x > 0 && x < l {
        p[x as usize] = 1.0;
    }
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut next = vec![0.0; len];
    for n in 0..=n_max {
        if n > 0 {
            next.iter_mut().for_each(|v| *v = 0.0);
            for i in 1..len - 1 {
                let half = p[i] / 2.0;
                if i > 1 {
                    next[i - 1] += half;
                }
                if i + 1 < len - 1 {
                    next[i + 1] += half;
                }
            }
            std::mem::swap(&mut p, &mut next);
        }
        rows.push(p.iter().map(|v| v / 2.0).collect());
    }
    Ok(rows)
}

pub fn interval_kernel(l: u64, x: u64, y: u64, n: usize) -> Result<f64> {
    check(l, y)?;
    Ok(interval_kernel_rows(l, x, n)?[n][y as usize])
}
