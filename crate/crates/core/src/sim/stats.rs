use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CombSpec, Vertex};

use super::config::SimConfig;
use super::replica::{simulate_replica, step_walker, RunRecord};
use super::rng::{replica_seed, rng_from_seed, splitmix64};

/// Sample mean with its standard error and a normal 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub ci95_half_width: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "an estimate needs at least 2 replicas, got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std_error = (var / n).sqrt();
        Ok(Estimate {
            mean,
            std_error,
            replicas: xs.len() as u64,
            ci95_half_width: 1.959_963_984_540_054 * std_error,
        })
    }

    pub fn from_indicators(hits: impl IntoIterator<Item = bool>) -> Result<Self> {
        let xs: Vec<f64> = hits
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect();
        Self::from_samples(&xs)
    }

    /// `|mean - value| <= k * std_error`, with a floor for zero-variance samples.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error.max(1e-12)
    }
}

/// Run all replicas on `jobs` workers and hand the records to `sink` in
/// replica order. Output depends only on the configuration, never on `jobs`.
pub fn run_replicas<F>(config: &SimConfig, jobs: usize, mut sink: F) -> Result<()>
where
    F: FnMut(RunRecord) -> Result<()>,
{
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let cancel = AtomicBool::new(false);
    let (tx, rx) = mpsc::sync_channel::<RunRecord>(1024);
    std::thread::scope(|s| {
        let cancel = &cancel;
        s.spawn(move || {
            pool.install(|| {
                (0..config.replicas)
                    .into_par_iter()
                    .for_each_with(tx, |tx, id| {
                        if cancel.load(Ordering::Relaxed) {
                            return;
                        }
                        if tx.send(simulate_replica(config, id)).is_err() {
                            cancel.store(true, Ordering::Relaxed);
                        }
                    });
            })
        });
        let mut pending = BTreeMap::new();
        let mut next = 0u64;
        for record in rx.iter() {
            pending.insert(record.replica_id, record);
            while let Some(r) = pending.remove(&next) {
                if let Err(e) = sink(r) {
                    cancel.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                next += 1;
            }
        }
        Ok(())
    })
}

pub fn collect_replicas(config: &SimConfig, jobs: usize) -> Result<Vec<RunRecord>> {
    let mut out = Vec::with_capacity(config.replicas as usize);
    run_replicas(config, jobs, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Fraction of replicas with at least one `H1` collision.
pub fn first_meeting_prob(records: &[RunRecord]) -> Result<Estimate> {
    Estimate::from_indicators(
        records
            .iter()
            .map(|r| r.counters.as_ref().is_some_and(|c| c.h1 >= 1)),
    )
}

pub fn estimate_first_meeting_prob(config: &SimConfig, jobs: usize) -> Result<Estimate> {
    first_meeting_prob(&collect_replicas(config, jobs)?)
}

/// Estimates of the main per-replica statistics.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub replicas: u64,
    pub collisions: Option<Estimate>,
    pub h1: Option<Estimate>,
    pub h2: Option<Estimate>,
    pub hn: Option<Estimate>,
    pub h1_at_least_one: Option<Estimate>,
    pub met_before_horizon: Option<Estimate>,
    pub exited_before_horizon: Estimate,
    pub median_theta: Option<f64>,
    pub probe_meet: Vec<Estimate>,
    pub probe_meet_alive: Vec<Estimate>,
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    let multi = records.first().is_some_and(|r| r.counters.is_some());
    let counter = |f: fn(&super::Counters) -> u64| -> Result<Option<Estimate>> {
        if !multi {
            return Ok(None);
        }
        let xs: Vec<f64> = records
            .iter()
            .map(|r| f(r.counters.as_ref().unwrap()) as f64)
            .collect();
        Estimate::from_samples(&xs).map(Some)
    };
    let thetas: Vec<f64> = records
        .iter()
        .filter_map(|r| r.theta.map(|t| t as f64))
        .collect();
    let probes = records.first().map_or(0, |r| r.probe_meet.len());
    let probe = |alive: bool| -> Result<Vec<Estimate>> {
        (0..probes)
            .map(|i| {
                Estimate::from_indicators(records.iter().map(|r| {
                    if alive {
                        r.probe_meet_alive[i]
                    } else {
                        r.probe_meet[i]
                    }
                }))
            })
            .collect()
    };
    Ok(Summary {
        replicas: records.len() as u64,
        collisions: counter(|c| c.collisions)?,
        h1: counter(|c| c.h1)?,
        h2: counter(|c| c.h2)?,
        hn: counter(|c| c.hn)?,
        h1_at_least_one: if multi {
            Some(first_meeting_prob(records)?)
        } else {
            None
        },
        met_before_horizon: if multi {
            Some(Estimate::from_indicators(
                records.iter().map(|r| r.sigma.is_some()),
            )?)
        } else {
            None
        },
        exited_before_horizon: Estimate::from_indicators(
            records.iter().map(|r| r.theta.is_some()),
        )?,
        median_theta: (thetas.len() * 2 > records.len()).then(|| quantile(&thetas, 0.5)),
        probe_meet: probe(false)?,
        probe_meet_alive: probe(true)?,
    })
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// `max(log^{1-alpha} N, log log N, 1e-6)`.
pub fn growth_denominator(spec: &CombSpec, n: u64) -> f64 {
    let l = spec.log_of(n as f64);
    let a = if l > 0.0 {
        l.powf(1.0 - spec.alpha())
    } else {
        0.0
    };
    let b = if l > 0.0 { l.ln() } else { f64::NEG_INFINITY };
    a.max(b).max(1e-6)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub replica: u64,
    pub n: u64,
    pub c_n: u64,
    pub statistic: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthQuantiles {
    pub n: u64,
    pub denominator: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub alpha: f64,
    pub grid: Vec<u64>,
    pub dropped: Vec<u64>,
    pub warnings: Vec<String>,
    pub rows: Vec<GrowthRow>,
    pub quantiles: Vec<GrowthQuantiles>,
}

/// `C_N / max(log^{1-alpha} N, log log N)` at every `N` of the grid, each
/// replica being one long run observed at the grid times.
pub fn growth_statistic(config: &SimConfig, n_grid: &[u64], jobs: usize) -> Result<GrowthReport> {
    let mut warnings = Vec::new();
    if config.comb.alpha() > 1.0 {
        warnings.push(format!(
            "alpha = {} > 1: the growth statistic is expected to vanish",
            config.comb.alpha()
        ));
    }
    let mut grid: Vec<u64> = n_grid.iter().copied().filter(|&n| n >= 16).collect();
    grid.sort_unstable();
    grid.dedup();
    let dropped: Vec<u64> = n_grid.iter().copied().filter(|&n| n < 16).collect();
    if !dropped.is_empty() {
        warnings.push(format!("grid points below 16 dropped: {dropped:?}"));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "growth grid has no point N >= 16".into(),
        ));
    }
    let mut cfg = config.clone();
    cfg.horizon = *grid.last().unwrap();
    cfg.checkpoints = grid.clone();
    let spec = config.comb.spec();
    let denominators: Vec<f64> = grid.iter().map(|&n| growth_denominator(spec, n)).collect();
    let mut rows = Vec::new();
    run_replicas(&cfg, jobs, |r| {
        for (i, &n) in grid.iter().enumerate() {
            let c_n = r.checkpoint_counts[i];
            rows.push(GrowthRow {
                replica: r.replica_id,
                n,
                c_n,
                statistic: c_n as f64 / denominators[i],
            });
        }
        Ok(())
    })?;
    let quantiles = grid
        .iter()
        .zip(&denominators)
        .map(|(&n, &d)| {
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.statistic)
                .collect();
            GrowthQuantiles {
                n,
                denominator: d,
                q25: quantile(&xs, 0.25),
                median: quantile(&xs, 0.5),
                q75: quantile(&xs, 0.75),
                mean: xs.iter().sum::<f64>() / xs.len().max(1) as f64,
            }
        })
        .collect();
    Ok(GrowthReport {
        alpha: config.comb.alpha(),
        grid,
        dropped,
        warnings,
        rows,
        quantiles,
    })
}

/// Distribution summary of the strip exit time `theta_{hN}` at one scale.
#[derive(Clone, Debug, Serialize)]
pub struct ExitSummary {
    pub n_scale: u64,
    pub replicas: u64,
    /// Runs stopped at `cap` before exiting.
    pub censored: u64,
    pub cap: u64,
    /// Runs with `theta > N^4`.
    pub exceed_n4: u64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    /// `median / (N^2 log^alpha N)`.
    pub median_ratio: f64,
    /// `3 R(0, V_hN^c) |V_hN| / N^4` for a single walker started at the origin
    /// (the resistance is `hN + 1` on the backbone).
    pub commute_bound: f64,
}

/// First exit time of `V_{hN}` by any of the walkers, stopped at `cap`.
pub fn sample_exit_time(config: &SimConfig, replica_id: u64, cap: u64) -> Option<u64> {
    let mut s = config.master_seed ^ config.n_scale.rotate_left(32);
    let stream = splitmix64(&mut s);
    let mut rng = rng_from_seed(replica_seed(stream, replica_id));
    let w = config.alive_strip().half_width;
    let mut pos: Vec<Vertex> = config.starts.clone();
    if pos.iter().any(|p| p.n.unsigned_abs() > w) {
        return Some(0);
    }
    for t in 1..=cap {
        for p in pos.iter_mut() {
            *p = step_walker(&config.comb, *p, &mut rng);
            if p.n.unsigned_abs() > w {
                return Some(t);
            }
        }
    }
    None
}

pub fn exit_time_stats(
    config: &SimConfig,
    n_grid: &[u64],
    jobs: usize,
    cap: Option<u64>,
) -> Result<Vec<ExitSummary>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let spec = config.comb.spec();
    let mut out = Vec::new();
    for &n in n_grid {
        let mut cfg = config.clone();
        cfg.n_scale = n;
        let n4 = n.saturating_pow(4);
        let cap = cap.unwrap_or(n4).min(n4.saturating_add(1));
        let times: Vec<Option<u64>> = pool.install(|| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|id| sample_exit_time(&cfg, id, cap))
                .collect()
        });
        let done: Vec<f64> = times.iter().flatten().map(|&t| t as f64).collect();
        let censored = times.iter().filter(|t| t.is_none()).count() as u64;
        let exceed_n4 = times.iter().filter(|t| t.is_none_or(|t| t > n4)).count() as u64;
        // Censored runs count as +infinity for the quantiles.
        let mut all: Vec<f64> = done.clone();
        all.extend(std::iter::repeat_n(f64::INFINITY, censored as usize));
        let scale = (n as f64).powi(2) * spec.log_power(n as f64);
        let median = quantile(&all, 0.5);
        let hn = cfg.alive_strip().half_width;
        let volume = config
            .comb
            .region_vertices(&crate::graph::Region::strip(hn))
            .len() as f64;
        out.push(ExitSummary {
            n_scale: n,
            replicas: cfg.replicas,
            censored,
            cap,
            exceed_n4,
            q10: quantile(&all, 0.1),
            median,
            q90: quantile(&all, 0.9),
            median_ratio: if scale > 0.0 {
                median / scale
            } else {
                f64::NAN
            },
            commute_bound: 3.0 * (hn + 1) as f64 * volume / (n as f64).powi(4),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Comb;

    fn config() -> SimConfig {
        let mut c = SimConfig::new(Comb::log(1.0).unwrap(), vec![Vertex::backbone(10); 3], 16);
        c.horizon = 300;
        c.replicas = 64;
        c.master_seed = 99;
        c
    }

    #[test]
    fn estimates() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(Estimate::from_samples(&[1.0]).is_err());
        let z = Estimate::from_samples(&[0.0, 0.0]).unwrap();
        assert!(z.agrees_with(0.0, 3.0));
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), 1.25);
    }

    #[test]
    fn ordered_and_job_independent() {
        let c = config();
        let one = collect_replicas(&c, 1).unwrap();
        let four = collect_replicas(&c, 4).unwrap();
        assert_eq!(one, four);
        assert!(one
            .iter()
            .enumerate()
            .all(|(i, r)| r.replica_id == i as u64));
    }

    #[test]
    fn zero_horizon() {
        let mut c = config();
        c.horizon = 0;
        let p = estimate_first_meeting_prob(&c, 2).unwrap();
        assert_eq!(p.mean, 0.0);
    }

    #[test]
    fn sink_errors_stop_the_run() {
        let c = config();
        let mut seen = 0;
        let err = run_replicas(&c, 2, |_| {
            seen += 1;
            if seen == 3 {
                Err(Error::Domain("stop".into()))
            } else {
                Ok(())
            }
        });
        assert!(err.is_err());
        assert_eq!(seen, 3);
    }

    #[test]
    fn growth_denominators() {
        let one = Comb::log(1.0).unwrap();
        // alpha = 1: log^0 = 1 loses to log log N once N > e^e.
        assert_eq!(growth_denominator(one.spec(), 1000), 1000f64.ln().ln());
        assert_eq!(growth_denominator(one.spec(), 10), 1.0);
        let half = Comb::log(0.5).unwrap();
        assert_eq!(growth_denominator(half.spec(), 1000), 1000f64.ln().sqrt());
        let mut c = config();
        c.starts = vec![Vertex::ORIGIN; 3];
        let report = growth_statistic(&c, &[4, 16, 64], 2).unwrap();
        assert_eq!(report.dropped, vec![4]);
        assert_eq!(report.grid, vec![16, 64]);
        assert_eq!(report.rows.len(), 2 * c.replicas as usize);
        assert!(growth_statistic(&c, &[2, 8], 1).is_err());
    }

    #[test]
    fn exit_times() {
        let mut c = config();
        c.starts = vec![Vertex::ORIGIN];
        c.replicas = 40;
        let stats = exit_time_stats(&c, &[1, 8], 2, None).unwrap();
        assert_eq!(stats[0].n_scale, 1);
        assert!(stats.iter().all(|s| s.exceed_n4 <= s.replicas));
        assert_eq!(stats[1].censored, stats[1].exceed_n4);
        assert!(stats[1].censored < stats[1].replicas);
        assert!(stats[1].median >= (4 * 8) as f64);
    }
}
