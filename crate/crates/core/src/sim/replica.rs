use rand::Rng;
use serde::Serialize;

use crate::graph::{Comb, Vertex};

use super::config::SimConfig;
use super::rng::{replica_seed, rng_from_seed};

/// Collision counters of one replica. `collisions` counts all times
/// `1..=horizon` at which every walker is on the same vertex; the others also
/// require that no walker has left `V_{hN}` so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub collisions: u64,
    pub h1: u64,
    pub h2: u64,
    pub hn: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub replica_id: u64,
    pub seed: u128,
    /// First time all walkers coincide (0 if they start together).
    pub sigma: Option<u64>,
    /// First time some walker is outside `V_{hN}`.
    pub theta: Option<u64>,
    pub walker_theta: Vec<Option<u64>>,
    /// `None` for a single walker.
    pub counters: Option<Counters>,
    /// Collision times in `1..=horizon`, truncated to the configured cap.
    pub collision_times: Vec<u64>,
    pub last_collision: Option<u64>,
    /// Collision count and last collision time at each checkpoint.
    pub checkpoint_counts: Vec<u64>,
    pub checkpoint_last: Vec<Option<u64>>,
    /// Whether all walkers coincide at each probe time, and whether they also
    /// are all still alive.
    pub probe_meet: Vec<bool>,
    pub probe_meet_alive: Vec<bool>,
}

/// One step of simple random walk, choosing uniformly by index among the
/// neighbours in canonical order.
#[inline]
pub fn step_walker<R: Rng + ?Sized>(comb: &Comb, v: Vertex, rng: &mut R) -> Vertex {
    let h = comb.tooth_height(v.n);
    if v.x == 0 {
        if h == 0 {
            if rng.gen_range(0..2u32) == 0 {
                Vertex::backbone(v.n - 1)
            } else {
                Vertex::backbone(v.n + 1)
            }
        } else {
            match rng.gen_range(0..3u32) {
                0 => Vertex::backbone(v.n - 1),
                1 => Vertex::new(v.n, 1),
                _ => Vertex::backbone(v.n + 1),
            }
        }
    } else if v.x < h {
        if rng.gen_range(0..2u32) == 0 {
            Vertex::new(v.n, v.x - 1)
        } else {
            Vertex::new(v.n, v.x + 1)
        }
    } else {
        Vertex::new(v.n, v.x - 1)
    }
}

pub fn simulate_replica(config: &SimConfig, replica_id: u64) -> RunRecord {
    let seed = replica_seed(config.master_seed, replica_id);
    let mut rng = rng_from_seed(seed);
    let comb = &config.comb;
    let k = config.walkers();
    let multi = k >= 2;
    let alive_w = config.alive_strip().half_width;
    let n_scale = config.n_scale;
    let (band_lo, band_hi) = config.h1_band();
    let t1 = config.t1();
    let t2 = config.t2();
    let h1_lo = n_scale / 2;

    let mut pos = config.starts.clone();
    let coincide = |pos: &[Vertex]| pos.iter().all(|p| *p == pos[0]);
    let mut sigma = (multi && coincide(&pos)).then_some(0);
    let mut walker_theta: Vec<Option<u64>> = pos
        .iter()
        .map(|p| (p.n.unsigned_abs() > alive_w).then_some(0))
        .collect();
    let mut theta = walker_theta.iter().flatten().min().copied();
    let mut counters = Counters::default();
    let mut collision_times = Vec::new();
    let mut last_collision = None;

    let mut checkpoints: Vec<(u64, usize)> = config.checkpoints.iter().copied().zip(0..).collect();
    checkpoints.sort_unstable();
    let mut checkpoint_counts = vec![0; checkpoints.len()];
    let mut checkpoint_last = vec![None; checkpoints.len()];
    let mut next_checkpoint = 0;
    let mut probes: Vec<(u64, usize)> = config.probes.iter().copied().zip(0..).collect();
    probes.sort_unstable();
    let mut probe_meet = vec![false; probes.len()];
    let mut probe_meet_alive = vec![false; probes.len()];
    let mut next_probe = 0;

    let mut record_checkpoints =
        |t: u64, counters: &Counters, last: Option<u64>, next: &mut usize| {
            while *next < checkpoints.len() && checkpoints[*next].0 <= t {
                let slot = checkpoints[*next].1;
                checkpoint_counts[slot] = counters.collisions;
                checkpoint_last[slot] = last;
                *next += 1;
            }
        };
    record_checkpoints(0, &counters, None, &mut next_checkpoint);
    while next_probe < probes.len() && probes[next_probe].0 == 0 {
        let met = multi && coincide(&pos);
        probe_meet[probes[next_probe].1] = met;
        probe_meet_alive[probes[next_probe].1] = met && theta.is_none();
        next_probe += 1;
    }

    for t in 1..=config.horizon {
        for (i, p) in pos.iter_mut().enumerate() {
            *p = step_walker(comb, *p, &mut rng);
            if walker_theta[i].is_none() && p.n.unsigned_abs() > alive_w {
                walker_theta[i] = Some(t);
                theta.get_or_insert(t);
            }
        }
        let alive = theta.is_none();
        if multi && coincide(&pos) {
            let w = pos[0];
            sigma.get_or_insert(t);
            counters.collisions += 1;
            last_collision = Some(t);
            if collision_times.len() < config.max_recorded_collisions {
                collision_times.push(t);
            }
            if alive {
                counters.hn += 1;
                let u = w.n.unsigned_abs();
                if t <= t1
                    && w.n > 0
                    && u > h1_lo
                    && u <= n_scale
                    && w.x >= band_lo
                    && w.x <= band_hi
                {
                    counters.h1 += 1;
                }
                if t <= t2 && u > h1_lo && u <= 2 * n_scale {
                    counters.h2 += 1;
                }
            }
        }
        record_checkpoints(t, &counters, last_collision, &mut next_checkpoint);
        while next_probe < probes.len() && probes[next_probe].0 == t {
            let met = multi && coincide(&pos);
            probe_meet[probes[next_probe].1] = met;
            probe_meet_alive[probes[next_probe].1] = met && alive;
            next_probe += 1;
        }
    }
    // Checkpoints past the horizon see the final state.
    record_checkpoints(u64::MAX, &counters, last_collision, &mut next_checkpoint);

    RunRecord {
        replica_id,
        seed,
        sigma: if multi { sigma } else { None },
        theta,
        walker_theta,
        counters: multi.then_some(counters),
        collision_times,
        last_collision,
        checkpoint_counts,
        checkpoint_last,
        probe_meet,
        probe_meet_alive,
    }
}
