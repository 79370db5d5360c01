use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Comb, Strip, Vertex};
use crate::kernel::moments::{h1_height_band, t1, t2};

/// Parameters of a Monte Carlo experiment with `k = starts.len()` walkers.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub comb: Comb,
    pub starts: Vec<Vertex>,
    /// Walkers take steps `1..=horizon`.
    pub horizon: u64,
    /// Strip scale `N`.
    pub n_scale: u64,
    /// Walkers are alive while inside `|n| <= h N`.
    pub h: u64,
    pub eps: f64,
    pub delta: f64,
    /// Constant in `T1 = floor(c2 (1 - eps) N^2 log^alpha N)`.
    pub c2: f64,
    pub replicas: u64,
    pub master_seed: u64,
    /// Times at which the running collision count and last collision time
    /// are recorded.
    pub checkpoints: Vec<u64>,
    /// Times at which the record notes whether all walkers coincide.
    pub probes: Vec<u64>,
    pub max_recorded_collisions: usize,
}

pub const DEFAULT_EPS: f64 = 0.3;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_H: u64 = 4;
pub const DEFAULT_C2: f64 = 0.5;

/// `ceil(2 N^2 log^alpha N)`, at least 1.
pub fn default_horizon(comb: &Comb, n_scale: u64) -> u64 {
    let n = n_scale as f64;
    ((2.0 * n * n * comb.spec().log_power(n)).ceil() as u64).max(1)
}

impl SimConfig {
    pub fn new(comb: Comb, starts: Vec<Vertex>, n_scale: u64) -> Self {
        let horizon = default_horizon(&comb, n_scale);
        SimConfig {
            comb,
            starts,
            horizon,
            n_scale,
            h: DEFAULT_H,
            eps: DEFAULT_EPS,
            delta: DEFAULT_DELTA,
            c2: DEFAULT_C2,
            replicas: 1000,
            master_seed: 0,
            checkpoints: Vec::new(),
            probes: Vec::new(),
            max_recorded_collisions: 64,
        }
    }

    pub fn walkers(&self) -> usize {
        self.starts.len()
    }

    pub fn t1(&self) -> u64 {
        t1(self.comb.spec(), self.n_scale, self.eps, self.c2) as u64
    }

    pub fn t2(&self) -> u64 {
        t2(self.comb.spec(), self.n_scale, self.delta) as u64
    }

    pub fn alive_strip(&self) -> Strip {
        Strip::new(self.h.saturating_mul(self.n_scale))
    }

    pub fn h1_band(&self) -> (u64, u64) {
        h1_height_band(self.comb.spec(), self.n_scale, self.eps)
    }

    /// Hard errors for unusable configurations; returns warnings for
    /// suspicious but legal ones.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.starts.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one walker is required".into(),
            ));
        }
        for s in &self.starts {
            self.comb.check(*s)?;
        }
        if self.n_scale == 0 {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        if self.h < 2 {
            return Err(Error::InvalidParameter(format!(
                "h must be an integer >= 2, got {}",
                self.h
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if self.c2.is_nan() || self.c2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "c2 must be positive, got {}",
                self.c2
            )));
        }
        if !self
            .starts
            .iter()
            .all(|s| s.parity() == self.starts[0].parity())
        {
            warnings.push("starts have mixed parity: the walkers can never all meet".to_string());
        }
        let strip = Strip::new(self.n_scale);
        if self.starts.iter().any(|s| !strip.contains(*s)) {
            warnings.push(format!(
                "some starts lie outside |n| <= N = {}",
                self.n_scale
            ));
        }
        let (lo, hi) = self.h1_band();
        if lo > hi {
            warnings.push(format!(
                "H1 target is empty: no integer height in [{lo}, {hi}] for eps={}",
                self.eps
            ));
        }
        if self.horizon < self.t1() {
            warnings.push(format!(
                "horizon {} is shorter than T1 = {}; H1 is truncated",
                self.horizon,
                self.t1()
            ));
        }
        Ok(warnings)
    }

    pub fn summary(&self) -> ConfigSummary {
        ConfigSummary {
            comb: self.comb.spec().describe(),
            alpha: self.comb.alpha(),
            starts: self.starts.iter().map(Vertex::to_string).collect(),
            horizon: self.horizon,
            n_scale: self.n_scale,
            h: self.h,
            eps: self.eps,
            delta: self.delta,
            c2: self.c2,
            t1: self.t1(),
            t2: self.t2(),
            replicas: self.replicas,
            master_seed: self.master_seed,
        }
    }
}

/// Serializable view of a [`SimConfig`].
#[derive(Clone, Debug, Serialize)]
pub struct ConfigSummary {
    pub comb: String,
    pub alpha: f64,
    pub starts: Vec<String>,
    pub horizon: u64,
    pub n_scale: u64,
    pub h: u64,
    pub eps: f64,
    pub delta: f64,
    pub c2: f64,
    pub t1: u64,
    pub t2: u64,
    pub replicas: u64,
    pub master_seed: u64,
}
