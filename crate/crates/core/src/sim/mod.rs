//! Monte Carlo engine for independent walkers on a comb.

mod config;
mod replica;
pub mod rng;
mod stats;

pub use config::{
    default_horizon, ConfigSummary, SimConfig, DEFAULT_C2, DEFAULT_DELTA, DEFAULT_EPS, DEFAULT_H,
};
pub use replica::{simulate_replica, step_walker, Counters, RunRecord};
pub use stats::{
    collect_replicas, estimate_first_meeting_prob, exit_time_stats, first_meeting_prob,
    growth_denominator, growth_statistic, quantile, run_replicas, sample_exit_time, summarize,
    Estimate, ExitSummary, GrowthQuantiles, GrowthReport, GrowthRow, Summary,
};
