//! Numerical checks of the heat-kernel, exit-time and moment inequalities.
//!
//! Each check evaluates both sides of an inequality over a grid of points and
//! returns a [`BoundReport`]. When the inequality only asserts that some
//! constant exists, the constant is fitted, both globally and per scale, and
//! boundedness is judged from the trend of the per-scale constants.

mod config;
mod exit;
mod heat;
mod oned;
mod second_moment;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Comb, Vertex};

pub use config::{parse_key_values, run_bounds, BoundsConfig, FamilyKind, BOUND_IDS};
pub use exit::check_exit_time_bounds;
pub use heat::{
    check_hkbound, check_hku1, check_hku2, check_lemma21, check_lower_bound, check_quadruple,
};
pub use oned::check_hk1d;
pub use second_moment::{
    check_moment_shape, check_paley_zygmund, toy_distributions, ToyDistribution,
};

/// Tuning shared by all checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOptions {
    /// Killed kernels live on `V_{hN}`.
    pub h: u64,
    /// Time window `[c1, c2] * N^2 log^alpha N` of the heat-kernel lower bound.
    pub window_c1: f64,
    pub window_c2: f64,
    pub hk1d_eps: f64,
    /// `n <= c1 L^2` in the interval lower bound.
    pub hk1d_c1: f64,
    /// `|x - y| <= c2 sqrt(n)` in the interval lower bound.
    pub hk1d_c2: f64,
    pub pz_eta: f64,
    pub eps: f64,
    pub delta: f64,
    pub c2: f64,
    /// Largest admissible log-log slope of fitted constants.
    pub trend_max: f64,
    /// Per-scale constants below this scale are reported but left out of the
    /// trend and stability tests.
    pub trend_min_scale: u64,
    /// Largest admissible max/min ratio of fitted lower-bound constants.
    pub stability_factor: f64,
    pub work_cap: u128,
    pub mc_replicas: u64,
    pub seed: u64,
    pub jobs: usize,
    /// Number of tooth columns sampled per scale when a check ranges over
    /// starting points.
    pub max_columns: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            h: crate::sim::DEFAULT_H,
            window_c1: 0.25,
            window_c2: 0.5,
            hk1d_eps: 0.25,
            hk1d_c1: 0.1,
            hk1d_c2: 0.5,
            pz_eta: 0.5,
            eps: crate::sim::DEFAULT_EPS,
            delta: crate::sim::DEFAULT_DELTA,
            c2: crate::sim::DEFAULT_C2,
            trend_max: 0.05,
            trend_min_scale: 16,
            stability_factor: 2.0,
            work_cap: crate::kernel::moments::DEFAULT_WORK_CAP,
            mc_replicas: 100_000,
            seed: 0,
            jobs: 1,
            max_columns: 8,
        }
    }
}

impl CheckOptions {
    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `lhs <= rhs`.
    Upper,
    /// `lhs >= rhs`.
    Lower,
}

/// Coordinates of one evaluation. One-dimensional checks store interval
/// sites as backbone vertices.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GridPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_scale: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vertex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vertex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<u64>,
    /// Auxiliary level, e.g. a threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        if let Some(n) = self.n_scale {
            parts.push(format!("N={n}"));
        }
        if let Some(x) = self.x {
            parts.push(format!("x={x}"));
        }
        if let Some(y) = self.y {
            parts.push(format!("y={y}"));
        }
        if let Some(t) = self.time {
            parts.push(format!("n={t}"));
        }
        if let Some(r) = self.radius {
            parts.push(format!("r={r}"));
        }
        if let Some(l) = self.level {
            parts.push(format!("level={l}"));
        }
        if let Some(l) = &self.label {
            parts.push(l.clone());
        }
        f.write_str(&parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    /// Grid scale the row belongs to for constant fitting.
    pub scale: u64,
    pub point: GridPoint,
    pub lhs: f64,
    /// Right-hand side with the stated constant, or with constant 1 when the
    /// constant is fitted.
    pub rhs: f64,
    pub ratio: f64,
}

impl Row {
    pub fn new(scale: u64, point: GridPoint, lhs: f64, rhs: f64) -> Self {
        Row {
            scale,
            point,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
        }
    }
}

/// `lhs / rhs` with `0 / 0 = 0`.
pub(crate) fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleConstant {
    pub scale: u64,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_id: String,
    pub alpha: Option<f64>,
    pub grid: String,
    pub orientation: Orientation,
    /// Constant fixed by the statement, if any; otherwise it is fitted.
    pub stated_constant: Option<f64>,
    /// Extremal `lhs / rhs` once the constant (stated or fitted) is applied.
    pub worst_ratio: f64,
    /// Best constant making the inequality hold on the whole grid.
    pub fitted_constant: f64,
    pub per_scale: Vec<ScaleConstant>,
    /// Least-squares slope of `log constant` against `log scale`.
    pub trend_slope: Option<f64>,
    /// Largest over smallest per-scale constant.
    pub stability: Option<f64>,
    pub pass: bool,
    pub empty: bool,
    pub mc_fallback: bool,
    /// The extremal row overall, then the extremal row of each scale.
    pub witnesses: Vec<Row>,
    pub extras: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

/// Static description of a bound, used to assemble its report.
pub(crate) struct BoundSpec {
    pub id: &'static str,
    pub alpha: Option<f64>,
    pub grid: String,
    pub orientation: Orientation,
    pub stated: Option<f64>,
}

fn worse(orientation: Orientation, a: f64, b: f64) -> bool {
    match orientation {
        Orientation::Upper => a > b,
        Orientation::Lower => a < b,
    }
}

/// Least-squares slope of `ln y` on `ln x` over points with `x, y > 0`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

impl BoundReport {
    pub(crate) fn assemble(spec: BoundSpec, rows: Vec<Row>, opts: &CheckOptions) -> Self {
        let mut report = BoundReport {
            bound_id: spec.id.to_string(),
            alpha: spec.alpha,
            grid: spec.grid,
            orientation: spec.orientation,
            stated_constant: spec.stated,
            worst_ratio: f64::NAN,
            fitted_constant: f64::NAN,
            per_scale: Vec::new(),
            trend_slope: None,
            stability: None,
            pass: true,
            empty: rows.is_empty(),
            mc_fallback: false,
            witnesses: Vec::new(),
            extras: BTreeMap::new(),
            notes: Vec::new(),
            rows,
        };
        if report.empty {
            report.notes.push("no admissible grid point".into());
            return report;
        }
        let o = spec.orientation;
        let rows = &report.rows;
        let mut worst = 0;
        let mut by_scale: BTreeMap<u64, usize> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            if worse(o, r.ratio, rows[worst].ratio) || rows[worst].ratio.is_nan() {
                worst = i;
            }
            let e = by_scale.entry(r.scale).or_insert(i);
            if worse(o, r.ratio, rows[*e].ratio) {
                *e = i;
            }
        }
        let extreme = rows[worst].ratio;
        let k = spec.stated.unwrap_or(1.0);
        report.fitted_constant = k * extreme;
        report.worst_ratio = match spec.stated {
            Some(_) => extreme,
            None if extreme > 0.0 && extreme.is_finite() => 1.0,
            None => extreme,
        };
        report.per_scale = by_scale
            .iter()
            .map(|(&scale, &i)| ScaleConstant {
                scale,
                constant: k * rows[i].ratio,
            })
            .collect();
        let pts: Vec<(f64, f64)> = report
            .per_scale
            .iter()
            .filter(|s| s.scale >= opts.trend_min_scale)
            .map(|s| (s.scale as f64, s.constant))
            .collect();
        report.trend_slope = log_log_slope(&pts);
        if pts.len() >= 2 {
            let max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            report.stability = Some(if min > 0.0 { max / min } else { f64::INFINITY });
        }
        report.witnesses.push(rows[worst].clone());
        for &i in by_scale.values() {
            if i != worst {
                report.witnesses.push(rows[i].clone());
            }
        }

        let on_side = match o {
            Orientation::Upper => report.worst_ratio <= 1.0,
            Orientation::Lower => report.worst_ratio >= 1.0,
        };
        if !on_side || !report.fitted_constant.is_finite() {
            report.fail(format!(
                "worst ratio {} is on the wrong side of 1",
                report.worst_ratio
            ));
        }
        if spec.stated.is_none() {
            if let Some(s) = report.trend_slope {
                if s > opts.trend_max {
                    report.fail(format!("fitted constants trend with slope {s:.4}"));
                } else if o == Orientation::Lower && s < -opts.trend_max {
                    // A decaying lower constant is bounded by the stability test.
                    report
                        .notes
                        .push(format!("fitted constants decrease with slope {s:.4}"));
                }
            }
            if let Some(s) = report.stability.filter(|_| o == Orientation::Lower) {
                if s > opts.stability_factor {
                    report.fail(format!(
                        "fitted constants vary by a factor {s:.3} > {}",
                        opts.stability_factor
                    ));
                }
            }
        }
        report
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.pass = false;
        self.notes.push(note.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

/// Recompute `lhs / rhs` at a row of a report. `comb` must be the comb the
/// report was produced on (ignored by the one-dimensional and toy checks).
pub fn reevaluate(
    report: &BoundReport,
    row: &Row,
    comb: &Comb,
    opts: &CheckOptions,
) -> Result<f64> {
    let (lhs, rhs) = match report.bound_id.as_str() {
        "hku1" => heat::eval_hku1(comb, &row.point)?,
        "hku2-small-n" | "hku2-large-n" => heat::eval_hku2(comb, &row.point)?,
        "lower-corollary" => heat::eval_lower(comb, &row.point, opts)?,
        "hkbound" => heat::eval_hkbound(comb, &row.point)?,
        "lemma21" => heat::eval_lemma21(comb, &row.point)?,
        "quadruple" => heat::eval_quadruple(comb, &row.point)?,
        "etu" | "exit-lower" | "exitprob" => exit::eval(&report.bound_id, comb, &row.point)?,
        "hk1d" => oned::eval(&row.point)?,
        "PZI" => second_moment::eval_pzi(&row.point, opts)?,
        "expH-shape" | "secmomH-shape" | "B-shape" => {
            second_moment::eval_shape(&report.bound_id, comb, &row.point, opts)?
        }
        other => return Err(Error::InvalidParameter(format!("unknown bound id {other}"))),
    };
    Ok(ratio(lhs, rhs))
}

/// Evenly spaced picks of at most `k` items, always keeping both ends.
pub(crate) fn spread<T: Copy>(items: &[T], k: usize) -> Vec<T> {
    if items.len() <= k {
        return items.to_vec();
    }
    if k < 2 {
        return items.iter().copied().take(k).collect();
    }
    let last = items.len() - 1;
    let mut idx: Vec<usize> = (0..k).map(|i| i * last / (k - 1)).collect();
    idx.dedup();
    idx.into_iter().map(|i| items[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scale: u64, lhs: f64, rhs: f64) -> Row {
        Row::new(scale, GridPoint::default(), lhs, rhs)
    }

    fn spec(o: Orientation, stated: Option<f64>) -> BoundSpec {
        BoundSpec {
            id: "t",
            alpha: None,
            grid: String::new(),
            orientation: o,
            stated,
        }
    }

    #[test]
    fn slope() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(0.5)))
            .collect();
        assert!((log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn stated_orientation() {
        let opts = CheckOptions::default();
        let r = BoundReport::assemble(
            spec(Orientation::Upper, Some(2.0)),
            vec![row(1, 1.0, 2.0), row(2, 3.0, 4.0)],
            &opts,
        );
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 0.75);
        assert_eq!(r.fitted_constant, 1.5);
        assert_eq!(r.witnesses[0].ratio, 0.75);
        let r = BoundReport::assemble(
            spec(Orientation::Upper, Some(1.0)),
            vec![row(1, 5.0, 4.0)],
            &opts,
        );
        assert!(!r.pass);
        let r = BoundReport::assemble(
            spec(Orientation::Lower, Some(1.0)),
            vec![row(1, 5.0, 4.0), row(1, 0.5, 1.0)],
            &opts,
        );
        assert!(!r.pass);
        assert_eq!(r.worst_ratio, 0.5);
    }

    #[test]
    fn fitted_constants_and_trend() {
        let opts = CheckOptions::default();
        // Flat per-scale constants pass.
        let rows = vec![
            row(16, 1.1, 1.0),
            row(32, 1.2, 1.0),
            row(64, 1.1, 1.0),
            row(64, 0.2, 1.0),
        ];
        let r = BoundReport::assemble(spec(Orientation::Upper, None), rows, &opts);
        assert!(r.pass, "{:?}", r.notes);
        assert_eq!(r.fitted_constant, 1.2);
        assert_eq!(r.worst_ratio, 1.0);
        assert_eq!(r.per_scale.len(), 3);
        // Growing constants fail the trend test.
        let rows = (4..8)
            .map(|k| row(1 << k, (1u64 << k) as f64, 1.0))
            .collect();
        let r = BoundReport::assemble(spec(Orientation::Upper, None), rows, &opts);
        assert!(!r.pass);
        // Scales below the trend minimum count for the constant only; a
        // decaying upper constant is fine.
        let rows = vec![
            row(1, 0.1, 1.0),
            row(16, 1.0, 1.0),
            row(32, 0.5, 1.0),
            row(64, 0.2, 1.0),
        ];
        let r = BoundReport::assemble(spec(Orientation::Upper, None), rows, &opts);
        assert!(r.pass, "{:?}", r.notes);
        assert!(r.trend_slope.unwrap() < -0.5);
        assert_eq!(r.fitted_constant, 1.0);
        // A lower constant that decays moderately is noted; a collapse or a
        // zero constant fails.
        let rows = vec![row(16, 1.0, 1.0), row(32, 0.9, 1.0), row(64, 0.8, 1.0)];
        let r = BoundReport::assemble(spec(Orientation::Lower, None), rows, &opts);
        assert!(r.pass && r.notes.len() == 1, "{:?}", r.notes);
        let rows = vec![row(16, 1.0, 1.0), row(32, 0.4, 1.0)];
        assert!(!BoundReport::assemble(spec(Orientation::Lower, None), rows, &opts).pass);
        let rows = vec![row(16, 0.5, 1.0), row(32, 0.0, 1.0)];
        let r = BoundReport::assemble(spec(Orientation::Lower, None), rows, &opts);
        assert!(!r.pass);
        assert_eq!(r.fitted_constant, 0.0);
        let r = BoundReport::assemble(spec(Orientation::Lower, None), vec![], &opts);
        assert!(r.pass && r.empty);
    }

    #[test]
    fn spread_keeps_ends() {
        let v: Vec<u32> = (0..100).collect();
        let s = spread(&v, 5);
        assert_eq!(s, vec![0, 24, 49, 74, 99]);
        assert_eq!(spread(&v[..3], 5), vec![0, 1, 2]);
    }
}
