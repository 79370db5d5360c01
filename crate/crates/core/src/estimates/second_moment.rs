use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{BoundReport, BoundSpec, CheckOptions, GridPoint, Orientation, Row};
use crate::error::{Error, Result};
use crate::graph::{Comb, Vertex};
use crate::kernel::moments::{h1_target, CountingProblem, Moments};
use crate::sim::{self, growth_denominator, run_replicas, SimConfig};

/// A finitely supported law on the non-negative integers with exact
/// probabilities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToyDistribution {
    pub label: String,
    pub values: Vec<u64>,
    #[serde(skip)]
    pub probs: Vec<BigRational>,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl ToyDistribution {
    /// Normalizes the weights; zero weights are dropped.
    pub fn from_weights(
        label: impl Into<String>,
        weights: Vec<(u64, BigRational)>,
    ) -> Result<Self> {
        let label = label.into();
        let total: BigRational = weights.iter().map(|w| w.1.clone()).sum();
        if total <= BigRational::zero() || weights.iter().any(|w| w.1 < BigRational::zero()) {
            return Err(Error::InvalidParameter(format!(
                "{label}: weights must be non-negative with positive sum"
            )));
        }
        let (values, probs) = weights
            .into_iter()
            .filter(|w| !w.1.is_zero())
            .map(|(v, w)| (v, w / &total))
            .unzip();
        Ok(ToyDistribution {
            label,
            values,
            probs,
        })
    }

    pub fn mean(&self) -> BigRational {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(&v, p)| p * BigInt::from(v))
            .sum()
    }

    pub fn second_moment(&self) -> BigRational {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(&v, p)| p * BigInt::from(v) * BigInt::from(v))
            .sum()
    }

    /// `P(X >= level)`.
    pub fn tail(&self, level: &BigRational) -> BigRational {
        self.values
            .iter()
            .zip(&self.probs)
            .filter(|(&v, _)| BigRational::from_integer(BigInt::from(v)) >= *level)
            .map(|(_, p)| p.clone())
            .sum()
    }
}

fn synthetic() -> Vec<ToyDistribution> {
    let mut out = Vec::new();
    let mut add = |label: String, w: Vec<(u64, BigRational)>| {
        out.push(ToyDistribution::from_weights(label, w).unwrap())
    };
    for c in [1u64, 2, 7] {
        add(format!("constant {c}"), vec![(c, q(1, 1))]);
    }
    for (a, b) in [(1, 100), (1, 10), (1, 2), (9, 10), (1, 1)] {
        add(
            format!("bernoulli {a}/{b}"),
            vec![(0, q(b - a, b)), (1, q(a, b))],
        );
    }
    for (n, a, b) in [
        (2u64, 1i64, 2i64),
        (5, 1, 3),
        (10, 1, 10),
        (10, 1, 2),
        (20, 3, 4),
        (30, 1, 30),
    ] {
        let p = q(a, b);
        let r = BigRational::one() - &p;
        let w = (0..=n)
            .map(|k| {
                let c = binomial(n, k);
                (
                    k,
                    BigRational::from_integer(c) * pow(&p, k) * pow(&r, n - k),
                )
            })
            .collect();
        add(format!("binomial {n} {a}/{b}"), w);
    }
    for (a, b, k_max) in [(1, 2, 20u64), (1, 5, 50), (1, 10, 100), (9, 10, 10)] {
        let p = q(a, b);
        let r = BigRational::one() - &p;
        add(
            format!("geometric {a}/{b} to {k_max}"),
            (0..=k_max).map(|k| (k, pow(&r, k) * &p)).collect(),
        );
    }
    for k in [1u64, 3, 10, 100] {
        add(
            format!("uniform 0..={k}"),
            (0..=k).map(|v| (v, q(1, 1))).collect(),
        );
    }
    for k in [2u64, 5, 17, 64] {
        add(
            format!("uniform 1..={k}"),
            (1..=k).map(|v| (v, q(1, 1))).collect(),
        );
    }
    for (a, b, pa) in [
        (0u64, 100u64, q(99, 100)),
        (1, 10, q(1, 2)),
        (0, 3, q(9, 10)),
        (2, 50, q(1, 3)),
    ] {
        add(
            format!("two-point {a},{b}"),
            vec![(a, pa.clone()), (b, BigRational::one() - pa)],
        );
    }
    for (a, b) in [(1, 2), (1, 1), (3, 1), (10, 1)] {
        let lambda = q(a, b);
        let mut term = BigRational::one();
        let mut w = Vec::new();
        for k in 0..=60u64 {
            if k > 0 {
                term = term * &lambda / BigInt::from(k);
            }
            w.push((k, term.clone()));
        }
        add(format!("poisson {a}/{b} to 60"), w);
    }
    for (pi, p) in [
        (q(1, 2), q(1, 2)),
        (q(9, 10), q(1, 3)),
        (q(99, 100), q(1, 10)),
        (q(1, 4), q(1, 4)),
    ] {
        let r = BigRational::one() - &p;
        let mut w: Vec<(u64, BigRational)> = (1..=40u64)
            .map(|k| (k, (BigRational::one() - &pi) * pow(&r, k - 1) * &p))
            .collect();
        let rest: BigRational =
            BigRational::one() - w.iter().map(|x| x.1.clone()).sum::<BigRational>();
        w.insert(0, (0, rest));
        add(format!("zero-inflated geometric {pi} {p}"), w);
    }
    for k_max in [50u64, 500] {
        add(
            format!("inverse-square to {k_max}"),
            (1..=k_max).map(|k| (k, q(1, (k * k) as i64))).collect(),
        );
    }
    out
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

fn pow(x: &BigRational, k: u64) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

#[derive(Clone, Copy)]
enum Count {
    H1 { eps: f64 },
    H2 { delta: f64 },
}

struct LawSpec {
    label: String,
    alpha: f64,
    count: Count,
    starts: [Vertex; 3],
}

const TOY_N: u64 = 16;

fn law_specs() -> Vec<LawSpec> {
    let v = Vertex::new;
    let eps = sim::DEFAULT_EPS;
    let delta = sim::DEFAULT_DELTA;
    let h1 = |alpha: f64, eps: f64, starts: [Vertex; 3]| (alpha, Count::H1 { eps }, starts);
    let h2 = |alpha: f64, delta: f64, starts: [Vertex; 3]| (alpha, Count::H2 { delta }, starts);
    let specs = [
        h1(1.0, eps, [Vertex::ORIGIN; 3]),
        h1(1.0, eps, [v(0, 0), v(2, 0), v(-2, 0)]),
        h1(1.0, eps, [v(16, 0), v(14, 0), v(12, 0)]),
        h1(1.0, eps, [v(9, 1); 3]),
        h1(0.5, 0.5, [Vertex::ORIGIN; 3]),
        h1(0.5, 0.5, [v(10, 0), v(8, 0), v(12, 0)]),
        h1(2.0, eps, [Vertex::ORIGIN; 3]),
        h2(1.0, delta, [v(9, 1); 3]),
        h2(0.5, delta, [v(9, 1); 3]),
        h2(1.0, 0.1, [v(12, 1); 3]),
    ];
    specs
        .into_iter()
        .map(|(alpha, count, starts)| {
            let (name, param) = match count {
                Count::H1 { eps } => ("H1", format!("eps={eps}")),
                Count::H2 { delta } => ("H2", format!("delta={delta}")),
            };
            let s: Vec<String> = starts.iter().map(Vertex::to_string).collect();
            LawSpec {
                label: format!(
                    "{name} law alpha={alpha} N={TOY_N} {param} from {}",
                    s.join(" ")
                ),
                alpha,
                count,
                starts,
            }
        })
        .collect()
}

fn build_law(spec: &LawSpec, cap: u128) -> Result<ToyDistribution> {
    let comb = Comb::log(spec.alpha)?;
    let problem = match spec.count {
        Count::H1 { eps } => CountingProblem::h1(
            &comb,
            TOY_N,
            eps,
            sim::DEFAULT_H,
            sim::DEFAULT_C2,
            &spec.starts,
        )?,
        Count::H2 { delta } => {
            CountingProblem::h2(&comb, TOY_N, delta, sim::DEFAULT_H, &spec.starts)?
        }
    };
    let law = problem.law(cap)?;
    let weights = law
        .iter()
        .enumerate()
        .filter_map(|(j, &p)| BigRational::from_float(p.max(0.0)).map(|r| (j as u64, r)))
        .collect();
    ToyDistribution::from_weights(spec.label.clone(), weights)
}

/// Forty synthetic laws followed by ten exact collision-count laws at `N = 16`.
pub fn toy_distributions(cap: u128) -> Result<Vec<ToyDistribution>> {
    let mut out = synthetic();
    for spec in law_specs() {
        out.push(build_law(&spec, cap)?);
    }
    Ok(out)
}

fn toy_by_label(label: &str, cap: u128) -> Result<ToyDistribution> {
    if let Some(d) = synthetic().into_iter().find(|d| d.label == label) {
        return Ok(d);
    }
    match law_specs().iter().find(|s| s.label == label) {
        Some(s) => build_law(s, cap),
        None => Err(Error::InvalidParameter(format!(
            "unknown toy distribution {label}"
        ))),
    }
}

struct PzSides {
    lhs: BigRational,
    rhs: BigRational,
}

fn pz_sides(d: &ToyDistribution, eta: &BigRational) -> PzSides {
    let mean = d.mean();
    let second = d.second_moment();
    let one_minus = BigRational::one() - eta;
    PzSides {
        lhs: d.tail(&(eta * &mean)),
        rhs: &one_minus * &one_minus * &mean * &mean / second,
    }
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn eta_rational(eta: f64) -> Result<BigRational> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0,1), got {eta}"
        )));
    }
    Ok(BigRational::from_float(eta).expect("finite"))
}

/// `P(X >= eta E X) >= (1 - eta)^2 (E X)^2 / E X^2`, decided in exact
/// arithmetic for every distribution.
pub fn check_paley_zygmund(dists: &[ToyDistribution], opts: &CheckOptions) -> Result<BoundReport> {
    let eta = eta_rational(opts.pz_eta)?;
    let mut rows = Vec::new();
    let mut violations = 0u64;
    for d in dists {
        if d.second_moment().is_zero() {
            return Err(Error::Domain(format!("{}: E[X^2] = 0", d.label)));
        }
        let s = pz_sides(d, &eta);
        if s.lhs < s.rhs {
            violations += 1;
        }
        let p = GridPoint {
            level: Some(opts.pz_eta),
            label: Some(d.label.clone()),
            ..Default::default()
        };
        rows.push(Row::new(1, p, to_f64(&s.lhs), to_f64(&s.rhs)));
    }
    let spec = BoundSpec {
        id: "PZI",
        alpha: None,
        grid: format!("{} toy distributions, eta = {}", dists.len(), opts.pz_eta),
        orientation: Orientation::Lower,
        stated: Some(1.0),
    };
    let mut report = BoundReport::assemble(spec, rows, opts);
    report
        .extras
        .insert("exact_points".into(), dists.len() as f64);
    report
        .extras
        .insert("exact_violations".into(), violations as f64);
    if violations > 0 {
        report.fail(format!("{violations} exact violations"));
    }
    Ok(report)
}

pub(crate) fn eval_pzi(p: &GridPoint, opts: &CheckOptions) -> Result<(f64, f64)> {
    let label = p
        .label
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks a label")))?;
    let d = toy_by_label(label, opts.work_cap)?;
    let s = pz_sides(&d, &eta_rational(p.level.unwrap_or(opts.pz_eta))?);
    Ok((to_f64(&s.lhs), to_f64(&s.rhs)))
}

/// Monte Carlo samples of `(H1, H2)` from `starts` at scale `N`.
fn mc_counts(
    comb: &Comb,
    big_n: u64,
    starts: &[Vertex],
    opts: &CheckOptions,
) -> Result<Vec<(u64, u64)>> {
    let mut config = SimConfig::new(comb.clone(), starts.to_vec(), big_n);
    config.h = opts.h;
    config.eps = opts.eps;
    config.delta = opts.delta;
    config.c2 = opts.c2;
    config.replicas = opts.mc_replicas;
    config.master_seed = opts.seed;
    config.max_recorded_collisions = 0;
    config.horizon = config.t1().max(config.t2());
    let mut out = Vec::with_capacity(opts.mc_replicas as usize);
    run_replicas(&config, opts.jobs, |r| {
        let c = r.counters.expect("three walkers");
        out.push((c.h1, c.h2));
        Ok(())
    })?;
    Ok(out)
}

/// `E[H1]`, `E[H1^2]` and whether they were estimated by simulation.
fn h1_moments(
    comb: &Comb,
    big_n: u64,
    starts: &[Vertex],
    opts: &CheckOptions,
) -> Result<(Moments, Option<f64>)> {
    let problem = CountingProblem::h1(comb, big_n, opts.eps, opts.h, opts.c2, starts)?;
    match problem.moments(opts.work_cap) {
        Ok(m) => Ok((m, None)),
        Err(Error::ResourceLimit { .. }) => {
            let s = mc_counts(comb, big_n, starts, opts)?;
            let xs: Vec<f64> = s.iter().map(|c| c.0 as f64).collect();
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            let mean = sim::Estimate::from_samples(&xs)?;
            let second = sim::Estimate::from_samples(&sq)?;
            Ok((
                Moments {
                    mean: mean.mean,
                    second: second.mean,
                },
                Some(mean.std_error),
            ))
        }
        Err(e) => Err(e),
    }
}

/// Law of `H2`, exact or empirical, and whether it is empirical.
fn h2_law(
    comb: &Comb,
    big_n: u64,
    starts: &[Vertex],
    opts: &CheckOptions,
) -> Result<(Vec<f64>, bool)> {
    let problem = CountingProblem::h2(comb, big_n, opts.delta, opts.h, starts)?;
    match problem.law(opts.work_cap) {
        Ok(l) => Ok((l, false)),
        Err(Error::ResourceLimit { .. }) => {
            let s = mc_counts(comb, big_n, starts, opts)?;
            let top = s.iter().map(|c| c.1).max().unwrap_or(0) as usize;
            let mut law = vec![0.0; top + 1];
            for c in &s {
                law[c.1 as usize] += 1.0;
            }
            law.iter_mut().for_each(|p| *p /= s.len() as f64);
            Ok((law, true))
        }
        Err(e) => Err(e),
    }
}

fn law_mean(law: &[f64]) -> f64 {
    law.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
}

fn law_tail(law: &[f64], level: f64) -> f64 {
    law.iter()
        .enumerate()
        .filter(|(j, _)| *j as f64 >= level)
        .map(|(_, p)| p)
        .sum()
}

fn exp_h_rhs(comb: &Comb, big_n: u64) -> f64 {
    1.0 / comb.spec().log_power(big_n as f64)
}

fn secmom_factor(comb: &Comb, big_n: u64) -> f64 {
    let l = comb.spec().log_of(big_n as f64);
    comb.spec().log_of(l) + l.powf(1.0 - comb.alpha())
}

fn b_start(comb: &Comb, big_n: u64, opts: &CheckOptions) -> Result<[Vertex; 3]> {
    match h1_target(comb, big_n, opts.eps).first() {
        Some(&x) => Ok([x; 3]),
        None => Err(Error::EmptyTargetRegion(format!(
            "no H1 target site at N={big_n}"
        ))),
    }
}

/// Shapes of the first and second moments of `H1` and of the lower tail of
/// `H2`, with walkers started together at the origin (`H1`) or on the first
/// `H1` target site (`H2`). Exact where the work cap allows, simulated
/// otherwise.
pub fn check_moment_shape(
    comb: &Comb,
    n_scales: &[u64],
    opts: &CheckOptions,
) -> Result<Vec<BoundReport>> {
    let mut scales: Vec<u64> = n_scales.to_vec();
    scales.sort_unstable();
    scales.dedup();
    let alpha = Some(comb.alpha());
    let starts = [Vertex::ORIGIN; 3];
    let mut exp_rows = Vec::new();
    let mut sec_rows = Vec::new();
    let mut notes = Vec::new();
    let mut h1_mc = false;
    let mut h2_mc = false;
    let mut se = Vec::new();
    let mut h2 = Vec::new();
    for &big_n in &scales {
        let base = GridPoint {
            alpha,
            n_scale: Some(big_n),
            ..Default::default()
        };
        match h1_moments(comb, big_n, &starts, opts) {
            Ok((m, mc)) => {
                if let Some(s) = mc {
                    h1_mc = true;
                    se.push((big_n, s));
                }
                exp_rows.push(Row::new(
                    big_n,
                    base.clone(),
                    m.mean,
                    exp_h_rhs(comb, big_n),
                ));
                sec_rows.push(Row::new(
                    big_n,
                    base.clone(),
                    m.second,
                    m.mean * secmom_factor(comb, big_n),
                ));
            }
            Err(Error::EmptyTargetRegion(msg)) => notes.push(format!("N={big_n}: {msg}")),
            Err(e) => return Err(e),
        }
        let law = b_start(comb, big_n, opts).and_then(|s| h2_law(comb, big_n, &s, opts));
        match law {
            Ok((law, mc)) => {
                h2_mc |= mc;
                h2.push((big_n, law));
            }
            Err(Error::EmptyTargetRegion(msg)) => {
                notes.push(format!("N={big_n}: H2 skipped, {msg}"))
            }
            Err(e) => return Err(e),
        }
    }
    let c_bar = h2
        .iter()
        .map(|(n, law)| law_mean(law) / growth_denominator(comb.spec(), *n))
        .fold(f64::INFINITY, f64::min);
    let b_rows = h2
        .iter()
        .map(|(n, law)| {
            let level = c_bar / 2.0 * growth_denominator(comb.spec(), *n);
            let p = GridPoint {
                alpha,
                n_scale: Some(*n),
                level: Some(level),
                ..Default::default()
            };
            Row::new(*n, p, law_tail(law, level), 1.0)
        })
        .collect();

    let grid = format!(
        "N in {scales:?}, eps={}, delta={}, h={}",
        opts.eps, opts.delta, opts.h
    );
    let spec = |id, orientation| BoundSpec {
        id,
        alpha,
        grid: grid.clone(),
        orientation,
        stated: None,
    };
    let mut reports = vec![
        BoundReport::assemble(spec("expH-shape", Orientation::Lower), exp_rows, opts),
        BoundReport::assemble(spec("secmomH-shape", Orientation::Upper), sec_rows, opts),
        BoundReport::assemble(spec("B-shape", Orientation::Lower), b_rows, opts),
    ];
    for r in reports.iter_mut().take(2) {
        r.mc_fallback = h1_mc;
        for (n, s) in &se {
            r.extras.insert(format!("mc_std_error_N{n}"), *s);
        }
    }
    reports[2].mc_fallback = h2_mc;
    if c_bar.is_finite() {
        reports[2].extras.insert("c_bar".into(), c_bar);
    }
    if comb.alpha() > 1.0 {
        reports[2].note("the H2 lower bounds are stated for alpha <= 1 only");
    }
    for r in reports.iter_mut() {
        if r.mc_fallback {
            r.note(format!(
                "exact computation over the work cap; {} simulated replicas",
                opts.mc_replicas
            ));
        }
        for n in &notes {
            r.note(n.clone());
        }
    }
    Ok(reports)
}

pub(crate) fn eval_shape(
    id: &str,
    comb: &Comb,
    p: &GridPoint,
    opts: &CheckOptions,
) -> Result<(f64, f64)> {
    let big_n = p
        .n_scale
        .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks N")))?;
    let starts = [Vertex::ORIGIN; 3];
    match id {
        "expH-shape" => Ok((
            h1_moments(comb, big_n, &starts, opts)?.0.mean,
            exp_h_rhs(comb, big_n),
        )),
        "secmomH-shape" => {
            let m = h1_moments(comb, big_n, &starts, opts)?.0;
            Ok((m.second, m.mean * secmom_factor(comb, big_n)))
        }
        "B-shape" => {
            let level = p
                .level
                .ok_or_else(|| Error::InvalidParameter(format!("grid point {p} lacks a level")))?;
            let (law, _) = h2_law(comb, big_n, &b_start(comb, big_n, opts)?, opts)?;
            Ok((law_tail(&law, level), 1.0))
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown moment bound {id}"
        ))),
    }
}
