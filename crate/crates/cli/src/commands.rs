use std::io::Write;
use std::path::PathBuf;

use combwalk::estimates::{run_bounds, BoundsConfig, BOUND_IDS};
use combwalk::kernel::moments::{CountingProblem, DEFAULT_WORK_CAP};
use combwalk::kernel::{self as kern, DistVector, SixAdic};
use combwalk::resistance::{
    expected_exit_time_direct, occupation_density, pair_resistance, resistance_to_boundary,
};
use combwalk::sim::{
    default_horizon, exit_time_stats, growth_statistic, quantile, run_replicas, summarize,
    RunRecord, SimConfig, DEFAULT_C2, DEFAULT_DELTA, DEFAULT_EPS, DEFAULT_H,
};
use combwalk::{Region, Vertex};
use serde::Serialize;
use serde_json::json;

use crate::output::{opt, out_path, write_json, CsvOut};
use crate::settings::{usage, CliError, CliResult, Settings};

pub struct Context {
    pub jobs: usize,
    pub out: PathBuf,
}

fn comb_keys() -> Vec<(&'static str, String)> {
    vec![
        ("family", "log".into()),
        ("alpha", "1".into()),
        ("heights_file", "none".into()),
    ]
}

fn sim_keys() -> Vec<(&'static str, String)> {
    vec![
        ("h", DEFAULT_H.to_string()),
        ("eps", DEFAULT_EPS.to_string()),
        ("delta", DEFAULT_DELTA.to_string()),
        ("c2", DEFAULT_C2.to_string()),
    ]
}

const THREE_AT_ORIGIN: &str = "(0,0);(0,0);(0,0)";

/// Every key a command accepts, with its default.
pub fn defaults(command: &'static str) -> Settings {
    let mut keys = Vec::new();
    match command {
        "graph" => {
            keys.extend(comb_keys());
            keys.extend([
                ("n_min", "-20".into()),
                ("n_max", "20".into()),
                ("center", "(0,0)".into()),
                ("radius", "none".into()),
            ]);
        }
        "kernel" => {
            keys.extend(comb_keys());
            keys.extend([
                ("x", "(0,0)".into()),
                ("y", "(0,0)".into()),
                ("n", "10".into()),
                ("kill_strip", "none".into()),
                ("exact", "false".into()),
            ]);
        }
        "resist" => {
            keys.extend(comb_keys());
            keys.extend([
                ("u", "(0,0)".into()),
                ("v", "(4,1)".into()),
                ("radius", "none".into()),
            ]);
        }
        "simulate" => {
            keys.extend(comb_keys());
            keys.extend([
                ("seed", "0".into()),
                ("starts", THREE_AT_ORIGIN.into()),
                ("N", "16".into()),
                ("horizon", "auto".into()),
                ("replicas", "1000".into()),
            ]);
            keys.extend(sim_keys());
            keys.extend([
                ("checkpoints", String::new()),
                ("probes", String::new()),
                ("max_collisions", "64".into()),
            ]);
        }
        "phase" => {
            keys.extend([("family", "log".into()), ("alpha", "0.5,2".into())]);
            keys.extend([
                ("seed", "0".into()),
                ("walkers", "3".into()),
                ("start", "(0,0)".into()),
                ("horizon", "100000".into()),
                ("replicas", "200".into()),
            ]);
        }
        "growth" => {
            keys.extend(comb_keys());
            keys.extend([
                ("seed", "0".into()),
                ("starts", THREE_AT_ORIGIN.into()),
                ("grid", "16,64,256,1024,4096,16384,65536".into()),
                ("replicas", "100".into()),
                ("h", DEFAULT_H.to_string()),
                ("exit_replicas", "0".into()),
                ("exit_grid", "8,16,32".into()),
            ]);
        }
        "moments" => {
            keys.extend(comb_keys());
            keys.extend([
                ("count", "h1".into()),
                ("N", "16".into()),
                ("starts", THREE_AT_ORIGIN.into()),
            ]);
            keys.extend(sim_keys());
            keys.extend([
                ("t_hi", "auto".into()),
                ("law", "false".into()),
                ("work_cap", DEFAULT_WORK_CAP.to_string()),
            ]);
        }
        "bounds" => {
            keys.push(("bound", "all".into()));
            for (k, v) in BoundsConfig::default().to_pairs() {
                keys.push((leak(k), v));
            }
            keys.push(("r", "auto".into()));
        }
        _ => unreachable!("unknown command {command}"),
    }
    Settings::new(command, keys)
}

fn leak(s: String) -> &'static str {
    Box::leak(s.into_boxed_str())
}

fn print_json(v: &serde_json::Value) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn graph(s: &Settings, ctx: &Context) -> CliResult<()> {
    let comb = s.comb()?;
    let (lo, hi): (i64, i64) = (s.get("n_min")?, s.get("n_max")?);
    if lo > hi {
        return Err(usage("n_min exceeds n_max"));
    }
    let header = s.header();
    let mut csv = CsvOut::create(
        &out_path(&ctx.out, "graph.csv")?,
        &header,
        &["n", "height", "backbone_degree"],
    )?;
    for n in lo..=hi {
        let deg = comb.degree(Vertex::backbone(n))?;
        csv.row([
            n.to_string(),
            comb.tooth_height(n).to_string(),
            deg.to_string(),
        ])?;
    }
    csv.finish()?;
    if let Some(r) = s.opt::<u64>("radius")? {
        let c = s.vertex("center")?;
        let witness = comb.volume_witness_lower_bound(c, r).ok();
        print_json(
            &json!({ "center": c.to_string(), "radius": r, "volume": comb.volume(c, r)?, "volume_witness_lower_bound": witness }),
        )?;
    }
    Ok(())
}

pub fn kernel_cmd_value(s: &Settings) -> CliResult<serde_json::Value> {
    let comb = s.comb()?;
    let (x, y, n) = (s.vertex("x")?, s.vertex("y")?, s.get::<usize>("n")?);
    let region = s.opt::<u64>("kill_strip")?.map(Region::strip);
    let k = kern::kernel(&comb, x, y, n, region.as_ref())?;
    let mut v = serde_json::to_value(&k)?;
    if s.bool("exact")? {
        comb.check(y)?;
        let d = DistVector::<SixAdic>::point(&comb, x, region.clone())?.advance(n);
        let exact = d.exact_prob(y) / num_bigint::BigInt::from(comb.degree(y)?);
        let as_f64: f64 = num_traits::ToPrimitive::to_f64(&exact).unwrap_or(f64::NAN);
        let agree = (as_f64 - k.value).abs() <= 1e-12 * as_f64.abs().max(1e-300);
        v["exact"] = json!(exact.to_string());
        v["exact_agrees"] = json!(agree);
    }
    Ok(v)
}

pub fn kernel(s: &Settings, ctx: &Context) -> CliResult<()> {
    let v = kernel_cmd_value(s)?;
    write_json(&out_path(&ctx.out, "kernel.json")?, &s.header(), &v)?;
    print_json(&v)?;
    if v.get("exact_agrees") == Some(&json!(false)) {
        return Err(CliError::Failure(
            "floating-point kernel disagrees with the exact value".into(),
        ));
    }
    Ok(())
}

pub fn resist(s: &Settings, ctx: &Context) -> CliResult<()> {
    let comb = s.comb()?;
    let (u, v) = (s.vertex("u")?, s.vertex("v")?);
    let r = pair_resistance(&comb, u, v)?;
    let d = comb.distance(u, v)?;
    let mut out = json!({
        "u": u.to_string(),
        "v": v.to_string(),
        "pair_resistance": r,
        "distance": d,
        "agrees": (r - d as f64).abs() <= 1e-9,
    });
    let mut ok = (r - d as f64).abs() <= 1e-9;
    if let Some(radius) = s.opt::<u64>("radius")? {
        let ball = comb.ball(u, radius)?.members;
        let tau = expected_exit_time_direct(&comb, u, &ball)?;
        let profile = occupation_density(&comb, u, &ball)?;
        let via_density: f64 = profile
            .g
            .iter()
            .zip(&profile.degrees)
            .map(|(g, &d)| g * f64::from(d))
            .sum();
        let agree = (tau - via_density).abs() <= 1e-9 * tau.max(1.0);
        ok &= agree;
        out["radius"] = json!(radius);
        out["ball_volume"] = json!(ball.len());
        out["resistance_to_boundary"] = json!(resistance_to_boundary(&comb, u, &ball)?);
        out["expected_exit_time"] = json!(tau);
        out["exit_time_from_density"] = json!(via_density);
        out["exit_time_agrees"] = json!(agree);
    }
    write_json(&out_path(&ctx.out, "resist.json")?, &s.header(), &out)?;
    print_json(&out)?;
    if !ok {
        return Err(CliError::Failure("resistance oracle mismatch".into()));
    }
    Ok(())
}

fn sim_config(s: &Settings) -> CliResult<SimConfig> {
    let comb = s.comb()?;
    let starts = s.vertices("starts")?;
    let n_scale: u64 = s.get("N")?;
    let mut c = SimConfig::new(comb, starts, n_scale);
    c.h = s.get("h")?;
    c.eps = s.get("eps")?;
    c.delta = s.get("delta")?;
    c.c2 = s.get("c2")?;
    c.master_seed = s.get("seed")?;
    Ok(c)
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

pub fn simulate(s: &Settings, ctx: &Context) -> CliResult<()> {
    let mut c = sim_config(s)?;
    c.replicas = s.get("replicas")?;
    c.horizon = s
        .opt("horizon")?
        .unwrap_or_else(|| default_horizon(&c.comb, c.n_scale));
    c.checkpoints = s.list("checkpoints")?;
    c.probes = s.list("probes")?;
    c.max_recorded_collisions = s.get("max_collisions")?;
    let warnings = c.validate()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let header = s.header();
    let mut csv = CsvOut::create(
        &out_path(&ctx.out, "records.csv")?,
        &header,
        &[
            "replica_id",
            "seed",
            "sigma",
            "theta",
            "collisions",
            "h1",
            "h2",
            "hn",
            "last_collision",
            "checkpoint_counts",
            "probe_meet",
            "collision_times",
        ],
    )?;
    let mut records: Vec<RunRecord> = Vec::with_capacity(c.replicas as usize);
    let mut io_error = None;
    run_replicas(&c, ctx.jobs, |r| {
        let k = r.counters.as_ref();
        let row = [
            r.replica_id.to_string(),
            r.seed.to_string(),
            opt(r.sigma),
            opt(r.theta),
            opt(k.map(|k| k.collisions)),
            opt(k.map(|k| k.h1)),
            opt(k.map(|k| k.h2)),
            opt(k.map(|k| k.hn)),
            opt(r.last_collision),
            join(&r.checkpoint_counts),
            join(
                &r.probe_meet
                    .iter()
                    .map(|&b| u8::from(b))
                    .collect::<Vec<_>>(),
            ),
            join(&r.collision_times),
        ];
        if let Err(e) = csv.row(row) {
            io_error = Some(e);
            return Err(combwalk::Error::InvalidParameter("output failed".into()));
        }
        records.push(r);
        Ok(())
    })
    .map_err(|e| io_error.take().unwrap_or_else(|| e.into()))?;
    csv.finish()?;
    let summary = if records.len() >= 2 {
        Some(summarize(&records)?)
    } else {
        None
    };
    let body = json!({ "config": c.summary(), "warnings": warnings, "summary": summary });
    write_json(&out_path(&ctx.out, "summary.json")?, &header, &body)?;
    Ok(())
}

#[derive(Serialize)]
struct PhaseSummary {
    alpha: f64,
    horizon: u64,
    replicas: u64,
    median_collisions_t: f64,
    median_collisions_2t: f64,
    median_increase: f64,
    median_last_collision_t: f64,
    median_last_collision_2t: f64,
    /// Median last-collision time unchanged by doubling the horizon.
    last_collision_stable: bool,
    counts_increase: bool,
    /// `last_collision_stable` for alpha > 1, `counts_increase` otherwise.
    consistent_with_phase: bool,
}

pub fn phase(s: &Settings, ctx: &Context) -> CliResult<()> {
    let alphas: Vec<f64> = s.list("alpha")?;
    if alphas.is_empty() {
        return Err(usage("alpha list is empty"));
    }
    let t: u64 = s.get("horizon")?;
    let walkers: usize = s.get("walkers")?;
    if t == 0 || walkers < 2 {
        return Err(usage("phase needs horizon >= 1 and at least 2 walkers"));
    }
    let start = s.vertex("start")?;
    let header = s.header();
    let mut csv = CsvOut::create(
        &out_path(&ctx.out, "phase.csv")?,
        &header,
        &[
            "alpha",
            "replica",
            "horizon",
            "collisions",
            "last_collision",
        ],
    )?;
    let mut summaries = Vec::new();
    for &alpha in &alphas {
        let comb = crate::settings::comb_from(s.raw("family"), &alpha.to_string(), "")?;
        let mut c = SimConfig::new(comb, vec![start; walkers], 16);
        c.master_seed = s.get("seed")?;
        c.replicas = s.get("replicas")?;
        c.horizon = 2 * t;
        c.checkpoints = vec![t, 2 * t];
        c.max_recorded_collisions = 0;
        c.validate()?;
        let mut counts = [Vec::new(), Vec::new()];
        let mut lasts = [Vec::new(), Vec::new()];
        let mut rows = Vec::new();
        run_replicas(&c, ctx.jobs, |r| {
            for i in 0..2 {
                counts[i].push(r.checkpoint_counts[i] as f64);
                lasts[i].push(r.checkpoint_last[i].unwrap_or(0) as f64);
                rows.push([
                    alpha.to_string(),
                    r.replica_id.to_string(),
                    c.checkpoints[i].to_string(),
                    r.checkpoint_counts[i].to_string(),
                    opt(r.checkpoint_last[i]),
                ]);
            }
            Ok(())
        })?;
        for row in rows {
            csv.row(row)?;
        }
        let m = |xs: &Vec<f64>| quantile(xs, 0.5);
        let (c1, c2) = (m(&counts[0]), m(&counts[1]));
        let (l1, l2) = (m(&lasts[0]), m(&lasts[1]));
        let stable = l1 == l2;
        let increase = c2 > c1;
        summaries.push(PhaseSummary {
            alpha,
            horizon: t,
            replicas: c.replicas,
            median_collisions_t: c1,
            median_collisions_2t: c2,
            median_increase: c2 - c1,
            median_last_collision_t: l1,
            median_last_collision_2t: l2,
            last_collision_stable: stable,
            counts_increase: increase,
            consistent_with_phase: if alpha > 1.0 { stable } else { increase },
        });
    }
    csv.finish()?;
    for p in &summaries {
        println!(
            "alpha={} median collisions {} -> {} (last collision {} -> {})",
            p.alpha,
            p.median_collisions_t,
            p.median_collisions_2t,
            p.median_last_collision_t,
            p.median_last_collision_2t
        );
    }
    write_json(
        &out_path(&ctx.out, "phase_summary.json")?,
        &header,
        &json!({ "alphas": summaries }),
    )?;
    Ok(())
}

pub fn growth(s: &Settings, ctx: &Context) -> CliResult<()> {
    let mut c = sim_config_growth(s)?;
    let grid: Vec<u64> = s.list("grid")?;
    let report = growth_statistic(&c, &grid, ctx.jobs)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let header = s.header();
    let mut csv = CsvOut::create(
        &out_path(&ctx.out, "growth.csv")?,
        &header,
        &["alpha", "replica", "N", "C_N", "statistic"],
    )?;
    for r in &report.rows {
        csv.row([
            report.alpha.to_string(),
            r.replica.to_string(),
            r.n.to_string(),
            r.c_n.to_string(),
            r.statistic.to_string(),
        ])?;
    }
    csv.finish()?;
    let exit_replicas: u64 = s.get("exit_replicas")?;
    let exits = if exit_replicas > 0 {
        c.replicas = exit_replicas;
        Some(exit_time_stats(
            &c,
            &s.list::<u64>("exit_grid")?,
            ctx.jobs,
            None,
        )?)
    } else {
        None
    };
    let body = json!({
        "alpha": report.alpha,
        "grid": report.grid,
        "dropped": report.dropped,
        "warnings": report.warnings,
        "quantiles": report.quantiles,
        "exit_times": exits,
    });
    write_json(&out_path(&ctx.out, "growth_summary.json")?, &header, &body)?;
    Ok(())
}

fn sim_config_growth(s: &Settings) -> CliResult<SimConfig> {
    let mut c = SimConfig::new(s.comb()?, s.vertices("starts")?, 16);
    c.h = s.get("h")?;
    c.master_seed = s.get("seed")?;
    c.replicas = s.get("replicas")?;
    c.max_recorded_collisions = 0;
    Ok(c)
}

pub fn moments(s: &Settings, ctx: &Context) -> CliResult<()> {
    let comb = s.comb()?;
    let starts = s.vertices("starts")?;
    let n: u64 = s.get("N")?;
    let (h, eps, delta, c2): (u64, f64, f64, f64) =
        (s.get("h")?, s.get("eps")?, s.get("delta")?, s.get("c2")?);
    let cap: u128 = s.get("work_cap")?;
    let count = s.raw("count").to_string();
    let mut problem = match count.as_str() {
        "h1" => CountingProblem::h1(&comb, n, eps, h, c2, &starts)?,
        "h2" => CountingProblem::h2(&comb, n, delta, h, &starts)?,
        "all" => CountingProblem::h_all(&comb, n, h, default_horizon(&comb, n) as usize, &starts)?,
        other => return Err(usage(format!("count must be h1, h2 or all, got {other:?}"))),
    };
    if let Some(t) = s.opt::<usize>("t_hi")? {
        let t_lo = problem.t_lo;
        problem = problem.with_window(t_lo, t);
    }
    let m = problem.moments(cap)?;
    let law = if s.bool("law")? {
        Some(problem.law(cap)?)
    } else {
        None
    };
    let body = json!({
        "count": count,
        "N": n,
        "starts": starts.iter().map(Vertex::to_string).collect::<Vec<_>>(),
        "target_size": problem.target.len(),
        "t_lo": problem.t_lo,
        "t_hi": problem.t_hi,
        "mean": m.mean,
        "second_moment": m.second,
        "variance": m.variance(),
        "law": law,
    });
    write_json(&out_path(&ctx.out, "moments.json")?, &s.header(), &body)?;
    print_json(&body)?;
    Ok(())
}

pub fn bounds(s: &Settings, ctx: &Context) -> CliResult<()> {
    let mut config = BoundsConfig::default();
    let pairs: Vec<(String, String)> = s
        .header()
        .into_iter()
        .skip(2)
        .filter(|(k, v)| k != "bound" && !(k == "r" && v == "auto"))
        .collect();
    config.apply(&pairs)?;
    config.options.jobs = ctx.jobs;
    let selection: Vec<String> = s.list("bound")?;
    for id in &selection {
        if id != "all" && !BOUND_IDS.contains(&id.as_str()) && !is_report_id(id) {
            return Err(usage(format!("unknown bound id {id}")));
        }
    }
    let reports = run_bounds(&config, &selection)?;
    let header = s.header();
    let all_pass = reports.iter().all(|r| r.pass);
    write_json(
        &out_path(&ctx.out, "bounds_report.json")?,
        &header,
        &json!({ "pass": all_pass, "reports": reports }),
    )?;
    let mut csv = CsvOut::create(
        &out_path(&ctx.out, "bounds.csv")?,
        &header,
        &["bound_id", "grid_point", "lhs", "rhs", "ratio"],
    )?;
    for r in &reports {
        for row in &r.rows {
            csv.row([
                r.bound_id.clone(),
                row.point.to_string(),
                row.lhs.to_string(),
                row.rhs.to_string(),
                row.ratio.to_string(),
            ])?;
        }
    }
    csv.finish()?;
    for r in &reports {
        let alpha = r.alpha.map_or(String::new(), |a| format!(" alpha={a}"));
        let slope = r
            .trend_slope
            .map_or(String::new(), |t| format!(" slope={t:.4}"));
        let status = if r.empty {
            "EMPTY"
        } else if r.pass {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "{status} {}{alpha} worst_ratio={} fitted_constant={}{slope}",
            r.bound_id, r.worst_ratio, r.fitted_constant
        );
        if !r.pass {
            for n in &r.notes {
                println!("    {n}");
            }
        }
    }
    if !all_pass {
        let failed = reports.iter().filter(|r| !r.pass).count();
        return Err(CliError::Failure(format!(
            "{failed} bound report(s) failed"
        )));
    }
    Ok(())
}

fn is_report_id(id: &str) -> bool {
    matches!(
        id,
        "hku2-small-n"
            | "hku2-large-n"
            | "etu"
            | "exit-lower"
            | "exitprob"
            | "expH-shape"
            | "secmomH-shape"
            | "B-shape"
    )
}
