use std::collections::BTreeSet;
use std::fmt::Display;
use std::str::FromStr;

use super::{
    check_exit_time_bounds, check_hk1d, check_hkbound, check_hku1, check_hku2, check_lemma21,
    check_lower_bound, check_moment_shape, check_paley_zygmund, check_quadruple, toy_distributions,
    BoundReport, BoundSpec, CheckOptions, Orientation,
};
use crate::error::{Error, Result};
use crate::graph::{Comb, CombSpec};

/// Check groups in report order. A group may produce several reports.
pub const BOUND_IDS: [&str; 10] = [
    "hku1",
    "hku2",
    "lower-corollary",
    "exit",
    "hk1d",
    "PZI",
    "lemma21",
    "quadruple",
    "hkbound",
    "moment-shape",
];

fn group_of(report_id: &str) -> Option<&'static str> {
    Some(match report_id {
        "hku2-small-n" | "hku2-large-n" => "hku2",
        "etu" | "exit-lower" | "exitprob" => "exit",
        "expH-shape" | "secmomH-shape" | "B-shape" => "moment-shape",
        other => return BOUND_IDS.iter().copied().find(|g| *g == other),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Log,
    Poly,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(FamilyKind::Log),
            "poly" => Ok(FamilyKind::Poly),
            _ => Err(Error::InvalidParameter(format!(
                "family must be log or poly, got {s:?}"
            ))),
        }
    }
}

impl Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyKind::Log => "log",
            FamilyKind::Poly => "poly",
        })
    }
}

impl FamilyKind {
    pub fn comb(self, alpha: f64) -> Result<Comb> {
        Ok(Comb::new(match self {
            FamilyKind::Log => CombSpec::log(alpha)?,
            FamilyKind::Poly => CombSpec::poly(alpha)?,
        }))
    }
}

/// Grids and options of a bound suite run.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsConfig {
    pub family: FamilyKind,
    pub alphas: Vec<f64>,
    /// Scales `N`.
    pub n_scales: Vec<u64>,
    /// Times for the uniform on-diagonal bound.
    pub times: Vec<u64>,
    /// Interval lengths for the one-dimensional bound.
    pub lengths: Vec<u64>,
    /// Exit-time radii; powers of two up to `N` when unset.
    pub radii: Option<Vec<u64>>,
    pub lemma21_n_max: u64,
    pub quadruple_n_max: u64,
    pub quadruple_fit_max: u64,
    pub hkbound_radius: u64,
    pub hkbound_n_max: u64,
    pub hkbound_r_max: u64,
    pub hkbound_exact_points: usize,
    pub options: CheckOptions,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            family: FamilyKind::Log,
            alphas: vec![0.5, 1.0, 1.5, 2.0],
            n_scales: vec![16, 32, 64, 128],
            times: vec![16, 32, 64, 128],
            lengths: vec![32, 64, 128, 256],
            radii: None,
            lemma21_n_max: 60,
            quadruple_n_max: 2000,
            quadruple_fit_max: 1000,
            hkbound_radius: 20,
            hkbound_n_max: 60,
            hkbound_r_max: 30,
            hkbound_exact_points: 1000,
            options: CheckOptions::default(),
        }
    }
}

/// Parse flat `key = value` lines. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("line {}: expected key = value", i + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "line {}: empty key",
                i + 1
            )));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::InvalidParameter(format!(
                "line {}: duplicate key {k}",
                i + 1
            )));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(|s| parse(key, s.trim()))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::InvalidParameter(format!("{key}: empty list")));
    }
    Ok(items)
}

fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl BoundsConfig {
    /// Apply `key = value` overrides; unknown keys are an error.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs {
            let o = &mut self.options;
            let k = k.as_str();
            match k {
                "family" => self.family = v.parse()?,
                "alpha" => self.alphas = parse_list(k, v)?,
                "N" => self.n_scales = parse_list(k, v)?,
                "n" => self.times = parse_list(k, v)?,
                "L" => self.lengths = parse_list(k, v)?,
                "r" => self.radii = Some(parse_list(k, v)?),
                "h" => o.h = parse(k, v)?,
                "eps" => o.eps = parse(k, v)?,
                "delta" => o.delta = parse(k, v)?,
                "c2" => o.c2 = parse(k, v)?,
                "window_c1" => o.window_c1 = parse(k, v)?,
                "window_c2" => o.window_c2 = parse(k, v)?,
                "hk1d_eps" => o.hk1d_eps = parse(k, v)?,
                "hk1d_c1" => o.hk1d_c1 = parse(k, v)?,
                "hk1d_c2" => o.hk1d_c2 = parse(k, v)?,
                "eta" => o.pz_eta = parse(k, v)?,
                "trend_max" => o.trend_max = parse(k, v)?,
                "trend_min_scale" => o.trend_min_scale = parse(k, v)?,
                "stability" => o.stability_factor = parse(k, v)?,
                "work_cap" => o.work_cap = parse(k, v)?,
                "mc_replicas" => o.mc_replicas = parse(k, v)?,
                "seed" => o.seed = parse(k, v)?,
                "max_columns" => o.max_columns = parse(k, v)?,
                "lemma21_n_max" => self.lemma21_n_max = parse(k, v)?,
                "quadruple_n_max" => self.quadruple_n_max = parse(k, v)?,
                "quadruple_fit_max" => self.quadruple_fit_max = parse(k, v)?,
                "hkbound_radius" => self.hkbound_radius = parse(k, v)?,
                "hkbound_n_max" => self.hkbound_n_max = parse(k, v)?,
                "hkbound_r_max" => self.hkbound_r_max = parse(k, v)?,
                "hkbound_exact_points" => self.hkbound_exact_points = parse(k, v)?,
                _ => return Err(Error::InvalidParameter(format!("unknown key {k}"))),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidParameter(
                "alpha values must be positive".into(),
            ));
        }
        if self.options.h < 2 {
            return Err(Error::InvalidParameter("h must be at least 2".into()));
        }
        if self.options.max_columns == 0 {
            return Err(Error::InvalidParameter(
                "max_columns must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Every setting as `key = value` pairs; feeding them back to
    /// [`Self::apply`] reproduces the configuration.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let o = &self.options;
        let mut out = vec![
            ("family", self.family.to_string()),
            ("alpha", join(&self.alphas)),
            ("N", join(&self.n_scales)),
            ("n", join(&self.times)),
            ("L", join(&self.lengths)),
        ];
        if let Some(r) = &self.radii {
            out.push(("r", join(r)));
        }
        out.extend([
            ("h", o.h.to_string()),
            ("eps", o.eps.to_string()),
            ("delta", o.delta.to_string()),
            ("c2", o.c2.to_string()),
            ("window_c1", o.window_c1.to_string()),
            ("window_c2", o.window_c2.to_string()),
            ("hk1d_eps", o.hk1d_eps.to_string()),
            ("hk1d_c1", o.hk1d_c1.to_string()),
            ("hk1d_c2", o.hk1d_c2.to_string()),
            ("eta", o.pz_eta.to_string()),
            ("trend_max", o.trend_max.to_string()),
            ("trend_min_scale", o.trend_min_scale.to_string()),
            ("stability", o.stability_factor.to_string()),
            ("work_cap", o.work_cap.to_string()),
            ("mc_replicas", o.mc_replicas.to_string()),
            ("seed", o.seed.to_string()),
            ("max_columns", o.max_columns.to_string()),
            ("lemma21_n_max", self.lemma21_n_max.to_string()),
            ("quadruple_n_max", self.quadruple_n_max.to_string()),
            ("quadruple_fit_max", self.quadruple_fit_max.to_string()),
            ("hkbound_radius", self.hkbound_radius.to_string()),
            ("hkbound_n_max", self.hkbound_n_max.to_string()),
            ("hkbound_r_max", self.hkbound_r_max.to_string()),
            (
                "hkbound_exact_points",
                self.hkbound_exact_points.to_string(),
            ),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// A report standing in for a check that exceeded the work cap everywhere.
fn skipped(id: &'static str, alpha: f64, err: Error, opts: &CheckOptions) -> BoundReport {
    let spec = BoundSpec {
        id,
        alpha: Some(alpha),
        grid: String::new(),
        orientation: Orientation::Lower,
        stated: None,
    };
    let mut r = BoundReport::assemble(spec, Vec::new(), opts);
    r.note(format!("skipped: {err}"));
    r
}

/// Run the selected checks. `selection` holds group ids from [`BOUND_IDS`],
/// individual report ids, or `all`. Reports come in group order, then by
/// alpha.
pub fn run_bounds(config: &BoundsConfig, selection: &[String]) -> Result<Vec<BoundReport>> {
    config.validate()?;
    let mut groups = BTreeSet::new();
    let mut only: BTreeSet<&str> = BTreeSet::new();
    let mut whole: BTreeSet<&str> = BTreeSet::new();
    for s in selection {
        if s == "all" {
            groups.extend(BOUND_IDS);
            whole.extend(BOUND_IDS);
            continue;
        }
        let g =
            group_of(s).ok_or_else(|| Error::InvalidParameter(format!("unknown bound id {s}")))?;
        groups.insert(g);
        if g == s {
            whole.insert(g);
        } else {
            only.insert(s.as_str());
        }
    }
    let opts = &config.options;
    let mut out = Vec::new();
    for g in BOUND_IDS.iter().copied().filter(|g| groups.contains(g)) {
        let mut produced = Vec::new();
        match g {
            "hk1d" => produced.push(check_hk1d(&config.lengths, opts)?),
            "PZI" => produced.push(check_paley_zygmund(
                &toy_distributions(opts.work_cap)?,
                opts,
            )?),
            _ => {
                for &alpha in &config.alphas {
                    let comb = config.family.comb(alpha)?;
                    match g {
                        "hku1" => produced.push(check_hku1(&comb, &config.times, opts)?),
                        "hku2" => produced.extend(check_hku2(&comb, &config.n_scales, opts)?),
                        "lower-corollary" => match check_lower_bound(&comb, &config.n_scales, opts)
                        {
                            Ok(r) => produced.push(r),
                            Err(e @ Error::ResourceLimit { .. }) => {
                                produced.push(skipped(g_static(g), alpha, e, opts))
                            }
                            Err(e) => return Err(e),
                        },
                        "exit" => produced.extend(check_exit_time_bounds(
                            &comb,
                            &config.n_scales,
                            config.radii.as_deref(),
                            opts,
                        )?),
                        "lemma21" => {
                            produced.push(check_lemma21(&comb, config.lemma21_n_max, opts)?)
                        }
                        "quadruple" => produced.push(check_quadruple(
                            &comb,
                            config.quadruple_n_max,
                            config.quadruple_fit_max,
                            opts,
                        )?),
                        "hkbound" => produced.push(check_hkbound(
                            &comb,
                            config.hkbound_radius,
                            config.hkbound_n_max,
                            config.hkbound_r_max,
                            config.hkbound_exact_points,
                            opts,
                        )?),
                        "moment-shape" => {
                            produced.extend(check_moment_shape(&comb, &config.n_scales, opts)?)
                        }
                        _ => unreachable!(),
                    }
                }
            }
        }
        out.extend(
            produced
                .into_iter()
                .filter(|r| whole.contains(g) || only.contains(r.bound_id.as_str())),
        );
    }
    Ok(out)
}

fn g_static(g: &str) -> &'static str {
    BOUND_IDS
        .iter()
        .copied()
        .find(|x| *x == g)
        .unwrap_or("unknown")
}
