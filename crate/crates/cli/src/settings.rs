//! Layered `key = value` settings: command defaults, then a config file,
//! then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use combwalk::estimates::parse_key_values;
use combwalk::{Comb, CombSpec, Vertex};

/// Exit status 2 for usage and configuration problems, 1 for everything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<combwalk::Error> for CliError {
    fn from(e: combwalk::Error) -> Self {
        use combwalk::Error::*;
        match e {
            Inadmissible(_) | InvalidParameter(_) | Domain(_) | EmptyTargetRegion(_) => {
                CliError::Usage(e.to_string())
            }
            ResourceLimit { .. } | Singular(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Settings of one command. Keys are fixed by the command's defaults and
/// kept in that order.
#[derive(Clone, Debug)]
pub struct Settings {
    command: &'static str,
    order: Vec<String>,
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(command: &'static str, defaults: Vec<(&str, String)>) -> Self {
        Settings {
            command,
            order: defaults.iter().map(|(k, _)| k.to_string()).collect(),
            values: defaults
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.into();
                Ok(())
            }
            None => Err(usage(format!("{}: unknown key {key}", self.command))),
        }
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> CliResult<()> {
        for (k, v) in pairs {
            match k.as_str() {
                "version" => {}
                "command" if v != self.command => {
                    return Err(usage(format!(
                        "config was written by `{v}`, not `{}`",
                        self.command
                    )))
                }
                "command" => {}
                _ => self.set(k, v.clone())?,
            }
        }
        Ok(())
    }

    /// `key=value` assignments from `--set`.
    pub fn apply_assignments(&mut self, items: &[String]) -> CliResult<()> {
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| usage(format!("{key}: cannot parse {v:?}")))
    }

    /// `None` for `auto`, `none` or an empty value.
    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            "" | "auto" | "none" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    /// Comma-separated list; empty value gives an empty list.
    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>> {
        let v = self.raw(key);
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| usage(format!("{key}: cannot parse {s:?}")))
            })
            .collect()
    }

    /// Semicolon-separated vertices such as `(0,0);(2,0)`.
    pub fn vertices(&self, key: &str) -> CliResult<Vec<Vertex>> {
        self.raw(key)
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<Vertex>().map_err(CliError::from))
            .collect()
    }

    pub fn vertex(&self, key: &str) -> CliResult<Vertex> {
        Ok(self.raw(key).parse::<Vertex>()?)
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(usage(format!("{key}: expected true or false, got {v:?}"))),
        }
    }

    /// All settings in canonical order, preceded by the command and version.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("command".to_string(), self.command.to_string()),
        ];
        out.extend(
            self.order
                .iter()
                .map(|k| (k.clone(), self.values[k].clone())),
        );
        out
    }

    /// The comb described by `family`, `alpha` and `heights_file`.
    pub fn comb(&self) -> CliResult<Comb> {
        comb_from(
            self.raw("family"),
            self.raw("alpha"),
            self.raw("heights_file"),
        )
    }
}

pub fn comb_from(family: &str, alpha: &str, heights_file: &str) -> CliResult<Comb> {
    let alpha = || {
        alpha
            .parse::<f64>()
            .map_err(|_| usage(format!("alpha: cannot parse {alpha:?}")))
    };
    let spec = match family {
        "log" => CombSpec::log(alpha()?)?,
        "poly" => CombSpec::poly(alpha()?)?,
        "custom" => {
            if heights_file.is_empty() || heights_file == "none" {
                return Err(usage("family custom needs --heights-file"));
            }
            let heights = read_heights(Path::new(heights_file))?;
            let table = Arc::new(heights);
            CombSpec::custom(move |n| table.get(&n).copied().unwrap_or(0))
        }
        other => {
            return Err(usage(format!(
                "family must be log, poly or custom, got {other:?}"
            )))
        }
    };
    Ok(Comb::new(spec))
}

/// Lines `n height`; `#` starts a comment; unlisted teeth have height 0.
fn read_heights(path: &Path) -> CliResult<BTreeMap<i64, u64>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || usage(format!("{}:{}: expected `n height`", path.display(), i + 1));
        let mut it = line.split_whitespace();
        let n = it
            .next()
            .ok_or_else(bad)?
            .parse::<i64>()
            .map_err(|_| bad())?;
        let h = it
            .next()
            .ok_or_else(bad)?
            .parse::<u64>()
            .map_err(|_| bad())?;
        if it.next().is_some() || out.insert(n, h).is_some() {
            return Err(bad());
        }
    }
    Ok(out)
}

/// Read a config file. When it contains `#!` header lines (an output file of
/// this program), only those are used.
pub fn read_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let header: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("#!")).collect();
    let body = if header.is_empty() {
        text.clone()
    } else {
        header.join("\n")
    };
    parse_key_values(&body).map_err(|e| usage(format!("{}: {e}", path.display())))
}
