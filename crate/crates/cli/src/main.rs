mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{read_config, CliResult, Settings};

/// Random walks, heat kernels and triple collisions on comb graphs.
#[derive(Parser, Debug)]
#[command(name = "combwalk", version)]
struct Cli {
    /// Tooth exponent; a comma-separated list for `bounds` and `phase`.
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Tooth-height family: log, poly or custom.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Heights for the custom family, one `n height` pair per line.
    #[arg(long, global = true)]
    heights_file: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Flat `key = value` file, or an output file of this program whose
    /// `#!` header is reused.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any setting of the command.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tooth heights over a range of columns, and ball volumes.
    Graph {
        #[arg(long)]
        center: Option<String>,
        #[arg(long)]
        radius: Option<u64>,
    },
    /// Transition density p_n(x, y), optionally killed outside a strip.
    Kernel {
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        /// Also compute the exact rational value and compare.
        #[arg(long)]
        exact: bool,
    },
    /// Effective resistance, and exit data of a ball.
    Resist {
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        radius: Option<u64>,
    },
    /// Monte Carlo replicas of k walkers: records.csv and summary.json.
    Simulate {
        /// Starting vertices separated by `;`, e.g. "(0,0);(2,0);(-2,0)".
        #[arg(long)]
        starts: Option<String>,
        #[arg(long = "n-scale")]
        n_scale: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Collision counts at horizons T and 2T for each alpha: phase.csv.
    Phase {
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        walkers: Option<usize>,
    },
    /// Growth statistic C_N over a grid of N: growth.csv.
    Growth {
        /// Comma-separated grid of N.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Exact moments or law of a collision count.
    Moments {
        /// h1, h2 or all.
        #[arg(long)]
        count: Option<String>,
        #[arg(long = "n-scale")]
        n_scale: Option<u64>,
        #[arg(long)]
        starts: Option<String>,
        #[arg(long)]
        law: bool,
    },
    /// Numerical checks of the inequalities: bounds_report.json and bounds.csv.
    Bounds {
        /// Bound or group id, repeatable; `all` by default.
        #[arg(long)]
        bound: Vec<String>,
        /// Grid and option overrides, applied after --config.
        #[arg(long)]
        grid_file: Option<PathBuf>,
    },
}

fn set_opt(s: &mut Settings, key: &str, v: Option<impl ToString>) -> CliResult<()> {
    match v {
        Some(v) => s.set(key, v.to_string()),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.jobs == 0 {
        return Err(settings::usage("--jobs must be at least 1"));
    }
    let mut s = commands::defaults(command_name(&cli.command));
    if let Some(path) = &cli.config {
        s.apply(&read_config(path)?)?;
    }
    if let Command::Bounds {
        grid_file: Some(path),
        ..
    } = &cli.command
    {
        s.apply(&read_config(path)?)?;
    }
    for (key, value) in [
        ("alpha", cli.alpha.clone()),
        ("family", cli.family.clone()),
        (
            "heights_file",
            cli.heights_file.as_ref().map(|p| p.display().to_string()),
        ),
        ("seed", cli.seed.map(|v| v.to_string())),
    ] {
        if s.has(key) {
            set_opt(&mut s, key, value)?;
        }
    }
    s.apply_assignments(&cli.set)?;
    match &cli.command {
        Command::Graph { center, radius } => {
            set_opt(&mut s, "center", center.as_ref())?;
            set_opt(&mut s, "radius", *radius)?;
        }
        Command::Kernel { x, y, n, exact } => {
            set_opt(&mut s, "x", x.as_ref())?;
            set_opt(&mut s, "y", y.as_ref())?;
            set_opt(&mut s, "n", *n)?;
            if *exact {
                s.set("exact", "true")?;
            }
        }
        Command::Resist { u, v, radius } => {
            set_opt(&mut s, "u", u.as_ref())?;
            set_opt(&mut s, "v", v.as_ref())?;
            set_opt(&mut s, "radius", *radius)?;
        }
        Command::Simulate {
            starts,
            n_scale,
            horizon,
            replicas,
        } => {
            set_opt(&mut s, "starts", starts.as_ref())?;
            set_opt(&mut s, "N", *n_scale)?;
            set_opt(&mut s, "horizon", *horizon)?;
            set_opt(&mut s, "replicas", *replicas)?;
        }
        Command::Phase {
            horizon,
            replicas,
            walkers,
        } => {
            set_opt(&mut s, "horizon", *horizon)?;
            set_opt(&mut s, "replicas", *replicas)?;
            set_opt(&mut s, "walkers", *walkers)?;
        }
        Command::Growth { grid, replicas } => {
            set_opt(&mut s, "grid", grid.as_ref())?;
            set_opt(&mut s, "replicas", *replicas)?;
        }
        Command::Moments {
            count,
            n_scale,
            starts,
            law,
        } => {
            set_opt(&mut s, "count", count.as_ref())?;
            set_opt(&mut s, "N", *n_scale)?;
            set_opt(&mut s, "starts", starts.as_ref())?;
            if *law {
                s.set("law", "true")?;
            }
        }
        Command::Bounds { bound, .. } => {
            if !bound.is_empty() {
                s.set("bound", bound.join(","))?;
            }
        }
    }
    let ctx = commands::Context {
        jobs: cli.jobs,
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Graph { .. } => commands::graph(&s, &ctx),
        Command::Kernel { .. } => commands::kernel(&s, &ctx),
        Command::Resist { .. } => commands::resist(&s, &ctx),
        Command::Simulate { .. } => commands::simulate(&s, &ctx),
        Command::Phase { .. } => commands::phase(&s, &ctx),
        Command::Growth { .. } => commands::growth(&s, &ctx),
        Command::Moments { .. } => commands::moments(&s, &ctx),
        Command::Bounds { .. } => commands::bounds(&s, &ctx),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Graph { .. } => "graph",
        Command::Kernel { .. } => "kernel",
        Command::Resist { .. } => "resist",
        Command::Simulate { .. } => "simulate",
        Command::Phase { .. } => "phase",
        Command::Growth { .. } => "growth",
        Command::Moments { .. } => "moments",
        Command::Bounds { .. } => "bounds",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
