//! Command-line front end.
//!
//! Settings come from an optional JSON file (`--config`) overridden by flags,
//! which in turn fall back to `TYPLAB_*` environment variables. Exit codes:
//! 0 success, 1 bad input, 2 analysis failure.

mod config;
mod run;

use std::ffi::OsString;
use std::path::Path;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

pub use config::{parse_config, preset, Command, FamilyChoice, RunConfig};
pub use run::{error_exit_code, execute, Outcome, VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "typlab",
    version,
    about = "Typical points of piecewise expanding families"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Distance between orbit statistics and the invariant density over a parameter grid.
    Sweep,
    /// Invariant density at one parameter, with bounds and variation.
    Density,
    /// One orbit with parameter and space derivatives.
    Orbit,
    /// Kneading words along a skew tent path.
    Kneading,
    /// Growth of parameter derivatives over a grid.
    #[command(name = "check-i")]
    CheckI,
    /// Cylinder matching between two parameters.
    #[command(name = "check-iii")]
    CheckIii,
    /// Turning-point transversality for a skew tent path.
    Transversality,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Sweep => Command::Sweep,
            Sub::Density => Command::Density,
            Sub::Orbit => Command::Orbit,
            Sub::Kneading => Command::Kneading,
            Sub::CheckI => Command::CheckI,
            Sub::CheckIii => Command::CheckIii,
            Sub::Transversality => Command::Transversality,
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Preset name (beta, markov, skewtent) or a JSON family file.
    #[arg(long, global = true, env = "TYPLAB_FAMILY")]
    pub family: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, env = "TYPLAB_CONFIG")]
    pub config: Option<String>,
    /// Output directory.
    #[arg(long, global = true, env = "TYPLAB_OUT")]
    pub out: Option<String>,
    #[arg(long, global = true, env = "TYPLAB_SEED")]
    pub seed: Option<u64>,
    /// Orbit length for sweeps.
    #[arg(long, global = true, env = "TYPLAB_N")]
    pub n: Option<usize>,
    #[arg(long, global = true, env = "TYPLAB_BURN_IN")]
    pub burn_in: Option<usize>,
    #[arg(long, global = true, env = "TYPLAB_BINS")]
    pub bins: Option<usize>,
    /// Cylinder and kneading depth.
    #[arg(long, global = true, env = "TYPLAB_DEPTH")]
    pub depth: Option<usize>,
    /// Steps of derivative orbits.
    #[arg(long, global = true, env = "TYPLAB_JMAX")]
    pub jmax: Option<usize>,
    #[arg(long, global = true, env = "TYPLAB_TAU")]
    pub tau: Option<usize>,
    /// Size of the default parameter grid.
    #[arg(long, global = true, env = "TYPLAB_POINTS")]
    pub points: Option<usize>,
    #[arg(long, global = true, env = "TYPLAB_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TYPLAB_THREADS")]
    pub threads: Option<usize>,
    /// Single-threaded reference mode.
    #[arg(long, global = true, env = "TYPLAB_SERIAL")]
    pub serial: bool,
    #[arg(long, global = true, env = "TYPLAB_A", allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, env = "TYPLAB_A0", allow_hyphen_values = true)]
    pub a0: Option<f64>,
    #[arg(long, global = true, env = "TYPLAB_A1", allow_hyphen_values = true)]
    pub a1: Option<f64>,
    #[arg(long, global = true, env = "TYPLAB_A2", allow_hyphen_values = true)]
    pub a2: Option<f64>,
    /// Skew tent slope path: symmetric or increasing.
    #[arg(long, global = true, env = "TYPLAB_PATH")]
    pub path: Option<String>,
    /// Constant starting point.
    #[arg(long, global = true, env = "TYPLAB_X", allow_hyphen_values = true)]
    pub x: Option<f64>,
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn read_json(path: &str, field: &str) -> Result<Value> {
    let text =
        std::fs::read_to_string(path).map_err(|e| config_error(field, format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| config_error(field, format!("{path}: {e}")))
}

/// Merges the config file, flags and subcommand into a validated config.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig> {
    let mut map = match &flags.config {
        Some(p) => match read_json(p, "config")? {
            Value::Object(m) => m,
            _ => return Err(config_error("config", "top level must be an object")),
        },
        None => Map::new(),
    };
    let cmd = json!(command);
    if let Some(existing) = map.get("command") {
        if existing != &cmd {
            return Err(config_error(
                "command",
                format!("config is for {existing}, not {cmd}"),
            ));
        }
    }
    map.insert("command".into(), cmd);
    if let Some(f) = &flags.family {
        let v = if f.ends_with(".json") || Path::new(f).is_file() {
            read_json(f, "family")?
        } else {
            json!(f)
        };
        map.insert("family".into(), v);
    }
    let mut set = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            map.insert(k.into(), v);
        }
    };
    set("out", flags.out.as_ref().map(|v| json!(v)));
    set("seed", flags.seed.map(|v| json!(v)));
    set("n", flags.n.map(|v| json!(v)));
    set("burn_in", flags.burn_in.map(|v| json!(v)));
    set("bins", flags.bins.map(|v| json!(v)));
    set("depth", flags.depth.map(|v| json!(v)));
    set("j_max", flags.jmax.map(|v| json!(v)));
    set("tau", flags.tau.map(|v| json!(v)));
    set("grid_size", flags.points.map(|v| json!(v)));
    set("threshold", flags.threshold.map(|v| json!(v)));
    set("threads", flags.threads.map(|v| json!(v)));
    set("serial", flags.serial.then(|| json!(true)));
    set("a", flags.a.map(|v| json!(v)));
    set("a0", flags.a0.map(|v| json!(v)));
    set("a1", flags.a1.map(|v| json!(v)));
    set("a2", flags.a2.map(|v| json!(v)));
    set("path", flags.path.as_ref().map(|v| json!(v)));
    set(
        "x",
        flags.x.map(|v| json!({"type": "constant", "value": v})),
    );
    parse_config(&Value::Object(map).to_string())
}

fn run_config(cfg: &RunConfig) -> Result<Outcome> {
    let threads = if cfg.serial { Some(1) } else { cfg.threads };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| config_error("threads", e.to_string()))?
            .install(|| execute(cfg)),
        None => execute(cfg),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve(cli.command.into(), &cli.flags).and_then(|cfg| run_config(&cfg));
    match result {
        Ok(o) => {
            println!("{}", o.summary);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if !o.passed {
                eprintln!("analysis check failed");
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}
