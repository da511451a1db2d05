//! Command-line front end: `gdof curve | simulate | verify | sweep`.
//!
//! Every command emits one table, as CSV (default) or a JSON array of flat
//! objects with the same fields, to stdout or `--out`. Status lines and wall
//! time go to stderr only, so a fixed configuration always produces
//! byte-identical output files. Exit codes: 0 success, 1 verification
//! counterexample, 2 configuration error.
//!
//! Flags override keys from an optional `--config` file (flat `key=value`
//! lines, same names as the long flags), which override built-in defaults.

use crate::analysis::{
    run_simulation, run_verify, sweep, SimOptions, VerifyReport,
};
use crate::channel::{format_exact_ratio, Alpha};
use crate::schemes::{Regime, Scheme};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::Ratio;
use num::ToPrimitive;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "gdof",
    version,
    about = "Simulator and analysis toolkit for the K-user symmetric Gaussian \
             interference channel and its GDOF curve"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the theoretical GDOF curve over an alpha grid
    Curve(Opts),
    /// Monte-Carlo encode/channel/decode run at one alpha
    Simulate(Opts),
    /// Exhaustive deterministic round-trip check at one alpha
    Verify(Opts),
    /// Theory vs. empirical GDOF over an alpha grid
    Sweep(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// Number of users K
    #[arg(long)]
    users: Option<u32>,
    /// Digit base Q
    #[arg(long)]
    base: Option<u32>,
    /// Levels per interference shift M
    #[arg(long)]
    levels: Option<u32>,
    /// Interference exponent (integer, decimal, or p/q)
    #[arg(long)]
    alpha: Option<String>,
    /// Alpha grid as lo:hi:step (inclusive, exact rational stepping)
    #[arg(long, value_name = "LO:HI:STEP")]
    alpha_grid: Option<String>,
    /// Monte-Carlo trials per point
    #[arg(long)]
    trials: Option<u64>,
    /// Root seed for all randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (defaults to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Disable channel noise (simulate/sweep)
    #[arg(long)]
    zero_noise: bool,
    /// Enumeration cap for verify
    #[arg(long)]
    cap: Option<u64>,
    /// Report the measured-rate GDOF path instead of the formula path
    #[arg(long)]
    measured: bool,
    /// Config file with key=value lines (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Fully resolved configuration: flags over config file over defaults.
struct RunConfig {
    users: u32,
    base: u32,
    levels: u32,
    alpha: Option<Alpha>,
    grid: Option<Vec<Alpha>>,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
    zero_noise: bool,
    cap: u64,
    measured: bool,
}

#[derive(Debug)]
struct ConfigError(String);

impl ConfigError {
    fn new(msg: impl Into<String>) -> ConfigError {
        ConfigError(msg.into())
    }
}

impl From<std::io::Error> for ConfigError {
    fn from(e: std::io::Error) -> Self {
        ConfigError(format!("i/o error: {e}"))
    }
}

fn parse_key<T>(value: &str, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, ConfigError> {
    parse(value).ok_or_else(|| ConfigError::new(format!("invalid value {value:?} for {key}")))
}

fn resolve(opts: &Opts) -> Result<RunConfig, ConfigError> {
    let mut file: std::collections::HashMap<String, String> = Default::default();
    if let Some(path) = &opts.config {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read config {}: {e}", path.display())))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("config line {line:?} is not key=value")))?;
            let key = key.trim().to_string();
            const KEYS: [&str; 12] = [
                "users", "base", "levels", "alpha", "alpha-grid", "trials", "seed", "out",
                "format", "zero-noise", "cap", "measured",
            ];
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::new(format!("unknown config key {key:?}")));
            }
            file.insert(key, value.trim().to_string());
        }
    }
    let from_file = |key: &str| file.get(key).map(String::as_str);

    let users = match (opts.users, from_file("users")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "users", |s| s.parse().ok())?,
        _ => 3,
    };
    let base = match (opts.base, from_file("base")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "base", |s| s.parse().ok())?,
        _ => 64,
    };
    let levels = match (opts.levels, from_file("levels")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "levels", |s| s.parse().ok())?,
        _ => 8,
    };
    let trials = match (opts.trials, from_file("trials")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "trials", |s| s.parse().ok())?,
        _ => 10_000,
    };
    let seed = match (opts.seed, from_file("seed")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "seed", |s| s.parse().ok())?,
        _ => 0,
    };
    let cap = match (opts.cap, from_file("cap")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "cap", |s| s.parse().ok())?,
        _ => 1_000_000,
    };
    let alpha = match (&opts.alpha, from_file("alpha")) {
        (Some(v), _) => Some(v.as_str()),
        (None, v) => v,
    }
    .map(|s| s.parse::<Alpha>().map_err(|e| ConfigError::new(e.to_string())))
    .transpose()?;
    let grid = match (&opts.alpha_grid, from_file("alpha-grid")) {
        (Some(v), _) => Some(v.as_str()),
        (None, v) => v,
    }
    .map(parse_grid)
    .transpose()?;
    let out = match (&opts.out, from_file("out")) {
        (Some(v), _) => Some(v.clone()),
        (None, Some(v)) => Some(PathBuf::from(v)),
        _ => None,
    };
    let format = match (opts.format, from_file("format")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_key(v, "format", |s| Format::from_str(s, true).ok())?,
        _ => Format::Csv,
    };
    let zero_noise = opts.zero_noise
        || matches!(from_file("zero-noise"), Some("true") | Some("1"));
    let measured = opts.measured || matches!(from_file("measured"), Some("true") | Some("1"));

    Ok(RunConfig {
        users,
        base,
        levels,
        alpha,
        grid,
        trials,
        seed,
        out,
        format,
        zero_noise,
        cap,
        measured,
    })
}

/// Expands `lo:hi:step` into the inclusive grid `lo, lo+step, …` in exact
/// rational arithmetic, so repeated runs and boundary points are stable.
fn parse_grid(spec: &str) -> Result<Vec<Alpha>, ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(ConfigError::new(format!(
            "alpha grid {spec:?} must have the form lo:hi:step"
        )));
    };
    let parse = |s: &str| {
        s.parse::<Alpha>()
            .map_err(|e| ConfigError::new(format!("in alpha grid {spec:?}: {e}")))
    };
    let (lo, hi, step) = (parse(lo)?.ratio(), parse(hi)?.ratio(), parse(step)?.ratio());
    if step <= Ratio::from_integer(0) {
        return Err(ConfigError::new(format!("alpha grid step must be positive in {spec:?}")));
    }
    let mut grid = Vec::new();
    let mut a = lo;
    while a <= hi {
        grid.push(Alpha::new(a).expect("grid points are nonnegative"));
        if grid.len() > 10_000 {
            return Err(ConfigError::new(format!("alpha grid {spec:?} has over 10000 points")));
        }
        a += step;
    }
    if grid.is_empty() {
        return Err(ConfigError::new(format!("alpha grid {spec:?} is empty")));
    }
    Ok(grid)
}

impl RunConfig {
    fn grid_or_default(&self) -> Result<Vec<Alpha>, ConfigError> {
        if let Some(grid) = &self.grid {
            return Ok(grid.clone());
        }
        if let Some(alpha) = self.alpha {
            return Ok(vec![alpha]);
        }
        parse_grid("0:3:3/32")
    }

    fn single_alpha(&self, command: &str) -> Result<Alpha, ConfigError> {
        if self.grid.is_some() {
            return Err(ConfigError::new(format!(
                "{command} takes a single --alpha, not --alpha-grid"
            )));
        }
        self.alpha
            .ok_or_else(|| ConfigError::new(format!("{command} requires --alpha")))
    }
}

/// A value destined for one output cell; formatted per output format.
enum Cell {
    Str(String),
    Int(u64),
    Num(f64),
    Bool(bool),
    /// Exact rational, written exactly in CSV and as f64 in JSON.
    Exact(Ratio<i64>),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_sig(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Exact(r) => format_exact_ratio(*r),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => serde_json::Value::String(s.clone()),
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Num(x) => serde_json::Value::from(*x),
            Cell::Bool(b) => serde_json::Value::from(*b),
            Cell::Exact(r) => serde_json::Value::from(r.to_f64().unwrap()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// Formats with 12 significant digits, fixed-point, for stable golden files.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 40) as usize;
    format!("{x:.decimals$}")
}

struct Table {
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(self.columns)?;
                for row in &self.rows {
                    debug_assert_eq!(row.len(), self.columns.len());
                    w.write_record(row.iter().map(|c| c.csv()))?;
                }
                w.flush()
            }
            Format::Json => {
                let array: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.columns
                            .iter()
                            .zip(row)
                            .map(|(&k, c)| (k.to_string(), c.json()))
                            .collect::<serde_json::Map<_, _>>()
                            .into()
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &array)?;
                out.write_all(b"\n")
            }
        }
    }
}

fn emit(table: &Table, cfg: &RunConfig) -> Result<(), ConfigError> {
    match &cfg.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| {
                ConfigError::new(format!("cannot write {}: {e}", path.display()))
            })?;
            let mut w = std::io::BufWriter::new(file);
            table.write(cfg.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            table.write(cfg.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn version_cell() -> Cell {
    Cell::Str(TOOL_VERSION.to_string())
}

fn cmd_curve(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let grid = cfg.grid_or_default()?;
    let rows = grid
        .into_iter()
        .map(|alpha| {
            vec![
                version_cell(),
                Cell::Exact(alpha.ratio()),
                Cell::Str(Regime::classify(alpha).to_string()),
                Cell::Int(cfg.users as u64),
                Cell::Exact(crate::analysis::gdof_theoretical(alpha, cfg.users)),
            ]
        })
        .collect();
    let table = Table {
        columns: &["tool_version", "alpha", "regime", "users", "d_theory"],
        rows,
    };
    emit(&table, cfg)?;
    Ok(0)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let grid = cfg.grid_or_default()?;
    let opts = SimOptions {
        trials: cfg.trials,
        seed: cfg.seed,
        zero_noise: cfg.zero_noise,
        ..SimOptions::default()
    };
    let points = sweep(&grid, cfg.users, cfg.base, cfg.levels, &opts, cfg.measured);
    let rows = points
        .iter()
        .map(|p| {
            if let Some(err) = &p.error {
                eprintln!("note: alpha {}: {err}", p.alpha);
            }
            vec![
                version_cell(),
                Cell::Exact(p.alpha.ratio()),
                Cell::Str(p.regime.to_string()),
                Cell::Int(p.users as u64),
                Cell::Int(p.base as u64),
                Cell::Int(p.levels as u64),
                Cell::Int(p.trials),
                Cell::Exact(p.d_theory),
                p.d_empirical.map_or(Cell::Empty, Cell::Num),
                p.gap().map_or(Cell::Empty, Cell::Num),
                p.max_level_error.map_or(Cell::Empty, Cell::Num),
                Cell::Int(p.seed),
            ]
        })
        .collect();
    let table = Table {
        columns: &[
            "tool_version",
            "alpha",
            "regime",
            "users",
            "base",
            "levels",
            "trials",
            "d_theory",
            "d_empirical",
            "gap",
            "max_level_error",
            "seed",
        ],
        rows,
    };
    emit(&table, cfg)?;
    Ok(0)
}

const SIMULATE_COLUMNS: &[&str] = &[
    "tool_version",
    "alpha",
    "regime",
    "users",
    "base",
    "levels",
    "trials",
    "seed",
    "record",
    "level",
    "level_mismatch_rate",
    "user",
    "user_message_error_rate",
    "d_theory",
    "d_empirical_formula",
    "d_empirical_measured",
    "max_level_error",
    "rate_formula_qits",
    "rate_measured_qits",
    "out_of_alphabet_rate",
];

fn cmd_simulate(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let alpha = cfg.single_alpha("simulate")?;
    let regime = Regime::classify(alpha);
    let scheme = Scheme::new(cfg.users, cfg.base, cfg.levels, alpha)
        .map_err(|e| ConfigError::new(format!("cannot simulate at alpha {alpha}: {e}")))?;
    let opts = SimOptions {
        trials: cfg.trials,
        seed: cfg.seed,
        zero_noise: cfg.zero_noise,
        ..SimOptions::default()
    };
    let sim = run_simulation(&scheme, &opts);
    let d_theory = crate::analysis::gdof_theoretical(alpha, cfg.users);

    let prefix = |record: &str| {
        vec![
            version_cell(),
            Cell::Exact(alpha.ratio()),
            Cell::Str(regime.to_string()),
            Cell::Int(cfg.users as u64),
            Cell::Int(cfg.base as u64),
            Cell::Int(cfg.levels as u64),
            Cell::Int(cfg.trials),
            Cell::Int(cfg.seed),
            Cell::Str(record.to_string()),
        ]
    };
    let pad = |mut row: Vec<Cell>, tail: Vec<Cell>| {
        row.extend(tail);
        while row.len() < SIMULATE_COLUMNS.len() {
            row.push(Cell::Empty);
        }
        row
    };

    let mut rows = Vec::new();
    rows.push(pad(
        prefix("summary"),
        vec![
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Exact(d_theory),
            Cell::Num(sim.d_empirical_formula),
            Cell::Num(sim.d_empirical_measured),
            Cell::Num(sim.max_level_error()),
            Cell::Num(sim.rate_formula_qits),
            Cell::Num(sim.rate_measured_qits),
            Cell::Num(sim.out_of_alphabet_rate()),
        ],
    ));
    for level in &sim.per_level.levels {
        rows.push(pad(
            prefix("level"),
            vec![Cell::Int(level.level as u64), Cell::Num(level.estimate())],
        ));
    }
    for user in 0..cfg.users as usize {
        rows.push(pad(
            prefix("user"),
            vec![
                Cell::Empty,
                Cell::Empty,
                Cell::Int(user as u64),
                Cell::Num(sim.message_error_rate(user)),
            ],
        ));
    }
    let table = Table { columns: SIMULATE_COLUMNS, rows };
    emit(&table, cfg)?;
    Ok(0)
}

const VERIFY_COLUMNS: &[&str] = &[
    "tool_version",
    "alpha",
    "regime",
    "users",
    "base",
    "levels",
    "seed",
    "cap",
    "record",
    "mode",
    "tuples_checked",
    "failures",
    "passed",
    "user",
    "expected",
    "decoded",
    "unresolved",
    "out_of_alphabet",
    "messages",
    "transmitted",
    "composite",
    "reduced",
];

fn digits_str(digits: &[u32]) -> String {
    let mut s = String::from("[");
    for (i, d) in digits.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{d}");
    }
    s.push(']');
    s
}

fn cmd_verify(cfg: &RunConfig) -> Result<i32, ConfigError> {
    let alpha = cfg.single_alpha("verify")?;
    let regime = Regime::classify(alpha);
    let scheme = Scheme::new(cfg.users, cfg.base, cfg.levels, alpha)
        .map_err(|e| ConfigError::new(format!("cannot verify at alpha {alpha}: {e}")))?;
    let report: VerifyReport = run_verify(&scheme, cfg.cap, cfg.seed)
        .map_err(|e| ConfigError::new(e.to_string()))?;

    let prefix = |record: &str| {
        vec![
            version_cell(),
            Cell::Exact(alpha.ratio()),
            Cell::Str(regime.to_string()),
            Cell::Int(cfg.users as u64),
            Cell::Int(cfg.base as u64),
            Cell::Int(cfg.levels as u64),
            Cell::Int(cfg.seed),
            Cell::Int(cfg.cap),
            Cell::Str(record.to_string()),
        ]
    };
    let pad = |mut row: Vec<Cell>, tail: Vec<Cell>| {
        row.extend(tail);
        while row.len() < VERIFY_COLUMNS.len() {
            row.push(Cell::Empty);
        }
        row
    };

    let mut rows = Vec::new();
    rows.push(pad(
        prefix("summary"),
        vec![
            Cell::Str(report.mode.to_string()),
            Cell::Int(report.tuples_checked),
            Cell::Int(report.failures),
            Cell::Bool(report.passed()),
        ],
    ));
    for ce in &report.counterexamples {
        rows.push(pad(
            prefix("counterexample"),
            vec![
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Int(ce.user as u64),
                Cell::Str(digits_str(&ce.expected)),
                Cell::Str(digits_str(&ce.decoded)),
                Cell::Int(ce.unresolved as u64),
                Cell::Bool(ce.out_of_alphabet),
                Cell::Str(
                    ce.messages
                        .iter()
                        .enumerate()
                        .map(|(u, m)| format!("user{u}:{}", digits_str(m)))
                        .collect::<Vec<_>>()
                        .join("; "),
                ),
                Cell::Str(ce.transmitted.join("; ")),
                Cell::Str(ce.composite.clone()),
                Cell::Str(ce.reduced.clone()),
            ],
        ));
    }
    let table = Table { columns: VERIFY_COLUMNS, rows };
    emit(&table, cfg)?;

    if report.passed() {
        eprintln!(
            "verify: pass ({} mode, {} tuples)",
            report.mode, report.tuples_checked
        );
        Ok(0)
    } else {
        eprintln!(
            "verify: FAIL ({} mode, {} tuples, {} failures)",
            report.mode, report.tuples_checked, report.failures
        );
        Ok(1)
    }
}

/// Parses argv, runs the selected command, and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, opts) = match &cli.command {
        Command::Curve(o) => ("curve", o),
        Command::Simulate(o) => ("simulate", o),
        Command::Verify(o) => ("verify", o),
        Command::Sweep(o) => ("sweep", o),
    };
    let result = resolve(opts).and_then(|cfg| match &cli.command {
        Command::Curve(_) => cmd_curve(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg),
        Command::Verify(_) => cmd_verify(&cfg),
        Command::Sweep(_) => cmd_sweep(&cfg),
    });
    let code = match result {
        Ok(code) => code,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    eprintln!("{name}: {:.3}s elapsed", started.elapsed().as_secs_f64());
    code
}
