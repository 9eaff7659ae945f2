//! Command-line front end.
//!
//! Every subcommand writes raw per-replicate rows as CSV (to `--out`, or
//! standard output) and, with `--json`, a summary document. CSV files start
//! with `#` comment lines holding the crate version, the full configuration
//! and the seed; the thread count is deliberately left out so that output is
//! byte-identical for any `--threads`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chains::{delta_spread, longest_chain, ChainQuery};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, ReplicateRecord, TailSide};
use crate::geometry::{DiagRect, PointXY, Region};
use crate::regeneration::omega_occurs;
use crate::sampling::{sample_region, SeedSpec};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_229;
/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "LIPSTRIP_THREADS";
pub const SCHEMA_VERSION: u32 = 1;

const EXIT_OK: i32 = 0;
const EXIT_THRESHOLD: i32 = 1;
const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lipstrip",
    version,
    about = "Monte Carlo experiments for longest increasing paths in Poisson point clouds",
    after_help = "Worker threads default to the LIPSTRIP_THREADS environment variable, \
                  or to the available parallelism when it is unset. Output never depends on the thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Replicates per size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    #[serde(skip)]
    threads: Option<usize>,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// JSON summary output path.
    #[arg(long)]
    #[serde(skip)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SideArg {
    Upper,
    Lower,
    Both,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Draw one Poisson sample: the square [0,n]^2, a strip (with --gamma) or a
    /// diagonal rectangle (with --ell and --w).
    Sample {
        #[arg(long)]
        n: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        w: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Corner-to-corner length in [0,n]^2, or in the strip with --gamma.
    Length {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// Drop the corner endpoints.
        #[arg(long)]
        free: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Length and spread of one sample of the diagonal rectangle [0,ell]x[0,w].
    Delta {
        #[arg(long)]
        ell: f64,
        #[arg(long)]
        w: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Frequency of the regeneration event in basic blocks.
    Omega {
        #[arg(long, conflicts_with = "sizes")]
        n: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long = "delta-prime", default_value_t = 0.05)]
        delta_prime: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Centring and scaling constants of the square corner-to-corner length.
    TwConstants {
        #[arg(long, default_value_t = 500.0)]
        n: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Mean and variance exponents of strip lengths.
    StripScaling {
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<f64>,
        #[arg(long)]
        free: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Gaussian limit of the strip length.
    Clt {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 8192.0)]
        n: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Transversal fluctuation exponent of square maximizers.
    Transversal {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare L_{t,s} with L_{sqrt(t^2-s^2)}.
    DistIdentity {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Tail frequencies of the standardized length.
    Tail {
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,2.5")]
        thresholds: Vec<f64>,
        #[arg(long, value_enum, default_value_t = SideArg::Both)]
        side: SideArg,
        #[command(flatten)]
        common: Common,
    },
    /// Normalized variance of rectangle lengths across widths.
    VarianceProfile {
        #[arg(long)]
        ell: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        ws: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Mean deficiency of rectangle lengths against the predicted bracket.
    BlockExpectation {
        #[arg(long)]
        ell: f64,
        #[arg(long)]
        w: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "sample",
            Command::Length { .. } => "length",
            Command::Delta { .. } => "delta",
            Command::Omega { .. } => "omega",
            Command::TwConstants { .. } => "tw-constants",
            Command::StripScaling { .. } => "strip-scaling",
            Command::Clt { .. } => "clt",
            Command::Transversal { .. } => "transversal",
            Command::DistIdentity { .. } => "dist-identity",
            Command::Tail { .. } => "tail",
            Command::VarianceProfile { .. } => "variance-profile",
            Command::BlockExpectation { .. } => "block-expectation",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Sample { common, .. }
            | Command::Length { common, .. }
            | Command::Delta { common, .. }
            | Command::Omega { common, .. }
            | Command::TwConstants { common, .. }
            | Command::StripScaling { common, .. }
            | Command::Clt { common, .. }
            | Command::Transversal { common, .. }
            | Command::DistIdentity { common, .. }
            | Command::Tail { common, .. }
            | Command::VarianceProfile { common, .. }
            | Command::BlockExpectation { common, .. } => common,
        }
    }
}

/// A finished run: CSV table, optional summary and verdict.
struct Output {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    summary: Option<serde_json::Value>,
    pass: Option<bool>,
}

impl Output {
    fn table(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
            summary: None,
            pass: None,
        }
    }

    fn from_records(first: &str, records: &[ReplicateRecord], summary: impl Serialize, pass: Option<bool>) -> Result<Self> {
        Self::records_with(first, records, |r| r.size, summary, pass)
    }

    fn records_with(
        first: &str,
        records: &[ReplicateRecord],
        key: impl Fn(&ReplicateRecord) -> f64,
        summary: impl Serialize,
        pass: Option<bool>,
    ) -> Result<Self> {
        let mut columns = vec![first.to_string(), "replicate".to_string()];
        if let Some(r) = records.first() {
            columns.extend(r.measured.iter().map(|(k, _)| k.clone()));
        }
        let rows = records
            .iter()
            .map(|r| {
                let mut row = vec![key(r), r.replicate as f64];
                row.extend(r.measured.iter().map(|(_, v)| *v));
                row
            })
            .collect();
        let summary = serde_json::to_value(summary).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self {
            columns,
            rows,
            summary: Some(summary),
            pass,
        })
    }
}

/// Formats a value for CSV: integers exactly, everything else with 17
/// significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 9.007_199_254_740_992e15 {
        format!("{}", v as i64)
    } else if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn require_m(common: &Common, default: usize) -> usize {
    common.m.unwrap_or(default)
}

fn dispatch(cmd: &Command, threads: usize) -> Result<Output> {
    let common = cmd.common();
    let seed = common.seed;
    let spec = SeedSpec::new(seed, 0);
    match cmd {
        Command::Sample { n, gamma, ell, w, .. } => {
            let region = match (n, gamma, ell, w) {
                (Some(n), None, None, None) => Region::square(*n)?,
                (Some(n), Some(g), None, None) => Region::strip_gamma(*n, *g)?,
                (None, None, Some(l), Some(w)) => Region::Diag(DiagRect::at_origin(*l, *w)?),
                _ => {
                    return Err(Error::InvalidConfig(
                        "sample needs --n, --n with --gamma, or --ell with --w".into(),
                    ))
                }
            };
            let pts = sample_region(&region, spec)?;
            let rows = pts
                .points()
                .iter()
                .map(|p| {
                    let ts = p.to_ts();
                    vec![p.x, p.y, ts.t, ts.s]
                })
                .collect();
            Ok(Output::table(&["x", "y", "t", "s"], rows))
        }
        Command::Length { n, gamma, free, .. } => {
            let len = match gamma {
                Some(g) => experiments::strip_length(*n, *g, *free, spec)?.0,
                None => {
                    let pts = sample_region(&Region::square(*n)?, spec)?;
                    let mut q = ChainQuery::new(&pts);
                    if !free {
                        q = q.between(PointXY::new(0.0, 0.0), PointXY::new(*n, *n));
                    }
                    longest_chain(&q)?.length
                }
            };
            Ok(Output::table(&["length"], vec![vec![len as f64]]))
        }
        Command::Delta { ell, w, .. } => {
            let rect = DiagRect::at_origin(*ell, *w)?;
            let pts = sample_region(&Region::Diag(rect), spec)?;
            let len = longest_chain(&ChainQuery::new(&pts))?.length;
            let d = delta_spread(&rect, &pts);
            let om = omega_occurs(&pts, &rect)?;
            Ok(Output::table(
                &["points", "length", "delta", "omega"],
                vec![vec![pts.len() as f64, len as f64, d as f64, f64::from(u8::from(om.occurs))]],
            ))
        }
        Command::Omega {
            n,
            sizes,
            delta,
            delta_prime,
            ..
        } => {
            let sizes = match (n, sizes) {
                (Some(n), None) => vec![*n],
                (None, Some(s)) => s.clone(),
                _ => return Err(Error::InvalidConfig("omega needs --n or --sizes".into())),
            };
            let cfg = ExperimentConfig::new(sizes, require_m(common, 400), seed)
                .deltas(*delta, *delta_prime)
                .threads(threads);
            let (rep, recs) = experiments::run_omega(&cfg)?;
            let pass = rep.pass;
            Output::from_records("size", &recs, rep, Some(pass))
        }
        Command::TwConstants { n, .. } => {
            let (rep, recs) = experiments::run_tw_constants(*n, require_m(common, 400), seed, threads)?;
            let pass = rep.pass;
            Output::from_records("size", &recs, rep, Some(pass))
        }
        Command::StripScaling { gamma, sizes, free, .. } => {
            let cfg = ExperimentConfig::new(sizes.clone(), require_m(common, 200), seed)
                .gamma(*gamma)
                .threads(threads);
            let (rep, recs) = experiments::run_strip_scaling(&cfg, *free)?;
            let pass = rep.pass;
            Output::from_records("size", &recs, rep, Some(pass))
        }
        Command::Clt { gamma, n, .. } => {
            experiments::check_gamma(*gamma)?;
            let (rep, recs) = experiments::run_clt(*n, *gamma, require_m(common, 1000), seed, threads)?;
            let pass = rep.pass;
            Output::from_records("size", &recs, rep, Some(pass))
        }
        Command::Transversal { sizes, .. } => {
            let cfg = ExperimentConfig::new(sizes.clone(), require_m(common, 200), seed).threads(threads);
            let (rep, recs) = experiments::run_transversal(&cfg)?;
            let pass = rep.pass;
            Output::from_records("size", &recs, rep, Some(pass))
        }
        Command::DistIdentity { t, s, .. } => {
            let (rep, recs) = experiments::run_dist_identity(*t, *s, require_m(common, 2000), seed, threads)?;
            let pass = rep.pass;
            Output::records_with("arm", &recs, |r| r.size_index as f64, rep, Some(pass))
        }
        Command::Tail { t, thresholds, side, .. } => {
            let sides: &[TailSide] = match side {
                SideArg::Upper => &[TailSide::Upper],
                SideArg::Lower => &[TailSide::Lower],
                SideArg::Both => &[TailSide::Upper, TailSide::Lower],
            };
            let (rep, recs) = experiments::run_tail(*t, thresholds, sides, require_m(common, 50_000), seed, threads)?;
            let pass = rep.pass;
            Output::from_records("size", &recs, rep, Some(pass))
        }
        Command::VarianceProfile { ell, ws, .. } => {
            let (rows, recs) = experiments::run_variance_profile(*ell, ws, require_m(common, 200), seed, threads)?;
            Output::from_records("size", &recs, rows, None)
        }
        Command::BlockExpectation { ell, w, delta, .. } => {
            let (rep, recs) = experiments::run_block_expectation(*ell, *w, *delta, require_m(common, 200), seed, threads)?;
            Output::from_records("size", &recs, rep, None)
        }
    }
}

fn render_csv(cmd: &Command, out: &Output) -> Result<String> {
    let config = serde_json::to_string(cmd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut s = String::new();
    let _ = writeln!(s, "# lipstrip {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# subcommand: {}", cmd.name());
    let _ = writeln!(s, "# config: {config}");
    let _ = writeln!(s, "# seed: {}", cmd.common().seed);
    let _ = writeln!(s, "{}", out.columns.join(","));
    for row in &out.rows {
        let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    Ok(s)
}

fn render_json(cmd: &Command, out: &Output) -> Result<String> {
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cmd.name(),
        "config": cmd,
        "seed": cmd.common().seed,
        "pass": out.pass,
        "summary": out.summary,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn write_file(path: &PathBuf, contents: &str) -> std::result::Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Parses `argv` (including the program name), runs the subcommand and returns
/// the process exit code: 0 success, 1 failed acceptance threshold, 2 invalid
/// invocation or run error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let cmd = &cli.command;
    let threads = cmd.common().threads.unwrap_or_else(default_threads);
    if threads == 0 {
        eprintln!("error: --threads must be positive");
        return EXIT_INVALID;
    }
    let out = match dispatch(cmd, threads) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let csv = match render_csv(cmd, &out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let common = cmd.common();
    match &common.out {
        Some(p) => {
            if let Err(e) = write_file(p, &csv) {
                eprintln!("error: {e}");
                return EXIT_INVALID;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(csv.as_bytes());
        }
    }
    let json = match render_json(cmd, &out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if let Some(p) = &common.json {
        if let Err(e) = write_file(p, &json) {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    }
    if out.pass == Some(false) {
        eprintln!("acceptance threshold failed:\n{json}");
        return EXIT_THRESHOLD;
    }
    EXIT_OK
}
