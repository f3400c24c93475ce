//! `mcflab`: run, verify and inspect reduced mean curvature flows.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 invalid configuration,
//! 3 numerical failure (stalled flow, step underflow, or a failed check).

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::SystemTime;

use mcflab_core::diagnostics::diagnostics_row;
use mcflab_core::flow::{run_flow, FlowConfig, FlowError};
use mcflab_core::geometry::compute_geometry;
use mcflab_core::io::{self, EmitOptions, IoError};
use mcflab_core::verify::{verify_suite, SuiteOptions};

const USAGE: u8 = 1;
const INVALID: u8 = 2;
const NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Reduced mean curvature flow laboratory")]
struct Cli {
    /// Worker threads (falls back to MCFLAB_THREADS, then the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    outdir: Option<PathBuf>,
    /// Record diagnostics every N steps (overrides the config).
    #[arg(long)]
    cadence: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow and write diagnostics.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write every recorded snapshot to snapshots.ndjson.
        #[arg(long)]
        snapshots: bool,
    },
    /// Run every verifier check that applies to the configured shape.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Diagnostics of the initial shape as JSON.
    Diagnose {
        #[command(flatten)]
        common: Common,
    },
    /// Summarize a summary.json (or the directory holding it).
    Report {
        path: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Parse { .. } | IoError::Validation(_) => INVALID,
            IoError::Io { .. } | IoError::Json(_) => USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        let code = match e {
            FlowError::Validation(_) | FlowError::Surface(_) => INVALID,
            _ => NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

fn load(common: &Common) -> Result<FlowConfig, Failure> {
    let mut config = io::parse_config(&common.config)?;
    if let Some(c) = common.cadence {
        if c == 0 {
            return Err(Failure::new(INVALID, "cadence: must be positive"));
        }
        config.cadence = c;
    }
    Ok(config)
}

fn outdir(common: &Common) -> PathBuf {
    common.outdir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn run(common: &Common, snapshots: bool) -> Result<(), Failure> {
    let started = SystemTime::now();
    let config = load(common)?;
    let traj = run_flow(&config)?;
    let dir = outdir(common);
    io::emit(&dir, &config, Some(&traj), &[], started, EmitOptions { snapshots })?;
    println!(
        "stop {} after {} steps at t = {}, estimated extinction time {}",
        traj.stop.as_str(),
        traj.steps,
        traj.last().t,
        traj.estimated_t
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn verify(common: &Common) -> Result<(), Failure> {
    let started = SystemTime::now();
    let config = load(common)?;
    let reports = verify_suite(&config, &SuiteOptions::default())
        .map_err(|e| Failure::new(NUMERICAL, e.to_string()))?;
    for r in &reports {
        println!(
            "{:<16} {}  max {:e}  factors {:?}",
            r.equation,
            if r.pass { "pass" } else { "FAIL" },
            r.residual_max,
            r.factors
        );
    }
    if let Some(dir) = &common.outdir {
        io::emit(dir, &config, None, &reports, started, EmitOptions::default())?;
    }
    match reports.iter().filter(|r| !r.pass).count() {
        0 => Ok(()),
        n => Err(Failure::new(NUMERICAL, format!("{n} check(s) failed"))),
    }
}

fn diagnose(common: &Common) -> Result<(), Failure> {
    let config = load(common)?;
    let surface = config.build_surface().map_err(FlowError::from)?;
    let field = compute_geometry(&surface).map_err(FlowError::from)?;
    let row = diagnostics_row(0.0, 0.0, &surface, &field, &config.deltas, config.sobolev_alpha);
    let text = serde_json::to_string_pretty(&row).map_err(|e| Failure::new(USAGE, e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn report(path: &Path) -> Result<(), Failure> {
    let file = if path.is_dir() {
        path.join(io::SUMMARY_FILE)
    } else {
        path.to_path_buf()
    };
    let summary = io::read_summary(&file)?;
    print!("{}", io::render_report(&summary));
    let dir = file.parent().unwrap_or(Path::new("."));
    let stale = io::stale_digests(&summary.manifest, dir)?;
    if !stale.is_empty() {
        eprintln!("warning: digests differ for {}", stale.join(", "));
    }
    Ok(())
}

fn threads(cli: Option<usize>) -> Result<Option<usize>, Failure> {
    if cli.is_some() {
        return Ok(cli);
    }
    match std::env::var("MCFLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::new(USAGE, format!("MCFLAB_THREADS: not a thread count: {v}"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let result = threads(cli.threads).and_then(|n| {
        if let Some(n) = n.filter(|n| *n > 0) {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::new(USAGE, e.to_string()))?;
        }
        match &cli.command {
            Command::Run { common, snapshots } => run(common, *snapshots),
            Command::Verify { common } => verify(common),
            Command::Diagnose { common } => diagnose(common),
            Command::Report { path } => report(path),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
