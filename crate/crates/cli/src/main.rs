//! `jsrbound`: run constrained joint-spectral-radius brackets, Markov
//! switching experiments, rotation cocycle galleries, and random linear ODE
//! checks from JSON problem configs.
//!
//! Exit codes: 0 on success, 2 on config or I/O errors, 3 when the run
//! completed but raised numeric flags (degenerate products, iteration caps,
//! failed consistency checks). Reports land in `--out`, the
//! `JSRBOUND_OUT_DIR` environment variable, or the working directory, and
//! go to stdout when the config names no report file.

mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::CommandOutput;
use config::{Kind, ProblemConfig};
use report::{RunReport, Timing};

#[derive(Parser)]
#[command(name = "jsrbound", version, about = "Certified brackets and stability checks for constrained switched linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Joint-spectral-radius bracket, margins, certificates, probes.
    Jsr(RunArgs),
    /// Markov switching: stationary data, Lyapunov exponents and spectra.
    Markov(RunArgs),
    /// Rotation-driven cocycle gallery.
    Rotation(RunArgs),
    /// Random linear ODE kernel and quasi-contraction tests.
    Ode(RunArgs),
    /// Run the bundled demonstration configs.
    Reproduce {
        /// Output directory for the reports.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker cap (computations are deterministic; 1 worker is used).
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Problem config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides JSRBOUND_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker cap (computations are deterministic; 1 worker is used).
    #[arg(long)]
    threads: Option<usize>,
    /// Replace every seed in the config.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Disable branch-and-bound pruning in upper bounds (cross-check path).
    #[arg(long)]
    oracle_mode: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC_FLAG: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Jsr(args) => run_kind(Kind::Jsr, &args),
        Command::Markov(args) => run_kind(Kind::Markov, &args),
        Command::Rotation(args) => run_kind(Kind::Rotation, &args),
        Command::Ode(args) => run_kind(Kind::Ode, &args),
        Command::Reproduce { out, threads } => reproduce(out, threads),
    };
    match outcome {
        Ok(flags) if flags => ExitCode::from(EXIT_NUMERIC_FLAG),
        Ok(_) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn threads_cap(requested: Option<usize>) -> Result<usize, String> {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match requested {
        Some(0) => Err("--threads must be at least 1".into()),
        Some(n) => Ok(n.min(available)),
        None => Ok(available),
    }
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os("JSRBOUND_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs one config end to end; returns whether numeric flags were raised.
fn run_kind(kind: Kind, args: &RunArgs) -> Result<bool, String> {
    let started = Instant::now();
    let (cfg, bytes) = config::load(&args.config)?;
    if cfg.kind != kind {
        return Err(format!(
            "config has kind \"{}\" but the \"{}\" subcommand was invoked",
            cfg.kind.name(),
            kind.name()
        ));
    }
    let threads = threads_cap(args.threads)?;
    let output = dispatch(&cfg, args.seed_override, args.oracle_mode)?;
    let flagged = !output.numeric_flags.is_empty();
    let report = RunReport {
        version: config::CONFIG_VERSION,
        kind: kind.name().to_string(),
        config_sha256: report::config_hash(&bytes),
        seed: output.seed,
        threads,
        oracle_mode: args.oracle_mode,
        results: output.results,
        notes: output.notes,
        numeric_flags: output.numeric_flags,
        timing: Timing {
            wall_ms: started.elapsed().as_millis(),
        },
    };
    write_outputs(&report, output.csv.as_deref(), &cfg, &out_dir(&args.out))?;
    Ok(flagged)
}

fn dispatch(
    cfg: &ProblemConfig,
    seed_override: Option<u64>,
    oracle_mode: bool,
) -> Result<CommandOutput, String> {
    match cfg.kind {
        Kind::Jsr => commands::cmd_jsr(cfg.jsr.as_ref().expect("validated"), seed_override, oracle_mode),
        Kind::Markov => commands::cmd_markov(cfg.markov.as_ref().expect("validated"), seed_override),
        Kind::Rotation => commands::cmd_rotation(cfg.rotation.as_ref().expect("validated")),
        Kind::Ode => commands::cmd_ode(cfg.ode.as_ref().expect("validated")),
    }
}

fn write_outputs(
    report: &RunReport,
    csv: Option<&str>,
    cfg: &ProblemConfig,
    dir: &Path,
) -> Result<(), String> {
    let rendered = report::render(report);
    match &cfg.out.report {
        Some(name) => {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
            }
            std::fs::write(&path, rendered)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        None => print!("{rendered}"),
    }
    if let (Some(name), Some(csv)) = (&cfg.out.trace_csv, csv) {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
        std::fs::write(&path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

/// The bundled demonstration configs, compiled in so `reproduce` works from
/// any directory.
const BUNDLED: &[(&str, &str)] = &[
    (
        "bracket_shear_pair",
        include_str!("../configs/bracket_shear_pair.json"),
    ),
    (
        "finiteness_gap_golden",
        include_str!("../configs/finiteness_gap_golden.json"),
    ),
    (
        "periodic_decay_golden",
        include_str!("../configs/periodic_decay_golden.json"),
    ),
    (
        "quasi_contraction_demo",
        include_str!("../configs/quasi_contraction_demo.json"),
    ),
];

fn reproduce(out: Option<PathBuf>, threads: Option<usize>) -> Result<bool, String> {
    let dir = out
        .or_else(|| std::env::var_os("JSRBOUND_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("reproduce_out"));
    std::fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let threads = threads_cap(threads)?;
    let mut flagged = false;
    for (name, text) in BUNDLED {
        let started = Instant::now();
        let cfg: ProblemConfig =
            serde_json::from_str(text).map_err(|e| format!("bundled config {name}: {e}"))?;
        config::validate(&cfg)?;
        let output = dispatch(&cfg, None, false)?;
        flagged |= !output.numeric_flags.is_empty();
        let report = RunReport {
            version: config::CONFIG_VERSION,
            kind: cfg.kind.name().to_string(),
            config_sha256: report::config_hash(text.as_bytes()),
            seed: output.seed,
            threads,
            oracle_mode: false,
            results: output.results,
            notes: output.notes,
            numeric_flags: output.numeric_flags,
            timing: Timing {
                wall_ms: started.elapsed().as_millis(),
            },
        };
        let report_path = dir.join(format!("{name}.report.json"));
        std::fs::write(&report_path, report::render(&report))
            .map_err(|e| format!("cannot write {}: {e}", report_path.display()))?;
        if let Some(csv) = output.csv {
            let csv_path = dir.join(format!("{name}.csv"));
            std::fs::write(&csv_path, csv)
                .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
        }
        println!("wrote {}", report_path.display());
    }
    Ok(flagged)
}
