use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use snan_core::astrocyte::{build_sic_table, SicSearchRanges};
use snan_core::experiments::{emit_outputs, run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use snan_core::Error;

#[derive(Parser)]
#[command(name = "snan", version, about = "Spiking neuronal-astrocytic network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One astrocyte synchronizing a feedforward layer.
    Sync(RunArgs),
    /// Two astrocytes forming separate synchronous groups.
    GroupSync(RunArgs),
    /// Single-shot pattern memory with astrocyte-gated depression.
    Memory(RunArgs),
    /// Order-to-chaos detection on an Ising-driven input layer.
    Chaos(RunArgs),
    /// Build the SIC parameter table and write it as CSV.
    SicTable(TableArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; the shipped default is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ablate_astrocyte: bool,
    /// Recorded drive (`step,unit_id`) replacing the Ising stream.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Values as `a,b,c`, `lo:hi[:step]` or `2^lo:hi`.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    decays: Option<String>,
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    dt_ms: f64,
    /// Output CSV path.
    #[arg(long, default_value = "sic_table.csv")]
    out: PathBuf,
}

/// Parse a value list: `1,2,4`, an inclusive range `lo:hi[:step]`, or powers
/// of two `2^lo:hi`.
fn parse_values(spec: &str) -> Result<Vec<i32>, Error> {
    let bad = || Error::Config(format!("cannot parse value list {spec:?}"));
    let num = |s: &str| s.trim().parse::<i32>().map_err(|_| bad());
    let values = if let Some(rest) = spec.strip_prefix("2^") {
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        let (lo, hi) = (num(lo)?, num(hi)?);
        if !(0..=30).contains(&lo) || !(lo..=30).contains(&hi) {
            return Err(bad());
        }
        (lo..=hi).map(|k| 1 << k).collect()
    } else if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(bad()),
        };
        if step <= 0 || hi < lo {
            return Err(bad());
        }
        (lo..=hi).step_by(step as usize).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var("SNAN_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("SNAN_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::shipped(kind),
    };
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "config describes experiment {}, not {}",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.ablate_astrocyte {
        cfg.ablate_astrocyte = true;
    }
    if args.replay.is_some() && kind != ExperimentKind::Chaos {
        return Err(Error::Config("--replay applies to the chaos experiment only".into()));
    }
    let out_dir = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(kind.name()));
    let opts = RunOptions {
        threads: threads_from_env()?,
        replay: args.replay,
    };
    let output = run_experiment(&cfg, &opts)?;
    emit_outputs(&output, &out_dir)?;
    print!("{}", output.report.to_json());
    Ok(())
}

fn sic_table(args: TableArgs) -> Result<(), Error> {
    let defaults = SicSearchRanges::default();
    let pick = |s: &Option<String>, d: Vec<i32>| s.as_deref().map(parse_values).unwrap_or(Ok(d));
    let ranges = SicSearchRanges {
        weights: pick(&args.weights, defaults.weights)?,
        decays: pick(&args.decays, defaults.decays)?,
        thresholds: pick(&args.thresholds, defaults.thresholds)?,
        dt_ms: args.dt_ms,
    };
    let table = build_sic_table(&ranges, threads_from_env()?)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    table.write_csv(&args.out)?;
    println!("{}", json!({"rows": table.len(), "out": args.out}));
    Ok(())
}

fn fail(error: String, kind: &str) -> ExitCode {
    println!("{}", json!({"error": error, "kind": kind}));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(e.to_string().trim().to_string(), "usage"),
    };
    let result = match cli.command {
        Command::Sync(a) => run(ExperimentKind::Sync, a),
        Command::GroupSync(a) => run(ExperimentKind::GroupSync, a),
        Command::Memory(a) => run(ExperimentKind::Memory, a),
        Command::Chaos(a) => run(ExperimentKind::Chaos, a),
        Command::SicTable(a) => sic_table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.to_string(), e.kind()),
    }
}
