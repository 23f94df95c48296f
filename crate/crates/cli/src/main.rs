//! `atma`: reproducible ATMA experiments. Each subcommand reads a flat
//! config file and writes a CSV table plus a JSON sidecar.

mod config;
mod experiments;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::experiments::{CliError, EXPERIMENTS};

#[derive(Parser)]
#[command(name = "atma", version, about = "Aliased time-modulated array experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the experiment named by the config's `experiment` key.
    Run(Common),
    /// Reference allocations: rates, switch frequency, ACLR, ripple, EVM.
    Table2(Common),
    /// ACLR over an (N, A) grid with the 45 dB contour.
    Fig9Heatmap(Common),
    /// Measured (or analytic) transmit spectra.
    Spectrum(Common),
    /// Lower, upper and worst-side ACLR per configuration.
    AclrSweep(Common),
    /// Passband ripple per configuration.
    RippleSweep(Common),
    /// Analytic EVM after precoder and rotation compensation.
    EvmSweep(Common),
    /// Normalized capacity against SNR.
    CapacitySweep(Common),
    /// Array factor against angle for each delay and harmonic.
    Beampattern(Common),
    /// Per-block gains from the sample-level link.
    LinkSim(Common),
    /// DFT of the sampled switch waveform against the closed form.
    OracleCheck(Common),
    /// Writes the transmit samples in the binary I/Q format.
    ExportWaveform(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// RNG seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn parts(&self) -> (Option<&'static str>, &Common) {
        match self {
            Command::Run(c) => (None, c),
            Command::Table2(c) => (Some("table2"), c),
            Command::Fig9Heatmap(c) => (Some("fig9-heatmap"), c),
            Command::Spectrum(c) => (Some("spectrum"), c),
            Command::AclrSweep(c) => (Some("aclr-sweep"), c),
            Command::RippleSweep(c) => (Some("ripple-sweep"), c),
            Command::EvmSweep(c) => (Some("evm-sweep"), c),
            Command::CapacitySweep(c) => (Some("capacity-sweep"), c),
            Command::Beampattern(c) => (Some("beampattern"), c),
            Command::LinkSim(c) => (Some("link-sim"), c),
            Command::OracleCheck(c) => (Some("oracle-check"), c),
            Command::ExportWaveform(c) => (Some("export-waveform"), c),
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let (fixed, args) = cli.command.parts();
    if let Some(jobs) = args.jobs {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let text = fs::read_to_string(&args.config)?;
    let cfg = Config::parse(&text)?;
    let declared: Option<String> = cfg.optional("experiment")?;
    let name = match (fixed, declared.as_deref()) {
        (Some(f), Some(d)) if f != d => {
            return Err(cfg.error("experiment", format!("config is for `{d}`, not `{f}`")).into())
        }
        (Some(f), _) => f.to_string(),
        (None, Some(d)) if EXPERIMENTS.contains(&d) => d.to_string(),
        (None, Some(d)) => return Err(cfg.error("experiment", format!("unknown experiment `{d}`")).into()),
        (None, None) => return Err(cfg.error("experiment", "missing; `run` needs it").into()),
    };
    let seed = match args.seed {
        Some(s) => s,
        None => cfg.scalar("seed", 0)?,
    };
    let out = experiments::run(&name, &cfg, seed)?;

    let mut extra = Vec::new();
    for (suffix, table) in &out.tables {
        let path = args.out.join(format!("{name}_{suffix}.csv"));
        fs::create_dir_all(&args.out)?;
        fs::write(&path, table.to_csv())?;
        extra.push(path);
    }
    for (ext, bytes) in &out.blobs {
        let path = args.out.join(format!("{name}.{ext}"));
        fs::create_dir_all(&args.out)?;
        fs::write(&path, bytes)?;
        extra.push(path);
    }
    let mut canonical = cfg.canonical();
    canonical.push_str(&format!("#seed={seed}\n"));
    let csv = output::write_outputs(&args.out, &name, &name, &out.table, &out.checks, &canonical, &extra)?;

    println!("wrote {}", csv.display());
    println!("wrote {}", args.out.join(format!("{name}.json")).display());
    for p in &extra {
        println!("wrote {}", p.display());
    }
    if out.table.notes() > 0 {
        println!("{} row(s) annotated; see the `note` column", out.table.notes());
    }
    for c in &out.checks {
        println!("{}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(out.checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
