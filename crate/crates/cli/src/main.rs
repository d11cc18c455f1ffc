mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::Output;
use config::*;

/// Two-sender spin-chain communication lines: dynamics, receiver states,
/// creatable regions, channel optimization and gates.
#[derive(Parser)]
#[command(name = "spinline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON config file or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

macro_rules! commands {
    ($($variant:ident($args:ty) = $name:literal, $run:path, $doc:literal;)*) => {
        #[derive(Subcommand)]
        enum Command {
            $(
                #[doc = $doc]
                #[command(name = $name, allow_negative_numbers = true)]
                $variant {
                    #[command(flatten)]
                    global: Global,
                    #[command(flatten)]
                    args: $args,
                },
            )*
        }

        fn dispatch(command: Command) -> Result<()> {
            match command {
                $(Command::$variant { global, args } => execute::<$args>($name, &global, &args, $run),)*
            }
        }
    };
}

commands! {
    Presets(NoArgs) = "presets", run_presets, "List the named parameter sets.";
    Evolve(EvolveArgs) = "evolve", commands::evolve_cmd, "Site occupations over a time grid.";
    Receiver(ReceiverArgs) = "receiver", commands::receiver_cmd, "Receiver state for one initial state.";
    Region(RegionArgs) = "region", commands::region_cmd, "Creatable-region sweep of one scenario.";
    Overlap(OverlapArgs) = "overlap", commands::overlap_cmd, "Overlap of the IS10 and IS01 regions.";
    Transfer(TransferArgs) = "transfer", commands::transfer_cmd, "Peak excitation transfer between two sites.";
    OptimizeBoundary(OptimizeBoundaryArgs) = "optimize-boundary", commands::optimize_boundary_cmd, "Boundary couplings of one channel.";
    OptimizeLink(OptimizeLinkArgs) = "optimize-link", commands::optimize_link_cmd, "Central couplings of a symmetric line.";
    SeparationScan(SeparationArgs) = "separation-scan", commands::separation_cmd, "Region metrics over delta3 and t.";
    Gate1(Gate1Args) = "gate1", commands::gate1_cmd, "Eigenvector-switching gate along a lambda grid.";
    Gate2(Gate2Args) = "gate2", commands::gate2_cmd, "Random solutions of the parameter-exchange gate.";
}

fn run_presets(_: &RunConfig<NoArgs>) -> Result<Output> {
    commands::presets()
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn execute<T: Block>(
    name: &'static str,
    global: &Global,
    flags: &T,
    run: fn(&RunConfig<T>) -> Result<Output>,
) -> Result<()> {
    let rc = resolve(name, global.config.as_deref(), &global.common, flags)?;
    if let Some(n) = rc.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("--threads: {e}")))?;
    }
    let output = run(&rc)?;

    let Some(out) = rc.common.out.clone() else {
        std::io::stdout().write_all(&output.main)?;
        for (suffix, bytes) in &output.extras {
            eprintln!("--- {suffix} (pass --out to write it to a file)");
            std::io::stderr().write_all(bytes)?;
        }
        return Ok(());
    };
    let config = rc.to_value();
    let canonical = serde_json::to_vec(&config)?;
    let hash: String = Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect();
    let mut files = vec![(out.clone(), output.main)];
    files.extend(output.extras.into_iter().map(|(s, b)| (with_suffix(&out, &s), b)));
    let manifest = json!({
        "manifest_version": 1,
        "spinline_version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": config,
        "config_hash": hash,
        "seed": rc.seed(),
        "outputs": files.iter().map(|(p, _)| p.display().to_string()).collect::<Vec<_>>(),
    });
    let mut m = serde_json::to_vec_pretty(&manifest)?;
    m.push(b'\n');
    files.push((with_suffix(&out, "manifest.json"), m));
    for (path, bytes) in files {
        std::fs::write(&path, bytes).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
    }
    Ok(())
}

fn is_usage(e: &anyhow::Error) -> bool {
    use spinline::Error as E;
    if e.downcast_ref::<Usage>().is_some() {
        return true;
    }
    matches!(
        e.downcast_ref::<E>(),
        Some(
            E::InvalidSize(_)
                | E::PairIndex { .. }
                | E::Site { .. }
                | E::Topology(_)
                | E::Domain { .. }
                | E::EmptyWindow { .. }
                | E::Grid(_)
                | E::Raster(_)
        )
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
