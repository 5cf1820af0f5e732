use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slipflow::harness::report::{ensure_writable, unix_now, RunMeta};
use slipflow::harness::{emit_outputs, run_experiment, RunConfig};
use slipflow::Result;

#[derive(Parser)]
#[command(name = "slipflow", version, about = "Navier-Stokes with Navier-slip walls: solver and verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Config file (`key = value` lines, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Corpus seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated viscosities.
    #[arg(long, global = true)]
    nu: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    /// Largest Fourier mode K.
    #[arg(long, global = true)]
    modes: Option<String>,
    #[arg(long, global = true)]
    tfinal: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Resolvent, kernel bound, contour and convolution audits.
    KernelCheck,
    /// Linear Stokes evolution with a manufactured solution.
    StokesRun,
    /// Navier-Stokes runs: shear consistency and Picard contraction.
    NsRun,
    /// Viscosity sweep of the velocity gap to the Euler reference.
    InviscidRate,
    /// Pointwise and wall bounds over the sweep, norm-inequality audits.
    BoundCheck,
    /// Cross-check against the method-of-lines solver.
    OracleCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::StokesRun => "stokes-run",
            Command::NsRun => "ns-run",
            Command::InviscidRate => "inviscid-rate",
            Command::BoundCheck => "bound-check",
            Command::OracleCheck => "oracle-check",
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let started = unix_now();
    let g = cli.global;
    let text = match &g.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse(&text)?;
    let mut overrides = Vec::new();
    let mut apply = |cfg: &mut RunConfig, key: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            cfg.set(key, &v)?;
            overrides.push(format!("{key} = {v}"));
        }
        Ok(())
    };
    apply(&mut cfg, "experiment", Some(cli.command.name().to_string()))?;
    apply(&mut cfg, "nu", g.nu)?;
    apply(&mut cfg, "beta", g.beta)?;
    apply(&mut cfg, "modes", g.modes)?;
    apply(&mut cfg, "t_final", g.tfinal)?;
    apply(&mut cfg, "seed", g.seed.map(|s| s.to_string()))?;
    apply(&mut cfg, "out", g.out.map(|p| p.display().to_string()))?;
    cfg.validate()?;
    ensure_writable(&cfg.out)?;

    let report = run_experiment(&cfg)?;
    for c in &report.checks {
        println!(
            "criterion {:>2} {} {}: {}",
            c.criterion,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let meta = RunMeta {
        config_text: text,
        overrides,
        started_unix: started,
    };
    let files = emit_outputs(std::slice::from_ref(&report), &cfg, &meta, &cfg.out)?;
    println!("wrote {} files to {}", files.len(), cfg.out.display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
