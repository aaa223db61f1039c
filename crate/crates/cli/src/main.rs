use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrvqe_core::sweep::{self, CommandOutcome, RunContext, SqueezeProtocol};
use lrvqe_core::{Error, SweepConfig};

/// Reproduction harness for VQE on the long-range transverse-field XY chain.
#[derive(Debug, Parser)]
#[command(name = "lrvqe", version)]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores), overriding configuration and environment.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Main output file, overriding configuration and environment.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reuse cells from a matching `<out>.ckpt`.
    #[arg(long, global = true)]
    resume: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Half-chain entropy of exact ground states over the grid.
    EdSweep,
    /// All restarts of each circuit at a single model point, as JSON.
    VqeRun,
    /// Restart aggregates over the grid plus a per-circuit summary.
    VqeSweep,
    /// Fewest layers reaching the target fidelity for each (N, k).
    Scaling,
    /// Spin squeezing from ground states, quenches or trained circuits.
    Squeeze {
        #[arg(value_parser = parse_protocol)]
        protocol: SqueezeProtocol,
    },
    /// Two-qubit gate and parameter counts of a circuit.
    GateCount {
        /// Layer distances in application order, e.g. 332211.
        spec: String,
        #[arg(long, short = 'n', default_value_t = 10)]
        n_qubits: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

fn parse_protocol(s: &str) -> Result<SqueezeProtocol, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Parse(_) | Error::InvalidCircuit(_) | Error::InvalidModel { .. } => Failure::Config(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<SweepConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => SweepConfig::load(path)?,
        None => {
            let mut cfg = SweepConfig::default();
            cfg.apply_env(|k| std::env::var(k).ok())?;
            cfg
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<CommandOutcome, Failure> {
    if let Command::GateCount { spec, n_qubits, gamma } = &cli.command {
        let (rq, l) = sweep::gate_count(spec, *n_qubits, *gamma)?;
        println!("R_Q={rq} L={l}");
        return Ok(CommandOutcome::default());
    }
    let cfg = load_config(cli)?;
    let ctx = |name: &str| RunContext::new(&cfg, name, cli.resume);
    let outcome = match &cli.command {
        Command::EdSweep => sweep::cmd_ed_sweep(&cfg, &ctx("ed_sweep.csv"))?,
        Command::VqeRun => sweep::cmd_vqe_run(&cfg, &ctx("vqe_run.json"))?,
        Command::VqeSweep => sweep::cmd_vqe_sweep(&cfg, &ctx("vqe_sweep.csv"))?,
        Command::Scaling => sweep::cmd_scaling(&cfg, &ctx("scaling.csv"))?,
        Command::Squeeze { protocol } => {
            let name = match protocol {
                SqueezeProtocol::Ground => "squeeze_ground.csv",
                SqueezeProtocol::Quench => "squeeze_quench.csv",
                SqueezeProtocol::Vqa => "squeeze_vqa.csv",
            };
            sweep::cmd_squeeze(&cfg, &ctx(name), *protocol)?
        }
        Command::GateCount { .. } => unreachable!("handled above"),
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.failed_cells > 0 {
                eprintln!("{} cells failed; see the error column", outcome.failed_cells);
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
