use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use insync_cli::{execute, parse_gains, CliError, InitialCondition, Mode, NoiseConfig, PresetChoice, RunConfig};
use insync::observer::Gains;

#[derive(Parser)]
#[command(name = "insync", version, about = "Synchronous GNSS/INS observer: simulate, replay, check")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the circle flight and run the observer on it.
    Simulate(Common),
    /// Replay a CSV sensor log through the observer.
    Replay(Common),
    /// Run the fast invariant suite.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Gain preset: p, pv, pm, pvm or custom.
    #[arg(long)]
    preset: Option<String>,
    /// Gain overrides, e.g. k_p=10,k_c=0.1,kq=10,2.
    #[arg(long, allow_hyphen_values = true)]
    gains: Option<String>,
    /// Simulation step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated span, or replayed prefix of the log, in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Sensor log to replay.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measurement noise, e.g. gnss=0.5,mag=0.01.
    #[arg(long)]
    noise: Option<String>,
    /// Initial condition: extreme or zero.
    #[arg(long)]
    init: Option<String>,
    /// Also write the simulated sensor log to this file.
    #[arg(long)]
    export_log: Option<PathBuf>,
    /// Flip the sign of W_Γ (mutation test hook).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn config(mode: Mode, a: Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(mode);
    if let Some(p) = &a.preset {
        cfg.preset = p.parse()?;
        if let PresetChoice::Named(p) = cfg.preset {
            cfg.gains = Gains::preset(p);
        }
    }
    if let Some(spec) = &a.gains {
        cfg.gains = parse_gains(spec, cfg.gains)?;
        if a.preset.is_none() {
            cfg.preset = PresetChoice::Custom;
        }
    }
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    if let Some(n) = &a.noise {
        cfg.noise = n.parse::<NoiseConfig>()?;
    }
    if let Some(i) = &a.init {
        cfg.init = i.parse::<InitialCondition>()?;
    }
    cfg.seed = a.seed;
    cfg.log_path = a.log;
    cfg.out_path = a.out;
    cfg.export_log = a.export_log;
    cfg.fault = a.inject_fault;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Replay(a) => (Mode::Replay, a),
        Command::Check(a) => (Mode::Check, a),
    };
    match config(mode, args).and_then(|cfg| execute(&cfg)) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("insync: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
