//! Driver for the insync observer: circle-flight simulation, flight-log
//! replay and a fast invariant suite, with CSV traces and JSON summaries.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use insync::observer::{Gains, ObserverError, Preset};
use nalgebra::Matrix2;

pub mod check;
pub mod run;
pub mod trace;

pub use check::{run_check, CheckOutcome, CheckReport};
pub use run::{replay, simulate, Run, RunSummary};

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("{failed} check(s) failed")]
    CheckFailed { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<insync::ingest::IngestError> for CliError {
    fn from(e: insync::ingest::IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<insync::sim::SimError> for CliError {
    fn from(e: insync::sim::SimError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<insync::model::ModelError> for CliError {
    fn from(e: insync::model::ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ObserverError> for CliError {
    fn from(e: ObserverError) -> Self {
        match e {
            ObserverError::InvalidGains(_) | ObserverError::UnknownPreset(_) | ObserverError::InvalidStep(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Replay,
    Check,
}

/// Where the observer starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCondition {
    /// The mode's default: the extreme start for simulation, the zero start
    /// for replay.
    #[default]
    Default,
    /// Attitude off by 0.99π, large velocity and position errors.
    Extreme,
    /// X̂ = I, Z = I.
    Zero,
}

impl FromStr for InitialCondition {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Ok(Self::Default),
            "extreme" => Ok(Self::Extreme),
            "zero" => Ok(Self::Zero),
            other => Err(CliError::Usage(format!("unknown initial condition '{other}' (extreme|zero)"))),
        }
    }
}

/// Gaussian measurement noise, one standard deviation per sensor. Zero
/// disables the sensor's noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseConfig {
    /// Applied to each GNSS position (m) and velocity (m/s) component.
    pub gnss: f64,
    /// Applied to each component of the unit magnetometer direction.
    pub mag: f64,
}

impl NoiseConfig {
    pub fn is_off(&self) -> bool {
        self.gnss == 0.0 && self.mag == 0.0
    }
}

impl FromStr for NoiseConfig {
    type Err = CliError;

    /// Parses `gnss=σ,mag=σ`; either key may be omitted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = NoiseConfig::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("noise entry '{item}' is not key=value")))?;
            let sigma = parse_number(value)?;
            if sigma < 0.0 {
                return Err(CliError::Usage(format!("noise sigma must be non-negative, got {sigma}")));
            }
            match key.trim() {
                "gnss" => out.gnss = sigma,
                "mag" => out.mag = sigma,
                other => return Err(CliError::Usage(format!("unknown noise key '{other}' (gnss|mag)"))),
            }
        }
        Ok(out)
    }
}

/// Gain preset selection. `Custom` means the gains came only from overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetChoice {
    Named(Preset),
    Custom,
}

impl fmt::Display for PresetChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetChoice::Named(p) => write!(f, "{p}"),
            PresetChoice::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for PresetChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("custom") {
            return Ok(PresetChoice::Custom);
        }
        s.parse::<Preset>()
            .map(PresetChoice::Named)
            .map_err(|_| CliError::Usage(format!("unknown preset '{s}' (p|pv|pm|pvm|custom)")))
    }
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("'{s}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("'{s}' is not finite")))
    }
}

/// Applies `k_p=..,k_c=..,k_v=..,k_d=..,k_m=..,kq=a,b` overrides to `base`.
/// `kq` takes the two diagonal entries of K_q.
pub fn parse_gains(spec: &str, base: Gains<f64>) -> Result<Gains<f64>, CliError> {
    let mut g = base;
    let mut tokens = spec.split(',').map(str::trim).filter(|t| !t.is_empty()).peekable();
    while let Some(tok) = tokens.next() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("gain entry '{tok}' is not key=value")))?;
        let v = parse_number(value)?;
        match key.trim().to_ascii_lowercase().as_str() {
            "k_p" | "kp" => g.k_p = v,
            "k_c" | "kc" => g.k_c = v,
            "k_v" | "kv" => g.k_v = v,
            "k_d" | "kd" => g.k_d = v,
            "k_m" | "km" => g.k_m = v,
            "kq" | "k_q" => {
                let second = tokens
                    .next_if(|t| !t.contains('='))
                    .ok_or_else(|| CliError::Usage("kq needs two values: kq=a,b".into()))?;
                g.k_q = Matrix2::new(v, 0.0, 0.0, parse_number(second)?);
            }
            other => return Err(CliError::Usage(format!("unknown gain '{other}'"))),
        }
    }
    g.validate()?;
    Ok(g)
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub preset: PresetChoice,
    pub gains: Gains<f64>,
    /// Simulation step, s.
    pub dt: f64,
    /// Simulated span, or the replayed prefix of the log, s.
    pub duration: f64,
    pub seed: u64,
    pub log_path: Option<PathBuf>,
    /// Output directory for `trace.csv` and `summary.json`.
    pub out_path: Option<PathBuf>,
    pub noise: NoiseConfig,
    pub init: InitialCondition,
    /// Simulation only: also write the synthetic sensor log here.
    pub export_log: Option<PathBuf>,
    /// Flip the sign of W_Γ in every correction. Mutation hook for the
    /// check suite.
    pub fault: bool,
}

impl RunConfig {
    /// Defaults for a mode: pvm gains, 50 Hz for 50 s in simulation; the
    /// experiment gains and the whole log in replay.
    pub fn new(mode: Mode) -> Self {
        let (preset, gains) = match mode {
            Mode::Replay => (PresetChoice::Custom, Gains::experiment()),
            _ => (PresetChoice::Named(Preset::Pvm), Gains::preset(Preset::Pvm)),
        };
        Self {
            mode,
            preset,
            gains,
            dt: 0.02,
            duration: if mode == Mode::Replay { f64::INFINITY } else { 50.0 },
            seed: 0,
            log_path: None,
            out_path: None,
            noise: NoiseConfig::default(),
            init: InitialCondition::Default,
            export_log: None,
            fault: false,
        }
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.preset = PresetChoice::Named(preset);
        self.gains = Gains::preset(preset);
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Usage(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration > 0.0) {
            return Err(CliError::Usage(format!("duration must be positive, got {}", self.duration)));
        }
        if self.mode == Mode::Replay && self.log_path.is_none() {
            return Err(CliError::Usage("replay needs --log".into()));
        }
        self.gains.validate()?;
        Ok(())
    }
}

/// Runs the configured mode and writes its outputs. Returns the text to
/// print on success.
pub fn execute(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Simulate | Mode::Replay => {
            let run = if cfg.mode == Mode::Simulate { simulate(cfg)? } else { replay(cfg)? };
            if let Some(dir) = &cfg.out_path {
                run.write(dir)?;
            }
            Ok(run.summary.headline())
        }
        Mode::Check => {
            let report = run_check(cfg);
            let text = report.render();
            if let Some(dir) = &cfg.out_path {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
                let path = dir.join("check.txt");
                std::fs::write(&path, &text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            }
            match report.failed() {
                0 => Ok(text),
                failed => {
                    print!("{text}");
                    Err(CliError::CheckFailed { failed })
                }
            }
        }
    }
}
