//! Simulation and replay runs.

use std::fs;
use std::path::Path;

use insync::analysis::{summarize, trace_pe_margins, StepRecord, Summary};
use insync::ingest::{ned_to_lla, parse_log, write_log, GnssRecord, LlaFix, LogBundle};
use insync::lie::{SIM23Tangent, Vec3};
use insync::model::{FusedEvent, WorldConstants};
use insync::observer::{CorrectionPair, Gains, ObserverState};
use insync::sim::{extreme_initial_state, zero_initial_state, CircleScenario, ClosedLoop, ScenarioData};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::{trace, CliError, InitialCondition, Mode, RunConfig};

/// Gains as written to the summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    pub k_p: f64,
    pub k_c: f64,
    pub k_v: f64,
    pub k_d: f64,
    pub k_m: f64,
    pub k_q: [[f64; 2]; 2],
}

impl From<&Gains<f64>> for GainReport {
    fn from(g: &Gains<f64>) -> Self {
        Self {
            k_p: g.k_p,
            k_c: g.k_c,
            k_v: g.k_v,
            k_d: g.k_d,
            k_m: g.k_m,
            k_q: [[g.k_q[(0, 0)], g.k_q[(0, 1)]], [g.k_q[(1, 0)], g.k_q[(1, 1)]]],
        }
    }
}

/// Summary JSON of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: &'static str,
    pub preset: String,
    pub gains: GainReport,
    pub seed: u64,
    pub noise_gnss: f64,
    pub noise_mag: f64,
    /// Decay rate of |V_Ē|, the negated fitted slope of log|V_Ē|.
    pub vbar_decay_rate: Option<f64>,
    /// Share of the run without position fixes, e.g. "100%".
    pub unobservable_segment: String,
    #[serde(flatten)]
    pub stats: Summary,
}

impl RunSummary {
    /// One-line human summary.
    pub fn headline(&self) -> String {
        let mut s = format!("{} {}: {} steps over {:.3} s", self.mode, self.preset, self.stats.steps, self.stats.duration);
        if let Some(m) = &self.stats.terminal {
            s += &format!(
                "; final attitude {:.3e} rad, velocity {:.3e} m/s, position {:.3e} m",
                m.attitude_angle, m.velocity_error, m.position_error
            );
        }
        if let Some(inc) = self.stats.max_lyapunov_increase {
            s += &format!("; max cost increase {inc:.3e}");
        }
        s += &format!("; unobservable segment: {}\n", self.unobservable_segment);
        s
    }
}

/// Result of a simulation or replay.
#[derive(Debug, Clone)]
pub struct Run {
    pub records: Vec<StepRecord<f64>>,
    pub summary: RunSummary,
    pub pe_margins: Vec<Option<f64>>,
}

impl Run {
    pub fn trace_csv(&self) -> String {
        trace::render(&self.records, &self.pe_margins)
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `trace.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Data(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let trace = dir.join("trace.csv");
        fs::write(&trace, self.trace_csv()).map_err(|e| io(&trace, e))?;
        let summary = dir.join("summary.json");
        fs::write(&summary, self.summary_json()).map_err(|e| io(&summary, e))?;
        Ok(())
    }
}

fn flip_translation_gamma(c: CorrectionPair<f64>) -> CorrectionPair<f64> {
    CorrectionPair::new(c.delta, SIM23Tangent::new(c.gamma.omega, -c.gamma.wblock, c.gamma.sblock))
}

fn initial_state(cfg: &RunConfig) -> ObserverState<f64> {
    match (cfg.init, cfg.mode) {
        (InitialCondition::Extreme, _) => extreme_initial_state(),
        (InitialCondition::Zero, _) | (InitialCondition::Default, Mode::Replay) => zero_initial_state(),
        (InitialCondition::Default, _) => extreme_initial_state(),
    }
}

fn close_loop(
    cfg: &RunConfig,
    world: WorldConstants<f64>,
    events: &[FusedEvent<f64>],
    truth: Option<&[insync::lie::SE23Element<f64>]>,
) -> Result<Run, CliError> {
    let hook = flip_translation_gamma;
    let mut lp = ClosedLoop::new(cfg.gains, world);
    if cfg.fault {
        lp = lp.with_hook(&hook);
    }
    let records = lp.run(events, initial_state(cfg), truth)?;
    let mag_dir = world.mag_direction();
    let stats = summarize(&records, &cfg.gains, &mag_dir);
    let pe_margins = trace_pe_margins(&records, &cfg.gains, &mag_dir);
    let summary = RunSummary {
        mode: if cfg.mode == Mode::Replay { "replay" } else { "simulate" },
        preset: cfg.preset.to_string(),
        gains: GainReport::from(&cfg.gains),
        seed: cfg.seed,
        noise_gnss: cfg.noise.gnss,
        noise_mag: cfg.noise.mag,
        vbar_decay_rate: stats.vbar_decay.map(|f| -f.slope),
        unobservable_segment: format!("{:.0}%", stats.unobservable_fraction * 100.0),
        stats,
    };
    Ok(Run { records, summary, pe_margins })
}

/// Adds seeded Gaussian noise to the GNSS and magnetometer streams.
pub fn add_noise(data: &mut ScenarioData<f64>, gnss: f64, mag: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: &mut Vec3<f64>, sigma: f64| {
        if sigma > 0.0 {
            let n = Normal::new(0.0, sigma).expect("sigma is finite and positive");
            v.iter_mut().for_each(|x| *x += n.sample(&mut rng));
        }
    };
    for g in &mut data.gnss {
        jitter(&mut g.position, gnss);
        if let Some(v) = g.velocity.as_mut() {
            jitter(v, gnss);
        }
    }
    for m in &mut data.mag {
        jitter(&mut m.field, mag);
    }
}

/// The NED origin used for exported logs.
pub fn export_origin() -> LlaFix {
    LlaFix {
        latitude: 0.0,
        longitude: 0.0,
        altitude: 0.0,
        stamp: 0.0,
    }
}

/// Sensor log of a simulated flight, with the origin and reference field
/// rows that let a replay rebuild the simulator's frame.
pub fn export_bundle(data: &ScenarioData<f64>) -> LogBundle {
    let origin = export_origin();
    LogBundle {
        imu: data.imu.clone(),
        gnss: data
            .gnss
            .iter()
            .map(|g| GnssRecord {
                fix: ned_to_lla(&origin, &g.position, g.stamp),
                velocity: g.velocity,
            })
            .collect(),
        mag: data.mag.clone(),
        mag_reference: Some(data.world.mag_reference),
        origin: Some(origin),
        epoch: 0.0,
    }
}

/// Simulates the circle flight and runs the observer on it.
pub fn simulate(cfg: &RunConfig) -> Result<Run, CliError> {
    cfg.validate()?;
    let steps = CircleScenario::<f64>::steps_for(cfg.duration, cfg.dt).map_err(|e| CliError::Usage(e.to_string()))?;
    let world = WorldConstants::ned();
    let mut data = CircleScenario::new(world, cfg.dt, steps).generate();
    if !cfg.noise.is_off() {
        add_noise(&mut data, cfg.noise.gnss, cfg.noise.mag, cfg.seed);
    }
    if let Some(path) = &cfg.export_log {
        let file = fs::File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        write_log(&export_bundle(&data), std::io::BufWriter::new(file))
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    let events = data.events()?;
    close_loop(cfg, world, &events, Some(&data.truth))
}

/// Replays a sensor log through the observer.
pub fn replay(cfg: &RunConfig) -> Result<Run, CliError> {
    cfg.validate()?;
    let path = cfg.log_path.as_ref().ok_or_else(|| CliError::Usage("replay needs --log".into()))?;
    let bundle = parse_log(path)?;
    let world = bundle.world()?;
    let mut events = bundle.events()?;
    events.retain(|e| e.stamp <= cfg.duration);
    if events.is_empty() {
        return Err(CliError::Data("no events inside the requested duration".into()));
    }
    close_loop(cfg, world, &events, None)
}
