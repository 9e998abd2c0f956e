//! Fast invariant suite behind `insync check`. Every check is deterministic
//! for a given seed and the whole suite runs in a few seconds.

use std::fmt::Write;

use insync::analysis::{summarize, Summary};
use insync::ingest::{parse_log_reader, write_log};
use insync::lie::{conjugate, exp_se23, SE23Element, SIM23Element};
use insync::model::{propagate_truth, MeasurementBundle, WorldConstants};
use insync::observer::{error_state, full_correction, lyapunov, lyapunov_rate, observer_step, CorrectionPair, Gains, ObserverState, Preset};
use insync::random;
use insync::sim::{extreme_initial_state, CircleScenario, ClosedLoop, SmoothInputs};
use nalgebra::{Matrix2, Matrix3, Matrix3x2, Matrix5, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::run::export_bundle;
use crate::RunConfig;

/// One line of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }

    pub fn outcome(&self, name: &str) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let tag = if o.passed { "PASS" } else { "FAIL" };
            writeln!(s, "{tag} {}: {}", o.name, o.detail).expect("writing to a String cannot fail");
        }
        writeln!(s, "{} of {} checks passed", self.outcomes.len() - self.failed(), self.outcomes.len())
            .expect("writing to a String cannot fail");
        s
    }
}

fn hook(fault: bool) -> impl Fn(CorrectionPair<f64>) -> CorrectionPair<f64> {
    move |c| {
        if fault {
            let mut g = c.gamma;
            g.wblock = -g.wblock;
            CorrectionPair::new(c.delta, g)
        } else {
            c
        }
    }
}

fn check_conjugation(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut block = 0.0f64;
    let mut closed = 0.0f64;
    for _ in 0..200 {
        let z: SIM23Element<f64> = random::sim23(rng, 10.0, 1.0);
        let x: SE23Element<f64> = random::se23(rng, 10.0);
        let zm = z.to_matrix();
        let dense = zm * x.to_matrix() * zm.try_inverse().unwrap_or_else(Matrix5::zeros);
        let a: Matrix2<f64> = dense.fixed_view::<2, 2>(3, 3).into_owned();
        block = block.max((a - Matrix2::identity()).abs().max());
        let ours = conjugate(&z, &x).map(|c| c.to_matrix()).unwrap_or_else(|_| Matrix5::from_element(f64::NAN));
        closed = closed.max((ours - dense).view((0, 0), (3, 5)).abs().max());
    }
    CheckOutcome::new(
        "conjugation",
        block < 1e-12 && closed < 1e-10,
        format!("scaling block deviation {block:.3e}, closed form deviation {closed:.3e}"),
    )
}

fn check_exponential(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let xi = random::se23_tangent::<f64, _>(rng, 5.0);
        worst = worst.max((exp_se23(&xi).to_matrix() - xi.to_matrix().exp()).abs().max());
    }
    CheckOutcome::new("exponential", worst < 1e-10, format!("max deviation from Pade {worst:.3e}"))
}

fn dense_cost(e: &Matrix5<f64>) -> f64 {
    let r: Matrix3<f64> = e.fixed_view::<3, 3>(0, 0).into_owned();
    let v: Matrix3x2<f64> = e.fixed_view::<3, 2>(0, 3).into_owned();
    3.0 - r.trace() + v.norm_squared()
}

fn check_rates(rng: &mut ChaCha8Rng, fault: bool) -> CheckOutcome {
    let world = WorldConstants::<f64>::ned();
    let gains = Gains::preset(Preset::Pvm);
    let hook = hook(fault);
    let h = 1e-6;
    let (mut mismatch, mut max_rate) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..25 {
        let x: SE23Element<f64> = random::se23(rng, 3.0);
        let state = ObserverState::new(random::se23(rng, 3.0), random::sim23(rng, 3.0, 0.7));
        let c = match full_correction(&state, &MeasurementBundle::of_state(0.0, &x, &world), &gains, &world) {
            Ok(c) => hook(c),
            Err(_) => return CheckOutcome::new("lyapunov-rate", false, "correction failed".into()),
        };
        let Ok(ebar) = error_state(&x, &state) else {
            return CheckOutcome::new("lyapunov-rate", false, "singular auxiliary state".into());
        };
        let e = ebar.to_matrix();
        let gamma = c.gamma.to_matrix();
        let total = gamma + c.delta.to_matrix();
        let flow = |t: f64| dense_cost(&((gamma * t).exp() * e * (-total * t).exp()));
        let fd = (flow(h) - flow(-h)) / (2.0 * h);
        let rate = lyapunov_rate(&ebar, &c);
        mismatch = mismatch.max((fd - rate).abs() / rate.abs().max(1.0));
        max_rate = max_rate.max(rate);
    }
    CheckOutcome::new(
        "lyapunov-rate",
        mismatch < 1e-7 && max_rate <= 1e-9,
        format!("closed form vs finite difference {mismatch:.3e} (relative), largest rate {max_rate:.3e}"),
    )
}

fn check_synchrony(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let world = WorldConstants::<f64>::ned();
    let inputs = SmoothInputs::random(rng, 1.0, 5.0, &world.gravity);
    let mut x: SE23Element<f64> = random::se23(rng, 3.0);
    let mut state = ObserverState::new(random::se23(rng, 3.0), random::sim23(rng, 3.0, 0.7));
    let cost = |x: &SE23Element<f64>, s: &ObserverState<f64>| error_state(x, s).map(|e| lyapunov(&e)).unwrap_or(f64::NAN);
    let start = cost(&x, &state);
    let mut drift = 0.0f64;
    for k in 0..500 {
        let u = inputs.at(k as f64 * 0.02);
        x = propagate_truth(&x, &u, &world, 0.02);
        state = match observer_step(&state, &u, &CorrectionPair::zero(), &world, 0.02) {
            Ok(s) => s,
            Err(_) => return CheckOutcome::new("synchrony", false, "observer step failed".into()),
        };
        drift = drift.max((cost(&x, &state) - start).abs());
    }
    let limit = 1e-8 * start.max(1.0);
    CheckOutcome::new("synchrony", drift < limit, format!("cost drift without corrections {drift:.3e} (limit {limit:.1e})"))
}

fn circle_run(preset: Preset, fault: bool) -> Result<(Summary, Vec<insync::analysis::StepRecord<f64>>), String> {
    let world = WorldConstants::<f64>::ned();
    let gains = Gains::preset(preset);
    let data = CircleScenario::new(world, 0.02, 2500).generate();
    let events = data.events().map_err(|e| e.to_string())?;
    let hook = hook(fault);
    let records = ClosedLoop::new(gains, world)
        .with_hook(&hook)
        .run(&events, extreme_initial_state(), Some(&data.truth))
        .map_err(|e| e.to_string())?;
    Ok((summarize(&records, &gains, &world.mag_direction()), records))
}

fn check_closed_loop(fault: bool, out: &mut Vec<CheckOutcome>) {
    for preset in Preset::ALL {
        let (summary, records) = match circle_run(preset, fault) {
            Ok(r) => r,
            Err(e) => {
                out.push(CheckOutcome::new(format!("monotonicity[{preset}]"), false, e));
                continue;
            }
        };
        let inc = summary.max_lyapunov_increase.unwrap_or(f64::NAN);
        out.push(CheckOutcome::new(
            format!("monotonicity[{preset}]"),
            inc <= 1e-6,
            format!("max single-step cost increase {inc:.3e} (limit 1e-6)"),
        ));
        if preset != Preset::Pvm {
            continue;
        }
        let m = summary.terminal;
        let converged = m.is_some_and(|m| m.attitude_angle < 0.05 && m.position_error < 0.1 && m.velocity_error < 0.1);
        out.push(CheckOutcome::new(
            "convergence[pvm]",
            converged,
            m.map_or("no terminal metrics".into(), |m| {
                format!(
                    "final attitude {:.3e} rad, velocity {:.3e} m/s, position {:.3e} m",
                    m.attitude_angle, m.velocity_error, m.position_error
                )
            }),
        ));
        let (lo, hi) = records.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            let a = r.auxiliary.ablock;
            let eig = SymmetricEigen::new(a * a.transpose()).eigenvalues;
            (lo.min(eig.min()), hi.max(eig.max()))
        });
        out.push(CheckOutcome::new(
            "riccati-bounds[pvm]",
            lo >= 1e-3 && hi <= 1e3,
            format!("eigenvalues of A_Z A_Z^T within [{lo:.3e}, {hi:.3e}]"),
        ));
        let pass = summary.pe.pass_fraction.unwrap_or(0.0);
        out.push(CheckOutcome::new(
            "excitation[pvm]",
            pass == 1.0,
            format!("PE pass fraction {pass:.3} over {} windows", summary.pe.windows),
        ));
    }
}

fn check_log_round_trip() -> CheckOutcome {
    let data = CircleScenario::new(WorldConstants::<f64>::ned(), 0.02, 100).generate();
    let bundle = export_bundle(&data);
    let mut buf = Vec::new();
    let same = write_log(&bundle, &mut buf).is_ok() && parse_log_reader(buf.as_slice()).ok().as_ref() == Some(&bundle);
    CheckOutcome::new("log-round-trip", same, format!("{} bytes written and parsed back", buf.len()))
}

/// Runs the suite. `cfg.seed` drives the random states; `cfg.fault` flips
/// the sign of W_Γ in every correction.
pub fn run_check(cfg: &RunConfig) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut outcomes = vec![
        check_conjugation(&mut rng),
        check_exponential(&mut rng),
        check_rates(&mut rng, cfg.fault),
        check_synchrony(&mut rng),
    ];
    check_closed_loop(cfg.fault, &mut outcomes);
    outcomes.push(check_log_round_trip());
    CheckReport { outcomes }
}
