//! Closed-loop runs: the circular reference flight and the event-driven
//! observer loop shared by simulation and log replay.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::Rng;

use crate::analysis::StepRecord;
use crate::lie::{exp_so3, Rot3, SE23Element, SIM23Element, Vec3};
use crate::model::{
    measure_magnetometer, measure_position, measure_velocity, nav_to_group, propagate_truth, zoh_fuse,
    CircleTrajectory, FusedEvent, GnssSample, ImuInput, ImuSample, MagSample, ModelError, WorldConstants,
};
use crate::observer::{error_state, full_correction, observer_step, CorrectionPair, Gains, ObserverError, ObserverState};
use crate::Real;

/// Failures of a closed-loop run.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("truth series has {truth} samples but there are {events} events")]
    TruthLength { truth: usize, events: usize },
    #[error("event stamps must increase (step {index} has dt = {dt})")]
    NonIncreasing { index: usize, dt: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Observer start used by the simulation study: attitude off by 0.99π about
/// north, v̂ = (2, 27, 2), p̂ = (70, 20, 20), R_Z = I, A_Z = diag(2, 10) and
/// V_Z = V̂A_Z.
pub fn extreme_initial_state<T: Real>() -> ObserverState<T> {
    let estimate = SE23Element::from_parts(
        exp_so3(&(Vec3::x() * T::lit(0.99 * PI))),
        Vec3::new(T::lit(2.0), T::lit(27.0), T::lit(2.0)),
        Vec3::new(T::lit(70.0), T::lit(20.0), T::lit(20.0)),
    );
    anchored_state(estimate, Matrix2::new(T::lit(2.0), T::zero(), T::zero(), T::lit(10.0)))
}

/// Observer start with X̂ = I, R_Z = I, V_Z = 0 and A_Z = I.
pub fn zero_initial_state<T: Real>() -> ObserverState<T> {
    ObserverState::identity()
}

/// Start with R_Z = I and V_Z = V̂A_Z for a given estimate and A_Z.
pub fn anchored_state<T: Real>(estimate: SE23Element<T>, a_z: Matrix2<T>) -> ObserverState<T> {
    ObserverState::new(
        estimate,
        SIM23Element {
            rotation: Rot3::identity(),
            vblock: estimate.vblock * a_z,
            ablock: a_z,
        },
    )
}

/// Sensor streams and ground truth of a simulated flight.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData<T: Real> {
    pub truth: Vec<SE23Element<T>>,
    pub imu: Vec<ImuSample<T>>,
    pub gnss: Vec<GnssSample<T>>,
    pub mag: Vec<MagSample<T>>,
    pub world: WorldConstants<T>,
}

impl<T: Real> ScenarioData<T> {
    /// Zero-order-hold fusion of the streams.
    pub fn events(&self) -> Result<Vec<FusedEvent<T>>, ModelError> {
        zoh_fuse(self.imu.iter().copied(), self.gnss.iter().copied(), self.mag.iter().copied()).collect()
    }
}

/// The reference flight sampled at a fixed rate, with GNSS and magnetometer
/// available at every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleScenario<T: Real> {
    pub trajectory: CircleTrajectory<T>,
    pub dt: T,
    pub steps: usize,
}

impl<T: Real> CircleScenario<T> {
    pub fn new(world: WorldConstants<T>, dt: T, steps: usize) -> Self {
        Self {
            trajectory: CircleTrajectory::reference_flight(world),
            dt,
            steps,
        }
    }

    /// Number of steps covering `duration` at `dt`.
    pub fn steps_for(duration: T, dt: T) -> Result<usize, SimError> {
        if !(dt > T::zero() && duration > T::zero()) || !dt.is_finite() || !duration.is_finite() {
            return Err(SimError::InvalidScenario("dt and duration must be positive".into()));
        }
        (duration / dt)
            .round()
            .to_usize()
            .filter(|&n| n > 0)
            .ok_or_else(|| SimError::InvalidScenario("duration shorter than dt".into()))
    }

    /// Integrates the truth with the plant step and samples the sensors.
    ///
    /// The IMU sample stamped t_k holds the reading at the middle of
    /// [t_k, t_k+1], which makes the discrete truth second-order accurate
    /// against the analytic circle.
    pub fn generate(&self) -> ScenarioData<T> {
        let world = self.trajectory.world;
        let half = self.dt * T::lit(0.5);
        let stamp = |k: usize| T::from_usize(k).expect("step index fits the scalar") * self.dt;
        let mut truth = Vec::with_capacity(self.steps + 1);
        let mut imu = Vec::with_capacity(self.steps + 1);
        let mut x = nav_to_group(&self.trajectory.state(T::zero()));
        for k in 0..=self.steps {
            let t = stamp(k);
            let u = self.trajectory.input(t + half);
            imu.push(ImuSample { stamp: t, input: u });
            truth.push(x);
            if k < self.steps {
                x = propagate_truth(&x, &u, &world, stamp(k + 1) - t);
            }
        }
        let gnss = truth
            .iter()
            .zip(&imu)
            .map(|(x, s)| GnssSample {
                stamp: s.stamp,
                position: measure_position(x),
                velocity: Some(measure_velocity(x)),
            })
            .collect();
        let mag = truth
            .iter()
            .zip(&imu)
            .map(|(x, s)| MagSample {
                stamp: s.stamp,
                field: measure_magnetometer(x, &world),
            })
            .collect();
        ScenarioData { truth, imu, gnss, mag, world }
    }
}

/// Transformation applied to each correction before it is used. Test hook
/// for mutation checks.
pub type CorrectionHook<'a, T> = &'a dyn Fn(CorrectionPair<T>) -> CorrectionPair<T>;

/// Event-driven observer loop: at each event the correction is computed from
/// the held measurements and applied, together with the event's IMU input,
/// until the next event.
pub struct ClosedLoop<'a, T: Real> {
    pub gains: Gains<T>,
    pub world: WorldConstants<T>,
    pub hook: Option<CorrectionHook<'a, T>>,
}

impl<'a, T: Real> ClosedLoop<'a, T> {
    pub fn new(gains: Gains<T>, world: WorldConstants<T>) -> Self {
        Self { gains, world, hook: None }
    }

    pub fn with_hook(mut self, hook: CorrectionHook<'a, T>) -> Self {
        self.hook = Some(hook);
        self
    }

    /// Runs over `events`, returning one record per event.
    pub fn run(
        &self,
        events: &[FusedEvent<T>],
        init: ObserverState<T>,
        truth: Option<&[SE23Element<T>]>,
    ) -> Result<Vec<StepRecord<T>>, SimError> {
        if let Some(t) = truth {
            if t.len() != events.len() {
                return Err(SimError::TruthLength { truth: t.len(), events: events.len() });
            }
        }
        let mut state = init;
        let mut out = Vec::with_capacity(events.len());
        for (k, ev) in events.iter().enumerate() {
            let mut correction = full_correction(&state, &ev.measurements, &self.gains, &self.world)?;
            if let Some(h) = self.hook {
                correction = h(correction);
            }
            let x = truth.map(|t| t[k]);
            let error = x.map(|x| error_state(&x, &state)).transpose()?;
            out.push(StepRecord {
                stamp: ev.stamp,
                estimate: state.estimate,
                auxiliary: state.auxiliary,
                truth: x,
                error,
                measurements: ev.measurements,
                correction,
            });
            if let Some(next) = events.get(k + 1) {
                let dt = next.stamp - ev.stamp;
                if !(dt > T::zero()) {
                    return Err(SimError::NonIncreasing { index: k, dt: dt.as_f64() });
                }
                state = observer_step(&state, &ev.imu, &correction, &self.world, dt)?;
            }
        }
        Ok(out)
    }
}

/// Simulates the reference flight from `init` with the given gains.
pub fn simulate_circle<T: Real>(
    gains: &Gains<T>,
    init: ObserverState<T>,
    dt: T,
    steps: usize,
) -> Result<Vec<StepRecord<T>>, SimError> {
    let world = WorldConstants::ned();
    let data = CircleScenario::new(world, dt, steps).generate();
    let events = data.events()?;
    ClosedLoop::new(*gains, world).run(&events, init, Some(&data.truth))
}

/// Smooth bounded IMU input: each axis is a constant plus a sum of random
/// sinusoids.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothInputs<T: Real> {
    /// Per-axis (amplitude, angular frequency, phase) triples.
    omega: [Vec<(T, T, T)>; 3],
    accel: [Vec<(T, T, T)>; 3],
    accel_offset: Vec3<T>,
}

impl<T: Real> SmoothInputs<T> {
    /// Three tones per axis with frequencies in [0.2, 2] rad/s. The specific
    /// force is offset by −`gravity` so that a level body roughly hovers.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, omega_amp: f64, accel_amp: f64, gravity: &Vec3<T>) -> Self {
        let mut tones = |amp: f64| -> [Vec<(T, T, T)>; 3] {
            std::array::from_fn(|_| {
                (0..3)
                    .map(|_| {
                        (
                            T::lit(amp * rng.gen_range(-1.0..=1.0) / 3.0),
                            T::lit(rng.gen_range(0.2..=2.0)),
                            T::lit(rng.gen_range(0.0..2.0 * PI)),
                        )
                    })
                    .collect()
            })
        };
        let omega = tones(omega_amp);
        let accel = tones(accel_amp);
        Self { omega, accel, accel_offset: -gravity }
    }

    pub fn at(&self, t: T) -> ImuInput<T> {
        let eval = |axis: &[(T, T, T)]| axis.iter().fold(T::zero(), |acc, &(a, w, p)| acc + a * (w * t + p).sin());
        ImuInput {
            omega: Vec3::new(eval(&self.omega[0]), eval(&self.omega[1]), eval(&self.omega[2])),
            accel: Vec3::new(eval(&self.accel[0]), eval(&self.accel[1]), eval(&self.accel[2])) + self.accel_offset,
        }
    }
}

/// Truth sampled every `dt` for `steps` steps, integrated with `substeps`
/// midpoint-sampled plant steps per interval.
pub fn reference_truth<T: Real>(
    x0: &SE23Element<T>,
    input: impl Fn(T) -> ImuInput<T>,
    world: &WorldConstants<T>,
    dt: T,
    steps: usize,
    substeps: usize,
) -> Vec<SE23Element<T>> {
    let n = T::from_usize(substeps.max(1)).expect("substep count fits the scalar");
    let h = dt / n;
    let mut x = *x0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x);
    for k in 0..steps {
        let t0 = T::from_usize(k).expect("step index fits the scalar") * dt;
        for j in 0..substeps.max(1) {
            let t = t0 + (T::from_usize(j).expect("substep index fits the scalar") + T::lit(0.5)) * h;
            x = propagate_truth(&x, &input(t), world, h);
        }
        out.push(x);
    }
    out
}

/// Drives the observer with zero corrections and midpoint-sampled inputs,
/// returning the cost against `truth` at every stamp. With exact
/// integration the cost would stay constant.
pub fn uncorrected_costs<T: Real>(
    init: &ObserverState<T>,
    truth: &[SE23Element<T>],
    input: impl Fn(T) -> ImuInput<T>,
    world: &WorldConstants<T>,
    dt: T,
) -> Result<Vec<T>, SimError> {
    let mut state = *init;
    let mut out = Vec::with_capacity(truth.len());
    for (k, x) in truth.iter().enumerate() {
        out.push(crate::observer::lyapunov(&error_state(x, &state)?));
        if k + 1 < truth.len() {
            let t = T::from_usize(k).expect("step index fits the scalar") * dt;
            state = observer_step(&state, &input(t + dt * T::lit(0.5)), &CorrectionPair::zero(), world, dt)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::Preset;

    #[test]
    fn one_step_gives_two_records() {
        let n = CircleScenario::<f64>::steps_for(0.02, 0.02).unwrap();
        assert_eq!(n, 1);
        let recs = simulate_circle(&Gains::preset(Preset::Pvm), extreme_initial_state(), 0.02, n).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].stamp, 0.0);
        assert_eq!(recs[1].stamp, 0.02);
        assert!(CircleScenario::<f64>::steps_for(0.0, 0.02).is_err());
    }

    #[test]
    fn extreme_start_matches_published_values() {
        let s = extreme_initial_state::<f64>();
        assert_eq!(s.estimate.velocity(), Vec3::new(2.0, 27.0, 2.0));
        assert_eq!(s.estimate.position(), Vec3::new(70.0, 20.0, 20.0));
        assert_eq!(s.auxiliary.ablock, Matrix2::new(2.0, 0.0, 0.0, 10.0));
        assert_eq!(s.auxiliary.vblock, s.estimate.vblock * s.auxiliary.ablock);
        assert!((s.estimate.rotation.trace() - (1.0 + 2.0 * (0.99 * PI).cos())).abs() < 1e-12);
    }

    #[test]
    fn truth_tracks_analytic_circle() {
        let world = WorldConstants::<f64>::ned();
        let scenario = CircleScenario::new(world, 0.02, 2500);
        let data = scenario.generate();
        let end = scenario.trajectory.state(50.0);
        let err = (data.truth[2500].position() - end.position).norm();
        assert!(err < 0.5, "terminal position error {err}");
        let period = (4.0 * PI / 0.02).round() as usize;
        let loop_err = (data.truth[period].position() - data.truth[0].position()).norm();
        assert!(loop_err < 0.5, "one-period error {loop_err}");
    }

    #[test]
    fn truth_error_shrinks_with_step() {
        let world = WorldConstants::<f64>::ned();
        let err = |dt: f64| {
            let steps = (10.0 / dt).round() as usize;
            let s = CircleScenario::new(world, dt, steps);
            (s.generate().truth[steps].position() - s.trajectory.state(10.0).position).norm()
        };
        let (a, b) = (err(0.04), err(0.02));
        assert!(b <= a / 2.0, "errors {a} -> {b}");
    }

    #[test]
    fn perfect_start_stays_perfect() {
        let world = WorldConstants::<f64>::ned();
        let data = CircleScenario::new(world, 0.02, 200).generate();
        let init = anchored_state(data.truth[0], Matrix2::identity());
        let events = data.events().unwrap();
        let recs = ClosedLoop::new(Gains::preset(Preset::Pvm), world).run(&events, init, Some(&data.truth)).unwrap();
        let last = recs.last().unwrap().metrics().unwrap();
        assert!(last.position_error < 1e-9 && last.attitude_angle < 1e-9 && last.lyapunov < 1e-15, "{last:?}");
    }

    #[test]
    fn truth_length_is_checked() {
        let world = WorldConstants::<f64>::ned();
        let data = CircleScenario::new(world, 0.02, 3).generate();
        let events = data.events().unwrap();
        let r = ClosedLoop::new(Gains::preset(Preset::P), world).run(&events, zero_initial_state(), Some(&data.truth[..2]));
        assert!(matches!(r, Err(SimError::TruthLength { .. })));
    }
}
