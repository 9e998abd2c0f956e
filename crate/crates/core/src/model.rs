//! Ground-truth plant: INS dynamics in explicit and group-affine form,
//! measurement models, the circular reference flight, and zero-order-hold
//! fusion of multirate sensor streams.

use std::iter::Peekable;

use nalgebra::{Matrix2, Matrix3x2, Matrix5};

use crate::lie::{exp_sim23, skew, Rot3, SE23Element, SE23Tangent, SIM23Element, SIM23Tangent, Vec3};
use crate::Real;

/// Attitude, velocity and position of the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState<T: Real> {
    pub attitude: Rot3<T>,
    pub velocity: Vec3<T>,
    pub position: Vec3<T>,
}

impl<T: Real> NavState<T> {
    pub fn identity() -> Self {
        Self {
            attitude: Rot3::identity(),
            velocity: Vec3::zeros(),
            position: Vec3::zeros(),
        }
    }
}

/// Gyroscope and accelerometer sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuInput<T: Real> {
    /// Angular velocity, rad/s.
    pub omega: Vec3<T>,
    /// Specific acceleration, m/s².
    pub accel: Vec3<T>,
}

impl<T: Real> ImuInput<T> {
    pub fn zero() -> Self {
        Self {
            omega: Vec3::zeros(),
            accel: Vec3::zeros(),
        }
    }
}

/// Rejected world constants.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("gravity vector must be nonzero and finite")]
    InvalidGravity,
    #[error("magnetic reference must be nonzero and finite")]
    InvalidMagReference,
    #[error("{stream} stamps must be non-decreasing (got {stamp} after {previous})")]
    NonMonotone {
        stream: &'static str,
        stamp: f64,
        previous: f64,
    },
    #[error("magnetometer sample at {stamp} has zero length")]
    ZeroMagnetometer { stamp: f64 },
}

/// Gravity and the reference magnetic field, both in the navigation frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConstants<T: Real> {
    pub gravity: Vec3<T>,
    pub mag_reference: Vec3<T>,
}

impl<T: Real> WorldConstants<T> {
    pub fn new(gravity: Vec3<T>, mag_reference: Vec3<T>) -> Result<Self, ModelError> {
        let usable = |v: &Vec3<T>| v.norm() > T::zero() && v.iter().all(|x| x.is_finite());
        if !usable(&gravity) {
            return Err(ModelError::InvalidGravity);
        }
        if !usable(&mag_reference) {
            return Err(ModelError::InvalidMagReference);
        }
        Ok(Self { gravity, mag_reference })
    }

    /// NED frame with g = 9.81 m/s² down and the reference field along north.
    pub fn ned() -> Self {
        Self {
            gravity: Vec3::z() * T::lit(9.81),
            mag_reference: Vec3::x(),
        }
    }

    /// Unit reference field direction.
    pub fn mag_direction(&self) -> Vec3<T> {
        self.mag_reference.normalize()
    }
}

/// The constant algebra elements G and D of the group-affine dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMatrices<T: Real> {
    /// (0, [g | 0], 0).
    pub g: SIM23Tangent<T>,
    /// (0, 0, S_D).
    pub d: SIM23Tangent<T>,
}

impl<T: Real> ConstantMatrices<T> {
    pub fn new(world: &WorldConstants<T>) -> Self {
        Self {
            g: SIM23Tangent::new(
                Vec3::zeros(),
                Matrix3x2::from_columns(&[world.gravity, Vec3::zeros()]),
                Matrix2::zeros(),
            ),
            d: SIM23Tangent::new(Vec3::zeros(), Matrix3x2::zeros(), shift_block()),
        }
    }

    /// G + D, the generator of the left factor of the flow.
    pub fn drift(&self) -> SIM23Tangent<T> {
        self.g + self.d
    }
}

/// S_D = [[0, −1], [0, 0]], which shifts velocity into position.
pub fn shift_block<T: Real>() -> Matrix2<T> {
    Matrix2::new(T::zero(), -T::one(), T::zero(), T::zero())
}

pub fn nav_to_group<T: Real>(s: &NavState<T>) -> SE23Element<T> {
    SE23Element::from_parts(s.attitude, s.velocity, s.position)
}

pub fn group_to_nav<T: Real>(x: &SE23Element<T>) -> NavState<T> {
    NavState {
        attitude: x.rotation,
        velocity: x.velocity(),
        position: x.position(),
    }
}

/// U = (Ω, [a | 0]).
pub fn input_to_tangent<T: Real>(u: &ImuInput<T>) -> SE23Tangent<T> {
    SE23Tangent::new(u.omega, Matrix3x2::from_columns(&[u.accel, Vec3::zeros()]))
}

/// Ẋ = XU + GX + DX − XD, evaluated blockwise: Ṙ = RΩ^, v̇ = Ra + g, ṗ = v.
pub fn truth_derivative<T: Real>(x: &SE23Element<T>, u: &ImuInput<T>, w: &WorldConstants<T>) -> Matrix5<T> {
    let r = x.rotation.matrix();
    let mut m = Matrix5::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(r * skew(&u.omega)));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(r * u.accel + w.gravity));
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(&x.velocity());
    m
}

/// Exact flow factors of the plant for inputs held constant over a step.
///
/// X(t+dt) = exp(dt(G+D)) · X(t) · exp(dt(U−D)). Both factors live in
/// SIM₂(3); their scaling blocks are exp(±dt·S_D), which cancel, so the
/// product is projected back to SE₂(3) without loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowFactors<T: Real> {
    pub left: SIM23Element<T>,
    pub right: SIM23Element<T>,
}

impl<T: Real> FlowFactors<T> {
    pub fn new(u: &ImuInput<T>, w: &WorldConstants<T>, dt: T) -> Self {
        let c = ConstantMatrices::new(w);
        Self {
            left: exp_sim23(&(c.drift() * dt)),
            right: exp_sim23(&((SIM23Tangent::from(input_to_tangent(u)) - c.d) * dt)),
        }
    }

    /// left · x · right, with the scaling block dropped.
    pub fn apply(&self, x: &SIM23Element<T>) -> SE23Element<T> {
        (self.left * *x * self.right).to_se23().renormalized()
    }
}

/// One geometric Euler step of the plant.
pub fn propagate_truth<T: Real>(x: &SE23Element<T>, u: &ImuInput<T>, w: &WorldConstants<T>, dt: T) -> SE23Element<T> {
    FlowFactors::new(u, w, dt).apply(&SIM23Element::from(*x))
}

/// Circular flight at constant speed with a constant yaw rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleTrajectory<T: Real> {
    pub radius: T,
    /// Angular speed of the position around the circle, rad/s.
    pub orbit_rate: T,
    /// Body yaw rate, rad/s.
    pub yaw_rate: T,
    pub world: WorldConstants<T>,
}

impl<T: Real> CircleTrajectory<T> {
    /// 50 m radius at 25 m/s, yawing at 1 rad/s.
    pub fn reference_flight(world: WorldConstants<T>) -> Self {
        Self {
            radius: T::lit(50.0),
            orbit_rate: T::lit(0.5),
            yaw_rate: T::one(),
            world,
        }
    }

    pub fn state(&self, t: T) -> NavState<T> {
        let (s, c) = (t * self.orbit_rate).sin_cos();
        let (r, w) = (self.radius, self.orbit_rate);
        NavState {
            attitude: Rot3::exp(&(Vec3::z() * (t * self.yaw_rate))),
            velocity: Vec3::new(-r * w * s, r * w * c, T::zero()),
            position: Vec3::new(r * c, r * s, T::zero()),
        }
    }

    /// Inertial acceleration v̇(t).
    pub fn acceleration(&self, t: T) -> Vec3<T> {
        let (s, c) = (t * self.orbit_rate).sin_cos();
        let k = -self.radius * self.orbit_rate * self.orbit_rate;
        Vec3::new(k * c, k * s, T::zero())
    }

    /// IMU reading that makes the explicit dynamics hold exactly: a = Rᵀ(v̇ − g).
    pub fn input(&self, t: T) -> ImuInput<T> {
        let r = self.state(t).attitude;
        ImuInput {
            omega: Vec3::z() * self.yaw_rate,
            accel: r.transpose() * (self.acceleration(t) - self.world.gravity),
        }
    }
}

/// Truth state and IMU input of the reference flight at time `t`.
pub fn circle_reference<T: Real>(t: T, world: &WorldConstants<T>) -> (NavState<T>, ImuInput<T>) {
    let c = CircleTrajectory::reference_flight(*world);
    (c.state(t), c.input(t))
}

/// GNSS position, y_p = p.
pub fn measure_position<T: Real>(x: &SE23Element<T>) -> Vec3<T> {
    x.position()
}

/// GNSS velocity, y_v = v.
pub fn measure_velocity<T: Real>(x: &SE23Element<T>) -> Vec3<T> {
    x.velocity()
}

/// Unit magnetometer direction, y_m = Rᵀẙ_m / |ẙ_m|.
pub fn measure_magnetometer<T: Real>(x: &SE23Element<T>, w: &WorldConstants<T>) -> Vec3<T> {
    (x.rotation.transpose() * w.mag_reference).normalize()
}

/// Measurements held at one IMU stamp. Absent sensors are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBundle<T: Real> {
    pub stamp: T,
    pub pos: Option<Vec3<T>>,
    pub vel: Option<Vec3<T>>,
    /// Unit length when present.
    pub mag: Option<Vec3<T>>,
}

impl<T: Real> MeasurementBundle<T> {
    pub fn empty(stamp: T) -> Self {
        Self {
            stamp,
            pos: None,
            vel: None,
            mag: None,
        }
    }

    /// Noiseless measurements of a state.
    pub fn of_state(stamp: T, x: &SE23Element<T>, w: &WorldConstants<T>) -> Self {
        Self {
            stamp,
            pos: Some(measure_position(x)),
            vel: Some(measure_velocity(x)),
            mag: Some(measure_magnetometer(x, w)),
        }
    }
}

/// GNSS sample in the local NED frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnssSample<T: Real> {
    pub stamp: T,
    pub position: Vec3<T>,
    pub velocity: Option<Vec3<T>>,
}

/// Time-stamped IMU sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample<T: Real> {
    pub stamp: T,
    pub input: ImuInput<T>,
}

/// Time-stamped magnetometer sample in body axes, any scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagSample<T: Real> {
    pub stamp: T,
    pub field: Vec3<T>,
}

/// One IMU sample together with the latest held aiding measurements.
///
/// The input is held over the interval from this stamp to the next event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedEvent<T: Real> {
    pub stamp: T,
    pub imu: ImuInput<T>,
    pub measurements: MeasurementBundle<T>,
}

/// Pull-based zero-order-hold fusion; see [`zoh_fuse`].
pub struct ZohFuse<T, I, G, M>
where
    T: Real,
    I: Iterator<Item = ImuSample<T>>,
    G: Iterator<Item = GnssSample<T>>,
    M: Iterator<Item = MagSample<T>>,
{
    imu: I,
    gnss: Peekable<G>,
    mag: Peekable<M>,
    last_imu: Option<T>,
    last_gnss: Option<GnssSample<T>>,
    last_mag: Option<(T, Vec3<T>)>,
    failed: bool,
}

/// Emits one [`FusedEvent`] per IMU sample carrying the most recent GNSS and
/// magnetometer values stamped at or before it. Events before the first fix
/// carry no position or velocity. Decreasing stamps in any stream end the
/// iteration with an error naming the offending stamp.
pub fn zoh_fuse<T, I, G, M>(imu: I, gnss: G, mag: M) -> ZohFuse<T, I::IntoIter, G::IntoIter, M::IntoIter>
where
    T: Real,
    I: IntoIterator<Item = ImuSample<T>>,
    G: IntoIterator<Item = GnssSample<T>>,
    M: IntoIterator<Item = MagSample<T>>,
{
    ZohFuse {
        imu: imu.into_iter(),
        gnss: gnss.into_iter().peekable(),
        mag: mag.into_iter().peekable(),
        last_imu: None,
        last_gnss: None,
        last_mag: None,
        failed: false,
    }
}

fn check_order<T: Real>(stream: &'static str, previous: Option<T>, stamp: T) -> Result<(), ModelError> {
    match previous {
        Some(p) if stamp < p => Err(ModelError::NonMonotone {
            stream,
            stamp: stamp.as_f64(),
            previous: p.as_f64(),
        }),
        _ => Ok(()),
    }
}

impl<T, I, G, M> ZohFuse<T, I, G, M>
where
    T: Real,
    I: Iterator<Item = ImuSample<T>>,
    G: Iterator<Item = GnssSample<T>>,
    M: Iterator<Item = MagSample<T>>,
{
    fn advance(&mut self, sample: ImuSample<T>) -> Result<FusedEvent<T>, ModelError> {
        let t = sample.stamp;
        check_order("imu", self.last_imu, t)?;
        self.last_imu = Some(t);
        while let Some(g) = self.gnss.next_if(|g| g.stamp <= t) {
            check_order("gnss", self.last_gnss.map(|s| s.stamp), g.stamp)?;
            self.last_gnss = Some(g);
        }
        while let Some(m) = self.mag.next_if(|m| m.stamp <= t) {
            check_order("mag", self.last_mag.map(|s| s.0), m.stamp)?;
            let n = m.field.norm();
            if !(n > T::zero()) {
                return Err(ModelError::ZeroMagnetometer { stamp: m.stamp.as_f64() });
            }
            self.last_mag = Some((m.stamp, m.field / n));
        }
        Ok(FusedEvent {
            stamp: t,
            imu: sample.input,
            measurements: MeasurementBundle {
                stamp: t,
                pos: self.last_gnss.map(|g| g.position),
                vel: self.last_gnss.and_then(|g| g.velocity),
                mag: self.last_mag.map(|m| m.1),
            },
        })
    }
}

impl<T, I, G, M> Iterator for ZohFuse<T, I, G, M>
where
    T: Real,
    I: Iterator<Item = ImuSample<T>>,
    G: Iterator<Item = GnssSample<T>>,
    M: Iterator<Item = MagSample<T>>,
{
    type Item = Result<FusedEvent<T>, ModelError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let sample = self.imu.next()?;
        let out = self.advance(sample);
        self.failed = out.is_err();
        Some(out)
    }
}
