//! Error metrics, persistence-of-excitation checks, Riccati residuals,
//! finite-difference rates, and run summaries.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use serde::Serialize;

use crate::lie::{skew, Rot3, SE23Element, SIM23Element, Vec3};
use crate::model::{shift_block, MeasurementBundle};
use crate::observer::{lyapunov, CorrectionPair, Gains, Selectors, CONDITION_ALARM};
use crate::Real;

/// Default persistence-of-excitation window, seconds.
pub const PE_PERIOD: f64 = 10.0;

/// Default PE threshold as a fraction of the window length.
pub const PE_DELTA_FRACTION: f64 = 0.1;

/// Failures of analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("window of {window} samples does not fit in a series of {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("sampling interval and window length must be positive")]
    InvalidWindow,
}

/// Navigation errors at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub stamp: f64,
    /// Geodesic attitude error, rad, in [0, π].
    pub attitude_angle: f64,
    pub velocity_error: f64,
    pub position_error: f64,
    pub lyapunov: f64,
}

impl ErrorMetrics {
    pub fn between<T: Real>(stamp: T, truth: &SE23Element<T>, estimate: &SE23Element<T>, lyapunov: T) -> Self {
        Self {
            stamp: stamp.as_f64(),
            attitude_angle: attitude_angle(&truth.rotation, &estimate.rotation).as_f64(),
            velocity_error: (truth.velocity() - estimate.velocity()).norm().as_f64(),
            position_error: (truth.position() - estimate.position()).norm().as_f64(),
            lyapunov: lyapunov.as_f64(),
        }
    }
}

/// Angle of RR̂ᵀ, rad.
pub fn attitude_angle<T: Real>(r: &Rot3<T>, rhat: &Rot3<T>) -> T {
    r.angle_to(rhat)
}

/// Outcome of the excitation test over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PEWitness {
    pub window_start: f64,
    pub window_end: f64,
    /// Smallest eigenvalue of ∫ −Σ μᵢ^μᵢ^ dτ over the window.
    pub gram_min_eig: f64,
    pub delta: f64,
    /// Window length T, seconds.
    pub period: f64,
}

impl PEWitness {
    pub fn passes(&self) -> bool {
        self.gram_min_eig > self.delta
    }

    pub fn margin(&self) -> f64 {
        self.gram_min_eig - self.delta
    }
}

/// −Σ μᵢ^μᵢ^ = Σ (|μᵢ|²I − μᵢμᵢᵀ).
pub fn pe_integrand<T: Real>(mus: &[Vec3<T>]) -> Matrix3<T> {
    mus.iter().fold(Matrix3::zeros(), |acc, m| {
        let s = skew(m);
        acc - s * s
    })
}

fn min_eigenvalue<T: Real>(m: Matrix3<T>) -> T {
    let sym = (m + m.transpose()) * T::lit(0.5);
    SymmetricEigen::new(sym).eigenvalues.iter().fold(T::max_value().unwrap_or(T::one()), |a, &b| a.min(b))
}

/// Cumulative trapezoidal integral of the PE integrand.
fn cumulative_gram<T: Real>(mu_series: &[Vec<Vec3<T>>], sample_dt: T) -> Vec<Matrix3<T>> {
    let half = sample_dt * T::lit(0.5);
    let mut out = Vec::with_capacity(mu_series.len());
    let mut acc = Matrix3::zeros();
    let mut prev: Option<Matrix3<T>> = None;
    for mus in mu_series {
        let f = pe_integrand(mus);
        if let Some(p) = prev {
            acc += (p + f) * half;
        }
        out.push(acc);
        prev = Some(f);
    }
    out
}

fn window_samples<T: Real>(len: usize, sample_dt: T, period: T) -> Result<usize, AnalysisError> {
    if !(sample_dt > T::zero() && period > T::zero()) {
        return Err(AnalysisError::InvalidWindow);
    }
    let window = (period / sample_dt).round().to_usize().unwrap_or(usize::MAX).max(1);
    if window >= len {
        return Err(AnalysisError::WindowTooLong { window, len });
    }
    Ok(window)
}

/// Sliding-window excitation test on a uniformly sampled series, one
/// witness per start sample. Stamps are relative to the first sample.
pub fn pe_check<T: Real>(mu_series: &[Vec<Vec3<T>>], sample_dt: T, period: T, delta: T) -> Result<Vec<PEWitness>, AnalysisError> {
    let window = window_samples(mu_series.len(), sample_dt, period)?;
    let cum = cumulative_gram(mu_series, sample_dt);
    let dt = sample_dt.as_f64();
    Ok((0..mu_series.len() - window)
        .map(|i| PEWitness {
            window_start: i as f64 * dt,
            window_end: (i + window) as f64 * dt,
            gram_min_eig: min_eigenvalue(cum[i + window] - cum[i]).as_f64(),
            delta: delta.as_f64(),
            period: window as f64 * dt,
        })
        .collect())
}

/// PE margin of the window ending at each sample; `None` until a full
/// window is available.
pub fn trailing_pe_margins<T: Real>(mu_series: &[Vec<Vec3<T>>], sample_dt: T, period: T, delta: T) -> Vec<Option<f64>> {
    let Ok(window) = window_samples(mu_series.len(), sample_dt, period) else {
        return vec![None; mu_series.len()];
    };
    let cum = cumulative_gram(mu_series, sample_dt);
    (0..mu_series.len())
        .map(|k| (k >= window).then(|| (min_eigenvalue(cum[k] - cum[k - window]) - delta).as_f64()))
        .collect()
}

/// Excitation vectors of one step: √k_c μ_p, √k_d μ_v and √k_m R_Zᵀẙ_m for
/// the sensors present, with μ = R_Zᵀ(y − V_ZA_Z⁻¹C).
pub fn excitation_vectors<T: Real>(
    z: &SIM23Element<T>,
    m: &MeasurementBundle<T>,
    gains: &Gains<T>,
    mag_direction: &Vec3<T>,
) -> Vec<Vec3<T>> {
    let mut out = Vec::with_capacity(3);
    let Ok(ainv) = z.a_inverse() else {
        return out;
    };
    let sel = Selectors::new();
    let rzt = z.rotation.transpose();
    let mut push = |k: T, y: &Vec3<T>, c| {
        if k > T::zero() {
            out.push(rzt * (y - z.vblock * (ainv * c)) * k.sqrt());
        }
    };
    if let Some(y) = &m.pos {
        push(gains.k_c, y, sel.c_p);
    }
    if let Some(y) = &m.vel {
        push(gains.k_d, y, sel.c_v);
    }
    if m.mag.is_some() && gains.k_m > T::zero() {
        out.push(rzt * *mag_direction * gains.k_m.sqrt());
    }
    out
}

/// S_DP + PS_Dᵀ + diag(k_v, k_p) − PK_qP.
pub fn riccati_rhs<T: Real>(p: &Matrix2<T>, k_p: T, k_v: T, k_q: &Matrix2<T>) -> Matrix2<T> {
    let sd = shift_block::<T>();
    sd * p + p * sd.transpose() + Matrix2::new(k_v, T::zero(), T::zero(), k_p) - p * k_q * p
}

/// Frobenius norm of Ṗ minus the Riccati right-hand side.
pub fn riccati_residual<T: Real>(p: &Matrix2<T>, k_p: T, k_v: T, k_q: &Matrix2<T>, pdot: &Matrix2<T>) -> T {
    (pdot - riccati_rhs(p, k_p, k_v, k_q)).norm()
}

/// Central difference (f(flow(h)) − f(flow(−h))) / 2h.
pub fn fd_rate<S, T, F, G>(f: F, flow: G, h: T) -> T
where
    T: Real,
    F: Fn(&S) -> T,
    G: Fn(T) -> S,
{
    (f(&flow(h)) - f(&flow(-h))) / (h + h)
}

/// Least-squares line y = slope·x + intercept with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        samples: n,
    })
}

/// Fits log|v| against time over the leading samples with |v| above `floor`.
pub fn fit_log_decay(stamps: &[f64], norms: &[f64], floor: f64) -> Option<LinearFit> {
    let n = norms.iter().take_while(|&&v| v > floor && v.is_finite()).count();
    let logs: Vec<f64> = norms[..n].iter().map(|v| v.ln()).collect();
    linear_fit(&stamps[..n], &logs)
}

/// State of the closed loop at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T: Real> {
    pub stamp: T,
    pub estimate: SE23Element<T>,
    pub auxiliary: SIM23Element<T>,
    /// Known only in simulation.
    pub truth: Option<SE23Element<T>>,
    /// Ē, when the truth is known.
    pub error: Option<SE23Element<T>>,
    pub measurements: MeasurementBundle<T>,
    /// Correction applied over the step that starts here.
    pub correction: CorrectionPair<T>,
}

impl<T: Real> StepRecord<T> {
    pub fn lyapunov(&self) -> Option<T> {
        self.error.as_ref().map(lyapunov)
    }

    pub fn metrics(&self) -> Option<ErrorMetrics> {
        let truth = self.truth.as_ref()?;
        Some(ErrorMetrics::between(self.stamp, truth, &self.estimate, self.lyapunov()?))
    }
}

/// Aggregate excitation statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeSummary {
    pub period: f64,
    pub delta: f64,
    pub windows: usize,
    pub pass_fraction: Option<f64>,
    pub min_margin: Option<f64>,
}

/// Terminal and whole-run statistics of a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub duration: f64,
    pub terminal: Option<ErrorMetrics>,
    /// Largest 𝓛 increase between consecutive samples.
    pub max_lyapunov_increase: Option<f64>,
    /// Whether every increase stays within the integrator slack.
    pub lyapunov_non_increasing: Option<bool>,
    /// Fit of log|V_Ē| against time while |V_Ē| > 1e-9; the decay rate is −slope.
    pub vbar_decay: Option<LinearFit>,
    pub pe: PeSummary,
    /// Fraction of events without a position measurement.
    pub unobservable_fraction: f64,
    pub max_condition_number: f64,
    pub condition_alarms: usize,
}

/// Numerical floor for the V_Ē decay fit.
pub const VBAR_FLOOR: f64 = 1e-9;

/// Slack on a single-step Lyapunov increase: 1e-9·dt plus round-off on 𝓛.
pub fn lyapunov_slack(dt: f64, value: f64) -> f64 {
    1e-9 * dt + 64.0 * f64::EPSILON * value.abs().max(1.0)
}

/// Per-step PE margins of a trace, with the default window.
pub fn trace_pe_margins<T: Real>(records: &[StepRecord<T>], gains: &Gains<T>, mag_direction: &Vec3<T>) -> Vec<Option<f64>> {
    let (mus, dt) = trace_excitation(records, gains, mag_direction);
    if dt <= 0.0 {
        return vec![None; records.len()];
    }
    trailing_pe_margins(&mus, T::lit(dt), T::lit(PE_PERIOD), T::lit(PE_PERIOD * PE_DELTA_FRACTION))
}

fn trace_excitation<T: Real>(records: &[StepRecord<T>], gains: &Gains<T>, mag_direction: &Vec3<T>) -> (Vec<Vec<Vec3<T>>>, f64) {
    let mus = records
        .iter()
        .map(|r| excitation_vectors(&r.auxiliary, &r.measurements, gains, mag_direction))
        .collect();
    let dt = if records.len() > 1 {
        (records[records.len() - 1].stamp - records[0].stamp).as_f64() / (records.len() - 1) as f64
    } else {
        0.0
    };
    (mus, dt)
}

/// Builds the run summary.
pub fn summarize<T: Real>(records: &[StepRecord<T>], gains: &Gains<T>, mag_direction: &Vec3<T>) -> Summary {
    let n = records.len();
    let duration = if n > 1 { (records[n - 1].stamp - records[0].stamp).as_f64() } else { 0.0 };
    let lyap: Vec<Option<f64>> = records.iter().map(|r| r.lyapunov().map(|v| v.as_f64())).collect();
    let mut max_inc: Option<f64> = None;
    let mut monotone = true;
    for k in 1..n {
        if let (Some(a), Some(b)) = (lyap[k - 1], lyap[k]) {
            let inc = b - a;
            max_inc = Some(max_inc.map_or(inc, |m: f64| m.max(inc)));
            let dt = (records[k].stamp - records[k - 1].stamp).as_f64();
            monotone &= inc <= lyapunov_slack(dt, a);
        }
    }
    let has_truth = lyap.iter().all(Option::is_some) && n > 0;

    let vbar_decay = if has_truth {
        let stamps: Vec<f64> = records.iter().map(|r| r.stamp.as_f64()).collect();
        let norms: Vec<f64> = records
            .iter()
            .map(|r| r.error.map_or(f64::NAN, |e| e.vblock.norm().as_f64()))
            .collect();
        fit_log_decay(&stamps, &norms, VBAR_FLOOR)
    } else {
        None
    };

    let (mus, dt) = trace_excitation(records, gains, mag_direction);
    let period = PE_PERIOD;
    let delta = PE_PERIOD * PE_DELTA_FRACTION;
    let witnesses = if dt > 0.0 {
        pe_check(&mus, T::lit(dt), T::lit(period), T::lit(delta)).unwrap_or_default()
    } else {
        Vec::new()
    };
    let pe = PeSummary {
        period,
        delta,
        windows: witnesses.len(),
        pass_fraction: (!witnesses.is_empty())
            .then(|| witnesses.iter().filter(|w| w.passes()).count() as f64 / witnesses.len() as f64),
        min_margin: witnesses.iter().map(PEWitness::margin).reduce(f64::min),
    };

    let conds: Vec<f64> = records.iter().map(|r| r.auxiliary.condition_number().as_f64()).collect();
    Summary {
        steps: n.saturating_sub(1),
        duration,
        terminal: records.last().and_then(StepRecord::metrics),
        max_lyapunov_increase: max_inc,
        lyapunov_non_increasing: max_inc.map(|_| monotone),
        vbar_decay,
        pe,
        unobservable_fraction: if n > 0 {
            records.iter().filter(|r| r.measurements.pos.is_none()).count() as f64 / n as f64
        } else {
            0.0
        },
        max_condition_number: conds.iter().copied().fold(0.0, f64::max),
        condition_alarms: conds.iter().filter(|&&c| !(c <= CONDITION_ALARM)).count(),
    }
}
