//! Flight-log ingestion: CSV parsing of IMU, GNSS and magnetometer rows,
//! geodetic to local NED conversion, and timestamp normalization.
//!
//! The log is one CSV file with header `type,stamp_s,f1,f2,f3,f4,f5,f6`:
//!
//! | type     | f1..f6                                  |
//! |----------|-----------------------------------------|
//! | `IMU`    | gx, gy, gz (rad/s), ax, ay, az (m/s²)   |
//! | `GNSS`   | lat, lon (deg), alt (m), vn, ve, vd     |
//! | `MAG`    | mx, my, mz                              |
//! | `MAGREF` | reference field in NED, any unit        |
//! | `ORIGIN` | lat, lon, alt of the local NED origin   |
//!
//! GNSS velocities are optional. Without an `ORIGIN` row the first GNSS fix
//! is the origin; without `MAGREF` the reference field points north.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::lie::Vec3;
use crate::model::{zoh_fuse, FusedEvent, GnssSample, ImuInput, ImuSample, MagSample, ModelError, WorldConstants};

/// WGS-84 semi-major axis, m.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

const COLUMNS: [&str; 8] = ["type", "stamp_s", "f1", "f2", "f3", "f4", "f5", "f6"];

/// Ingestion failures.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("no imu samples")]
    NoImu,
    #[error("invalid fix: latitude {latitude}, longitude {longitude}")]
    InvalidFix { latitude: f64, longitude: f64 },
    #[error(transparent)]
    Fusion(#[from] ModelError),
}

/// Geodetic fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlaFix {
    /// Degrees, |lat| ≤ 90.
    pub latitude: f64,
    /// Degrees, |lon| ≤ 180.
    pub longitude: f64,
    /// Metres, positive up.
    pub altitude: f64,
    pub stamp: f64,
}

impl LlaFix {
    pub fn new(latitude: f64, longitude: f64, altitude: f64, stamp: f64) -> Result<Self, IngestError> {
        let fix = Self { latitude, longitude, altitude, stamp };
        fix.validate()?;
        Ok(fix)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let ok = self.latitude.abs() <= 90.0 && self.longitude.abs() <= 180.0 && self.altitude.is_finite();
        if ok {
            Ok(())
        } else {
            Err(IngestError::InvalidFix {
                latitude: self.latitude,
                longitude: self.longitude,
            })
        }
    }
}

/// Meridian and prime-vertical radii of curvature at a latitude (deg).
pub fn curvature_radii(latitude: f64) -> (f64, f64) {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let s = latitude.to_radians().sin();
    let w = 1.0 - e2 * s * s;
    (WGS84_A * (1.0 - e2) / (w * w.sqrt()), WGS84_A / w.sqrt())
}

/// Tangent-plane NED offset of `fix` from `reference`, using the curvature
/// radii at the reference latitude.
pub fn lla_to_ned(reference: &LlaFix, fix: &LlaFix) -> Result<Vec3<f64>, IngestError> {
    reference.validate()?;
    fix.validate()?;
    let (r_m, r_n) = curvature_radii(reference.latitude);
    let mut dlon = fix.longitude - reference.longitude;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    Ok(Vec3::new(
        (fix.latitude - reference.latitude).to_radians() * r_m,
        dlon.to_radians() * r_n * reference.latitude.to_radians().cos(),
        reference.altitude - fix.altitude,
    ))
}

/// Inverse of [`lla_to_ned`].
pub fn ned_to_lla(reference: &LlaFix, ned: &Vec3<f64>, stamp: f64) -> LlaFix {
    let (r_m, r_n) = curvature_radii(reference.latitude);
    LlaFix {
        latitude: reference.latitude + (ned.x / r_m).to_degrees(),
        longitude: reference.longitude + (ned.y / (r_n * reference.latitude.to_radians().cos())).to_degrees(),
        altitude: reference.altitude - ned.z,
        stamp,
    }
}

/// GNSS row: geodetic fix plus optional NED velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnssRecord {
    pub fix: LlaFix,
    pub velocity: Option<Vec3<f64>>,
}

/// Parsed log with stamps rebased so that the first IMU sample is at 0.
///
/// Values are kept as recorded; magnetometer readings and the reference
/// field are normalized when the streams are fused.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBundle {
    pub imu: Vec<ImuSample<f64>>,
    pub gnss: Vec<GnssRecord>,
    pub mag: Vec<MagSample<f64>>,
    pub mag_reference: Option<Vec3<f64>>,
    pub origin: Option<LlaFix>,
    /// Original stamp of the first IMU sample.
    pub epoch: f64,
}

impl LogBundle {
    /// NED origin: the `ORIGIN` row, else the first GNSS fix.
    pub fn reference(&self) -> Option<LlaFix> {
        self.origin.or_else(|| self.gnss.first().map(|g| g.fix))
    }

    /// GNSS samples in the local NED frame.
    pub fn gnss_ned(&self) -> Result<Vec<GnssSample<f64>>, IngestError> {
        let Some(reference) = self.reference() else {
            return Ok(Vec::new());
        };
        self.gnss
            .iter()
            .map(|g| {
                Ok(GnssSample {
                    stamp: g.fix.stamp,
                    position: lla_to_ned(&reference, &g.fix)?,
                    velocity: g.velocity,
                })
            })
            .collect()
    }

    /// World constants with g = 9.81 m/s² down and the logged reference field.
    pub fn world(&self) -> Result<WorldConstants<f64>, IngestError> {
        let ned = WorldConstants::ned();
        match self.mag_reference {
            Some(m) => Ok(WorldConstants::new(ned.gravity, m.normalize())?),
            None => Ok(ned),
        }
    }

    /// Zero-order-hold fusion at the IMU rate.
    pub fn events(&self) -> Result<Vec<FusedEvent<f64>>, IngestError> {
        let gnss = self.gnss_ned()?;
        Ok(zoh_fuse(self.imu.iter().copied(), gnss, self.mag.iter().copied()).collect::<Result<_, _>>()?)
    }
}

pub fn parse_log(path: impl AsRef<Path>) -> Result<LogBundle, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_log_reader(file)
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Parses a log from any reader; see the module docs for the format.
pub fn parse_log_reader<R: Read>(reader: R) -> Result<LogBundle, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut index = [0usize; 8];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| IngestError::Schema(format!("missing required column '{name}'")))?;
    }

    let mut imu = Vec::new();
    let mut gnss = Vec::new();
    let mut mag = Vec::new();
    let mut mag_reference = None;
    let mut origin = None;
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| IngestError::Malformed { line, message };
        let field = |i: usize| row.get(index[i]).unwrap_or("");
        let number = |i: usize| -> Result<Option<f64>, IngestError> {
            let s = field(i);
            if s.is_empty() {
                return Ok(None);
            }
            let v: f64 = s.parse().map_err(|_| bad(format!("column '{}' is not a number: '{s}'", COLUMNS[i])))?;
            if v.is_finite() {
                Ok(Some(v))
            } else {
                Err(bad(format!("column '{}' is not finite", COLUMNS[i])))
            }
        };
        let required = |i: usize| number(i)?.ok_or_else(|| bad(format!("column '{}' is empty", COLUMNS[i])));
        let triple = |first: usize| -> Result<Vec3<f64>, IngestError> {
            Ok(Vec3::new(required(first)?, required(first + 1)?, required(first + 2)?))
        };
        let kind = field(0).to_ascii_uppercase();
        let stamp = || required(1);
        match kind.as_str() {
            "IMU" => imu.push(ImuSample {
                stamp: stamp()?,
                input: ImuInput {
                    omega: triple(2)?,
                    accel: triple(5)?,
                },
            }),
            "GNSS" => {
                let p = triple(2)?;
                let v = [number(5)?, number(6)?, number(7)?];
                let velocity = match v {
                    [Some(n), Some(e), Some(d)] => Some(Vec3::new(n, e, d)),
                    [None, None, None] => None,
                    _ => return Err(bad("GNSS velocity must have all three components or none".into())),
                };
                let fix = LlaFix::new(p.x, p.y, p.z, stamp()?).map_err(|e| bad(e.to_string()))?;
                gnss.push(GnssRecord { fix, velocity });
            }
            "MAG" => mag.push(MagSample {
                stamp: stamp()?,
                field: triple(2)?,
            }),
            "MAGREF" => {
                let m = triple(2)?;
                if m.norm() == 0.0 {
                    return Err(bad("reference field must be nonzero".into()));
                }
                mag_reference = Some(m);
            }
            "ORIGIN" => {
                let p = triple(2)?;
                let at = number(1)?.unwrap_or(0.0);
                origin = Some(LlaFix::new(p.x, p.y, p.z, at).map_err(|e| bad(e.to_string()))?);
            }
            other => return Err(bad(format!("unknown row type '{other}'"))),
        }
    }

    sort_dedup(&mut imu, |s| s.stamp);
    sort_dedup(&mut gnss, |g| g.fix.stamp);
    sort_dedup(&mut mag, |m| m.stamp);
    let epoch = imu.first().ok_or(IngestError::NoImu)?.stamp;
    if epoch != 0.0 {
        imu.iter_mut().for_each(|s| s.stamp -= epoch);
        gnss.iter_mut().for_each(|g| g.fix.stamp -= epoch);
        mag.iter_mut().for_each(|m| m.stamp -= epoch);
    }
    Ok(LogBundle {
        imu,
        gnss,
        mag,
        mag_reference,
        origin,
        epoch,
    })
}

/// Stable sort by stamp; of rows sharing a stamp the last one in the file wins.
fn sort_dedup<S>(v: &mut Vec<S>, stamp: impl Fn(&S) -> f64) {
    v.sort_by(|a, b| stamp(a).total_cmp(&stamp(b)));
    v.reverse();
    v.dedup_by(|a, b| stamp(a) == stamp(b));
    v.reverse();
}

/// Writes a bundle in the log format. Stamps are shifted back by the epoch
/// and all numbers use shortest round-trip formatting, so a bundle with
/// epoch 0 parses back bit-identically.
pub fn write_log<W: Write>(bundle: &LogBundle, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", COLUMNS.join(","))?;
    let t = |s: f64| s + bundle.epoch;
    if let Some(o) = &bundle.origin {
        writeln!(w, "ORIGIN,{},{},{},{},,,", t(o.stamp), o.latitude, o.longitude, o.altitude)?;
    }
    if let Some(m) = &bundle.mag_reference {
        writeln!(w, "MAGREF,0,{},{},{},,,", m.x, m.y, m.z)?;
    }
    for s in &bundle.imu {
        let (g, a) = (s.input.omega, s.input.accel);
        writeln!(w, "IMU,{},{},{},{},{},{},{}", t(s.stamp), g.x, g.y, g.z, a.x, a.y, a.z)?;
    }
    for g in &bundle.gnss {
        let f = &g.fix;
        match g.velocity {
            Some(v) => writeln!(w, "GNSS,{},{},{},{},{},{},{}", t(f.stamp), f.latitude, f.longitude, f.altitude, v.x, v.y, v.z)?,
            None => writeln!(w, "GNSS,{},{},{},{},,,", t(f.stamp), f.latitude, f.longitude, f.altitude)?,
        }
    }
    for m in &bundle.mag {
        writeln!(w, "MAG,{},{},{},{},,,", t(m.stamp), m.field.x, m.field.y, m.field.z)?;
    }
    w.flush()
}
