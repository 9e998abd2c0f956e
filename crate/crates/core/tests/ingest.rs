mod common;

use insync::ingest::*;
use insync::lie::Vec3;
use insync::model::{ImuSample, MagSample, WorldConstants};
use insync::sim::CircleScenario;
use proptest::prelude::*;

/// Meridian arc length between two latitudes (deg) by composite Simpson.
fn meridian_arc(lat0: f64, lat1: f64) -> f64 {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let f = |phi: f64| WGS84_A * (1.0 - e2) / (1.0 - e2 * phi.sin().powi(2)).powf(1.5);
    let (a, b) = (lat0.to_radians(), lat1.to_radians());
    let n = 64;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn fix(lat: f64, lon: f64, alt: f64) -> LlaFix {
    LlaFix::new(lat, lon, alt, 0.0).unwrap()
}

#[test]
fn north_offset_matches_meridian_arc() {
    let n = lla_to_ned(&fix(0.0, 0.0, 0.0), &fix(0.001, 0.0, 0.0)).unwrap();
    let arc = meridian_arc(0.0, 0.001);
    assert!((arc - 110.57).abs() < 0.5);
    assert!((n.x - arc).abs() < 1e-3, "{} vs {arc}", n.x);
    for lat in [-60.0, -20.0, 35.0, 47.5, 70.0] {
        let n = lla_to_ned(&fix(lat, 10.0, 0.0), &fix(lat + 0.003, 10.0, 0.0)).unwrap();
        let arc = meridian_arc(lat, lat + 0.003);
        assert!((n.x - arc).abs() < 1e-2, "lat {lat}: {} vs {arc}", n.x);
    }
}

#[test]
fn east_offset_matches_parallel_arc() {
    // Along a parallel the arc is N(φ)·cos φ·Δλ exactly.
    let e2 = WGS84_F * (2.0 - WGS84_F);
    for lat in [0.0f64, 30.0, 60.0] {
        let rn = WGS84_A / (1.0 - e2 * lat.to_radians().sin().powi(2)).sqrt();
        let e = lla_to_ned(&fix(lat, 5.0, 0.0), &fix(lat, 5.002, 0.0)).unwrap();
        assert!((e.y - rn * lat.to_radians().cos() * 0.002f64.to_radians()).abs() < 1e-9);
        assert_eq!(e.x, 0.0);
    }
    let wrap = lla_to_ned(&fix(0.0, 179.9995, 0.0), &fix(0.0, -179.9995, 0.0)).unwrap();
    assert!((wrap.y - 111.32).abs() < 0.1, "{wrap}");
}

proptest! {
    #[test]
    fn conversion_is_locally_additive(
        lat in -80.0f64..80.0, lon in -179.0f64..179.0,
        a in prop::array::uniform3(-200.0f64..200.0), b in prop::array::uniform3(-200.0f64..200.0),
    ) {
        let reference = fix(lat, lon, 100.0);
        let pa = ned_to_lla(&reference, &Vec3::new(a[0], a[1], a[2] / 4.0), 0.0);
        let pb = ned_to_lla(&reference, &Vec3::new(b[0], b[1], b[2] / 4.0), 0.0);
        let mid = fix((pa.latitude + pb.latitude) / 2.0, (pa.longitude + pb.longitude) / 2.0, (pa.altitude + pb.altitude) / 2.0);
        let d1 = lla_to_ned(&reference, &pa).unwrap() - lla_to_ned(&reference, &pb).unwrap();
        let d2 = lla_to_ned(&mid, &pa).unwrap() - lla_to_ned(&mid, &pb).unwrap();
        prop_assert!((d1 - d2).norm() <= 1e-3 * d1.norm().max(1e-9));
    }

    #[test]
    fn inverse_conversion_round_trips(lat in -85.0f64..85.0, lon in -179.0f64..179.0, p in prop::array::uniform3(-500.0f64..500.0)) {
        let reference = fix(lat, lon, 0.0);
        let v = Vec3::new(p[0], p[1], p[2]);
        let back = lla_to_ned(&reference, &ned_to_lla(&reference, &v, 0.0)).unwrap();
        prop_assert!((back - v).norm() < 1e-6);
    }
}

fn simulated_bundle() -> LogBundle {
    let data = CircleScenario::new(WorldConstants::<f64>::ned(), 0.02, 200).generate();
    let origin = fix(47.397742, 8.545594, 488.0);
    LogBundle {
        imu: data.imu.clone(),
        gnss: data
            .gnss
            .iter()
            .step_by(10)
            .map(|g| GnssRecord { fix: ned_to_lla(&origin, &g.position, g.stamp), velocity: g.velocity })
            .collect(),
        mag: data
            .mag
            .iter()
            .step_by(5)
            .map(|m| MagSample { stamp: m.stamp, field: m.field * 48.7 })
            .collect(),
        mag_reference: Some(Vec3::new(23.33, 5.19, -52.80)),
        origin: Some(origin),
        epoch: 0.0,
    }
}

#[test]
fn simulator_log_round_trips_bit_identically() {
    let bundle = simulated_bundle();
    let mut buf = Vec::new();
    write_log(&bundle, &mut buf).unwrap();
    let parsed = parse_log_reader(buf.as_slice()).unwrap();
    assert_eq!(parsed, bundle);
    let mut again = Vec::new();
    write_log(&parsed, &mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn file_round_trip_and_fusion() {
    let bundle = simulated_bundle();
    let dir = std::env::temp_dir().join(format!("insync-ingest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("log.csv");
    write_log(&bundle, std::fs::File::create(&path).unwrap()).unwrap();
    let parsed = parse_log(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(parsed, bundle);

    let events = parsed.events().unwrap();
    assert_eq!(events.len(), 201);
    assert!(events.iter().all(|e| e.measurements.pos.is_some() && e.measurements.mag.is_some()));
    let m = events[7].measurements.mag.unwrap();
    assert!((m.norm() - 1.0).abs() < 1e-15);
    let w = parsed.world().unwrap();
    assert!((w.mag_reference.norm() - 1.0).abs() < 1e-15);
}

#[test]
fn epoch_stamps_are_rebased_and_sorted() {
    let log = "stamp_s,type,f1,f2,f3,f4,f5,f6
1700000000.04,IMU,0,0,0,0,0,-9.81
1700000000.00,IMU,0,0,0,0,0,-9.81
1700000000.02,IMU,0,0,0,0,0,-9.81
1700000000.02,MAG,1,0,0,,,
1700000000.00,MAG,0,1,0,,,
";
    let b = parse_log_reader(log.as_bytes()).unwrap();
    assert_eq!(b.epoch, 1_700_000_000.0);
    let stamps: Vec<f64> = b.imu.iter().map(|s: &ImuSample<f64>| s.stamp).collect();
    assert_eq!(stamps[0], 0.0);
    assert!(stamps.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(b.mag[0].field, Vec3::y());
}

#[test]
fn missing_gnss_gives_no_positions() {
    let log = "type,stamp_s,f1,f2,f3,f4,f5,f6\nIMU,0,0,0,0,0,0,0\nIMU,0.01,0,0,0,0,0,0\n";
    let b = parse_log_reader(log.as_bytes()).unwrap();
    assert!(b.reference().is_none());
    assert!(b.events().unwrap().iter().all(|e| e.measurements.pos.is_none()));
}

#[test]
fn errors_carry_context() {
    let e = parse_log("/nonexistent/log.csv").unwrap_err();
    assert!(matches!(e, IngestError::Io { .. }));
    let e = parse_log_reader("type,stamp_s,f1,f2,f3,f4,f5,f6\nIMU,0,0,0,0,0,0,0\nGNSS,0.2,95,0,0,,,\n".as_bytes()).unwrap_err();
    assert!(e.to_string().contains("line 3"), "{e}");
    let e = parse_log_reader("type,stamp,f1,f2,f3,f4,f5,f6\n".as_bytes()).unwrap_err();
    assert!(e.to_string().contains("stamp_s"), "{e}");
    let e = parse_log_reader("type,stamp_s,f1,f2,f3,f4,f5,f6\n".as_bytes()).unwrap_err();
    assert_eq!(e.to_string(), "no imu samples");
}
