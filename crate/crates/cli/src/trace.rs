//! Per-step CSV trace.

use std::fmt::Write;

use insync::analysis::StepRecord;
use insync::lie::SE23Element;

const AXES: [&str; 3] = ["n", "e", "d"];

/// Column names: time, truth (R row-major, v, p), estimate (same layout),
/// then error metrics, cost and PE margin.
pub fn header() -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["", "hat_"] {
        for i in 1..=3 {
            for j in 1..=3 {
                cols.push(format!("r{prefix}{i}{j}"));
            }
        }
        cols.extend(AXES.iter().map(|a| format!("v{prefix}{a}")));
        cols.extend(AXES.iter().map(|a| format!("p{prefix}{a}")));
    }
    cols.extend(["attitude_angle", "vel_err", "pos_err", "lyapunov", "pe_margin"].map(String::from));
    cols
}

fn push_state(row: &mut Vec<Option<f64>>, x: Option<&SE23Element<f64>>) {
    match x {
        Some(x) => {
            let r = x.rotation.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    row.push(Some(r[(i, j)]));
                }
            }
            row.extend(x.velocity().iter().map(|v| Some(*v)));
            row.extend(x.position().iter().map(|v| Some(*v)));
        }
        None => row.extend(std::iter::repeat(None).take(15)),
    }
}

/// Renders the trace. Unknown values (truth in replay, PE margin before the
/// first full window) are empty fields. Numbers use shortest round-trip
/// formatting, so identical runs give identical bytes.
pub fn render(records: &[StepRecord<f64>], pe_margins: &[Option<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&header().join(","));
    out.push('\n');
    let mut row: Vec<Option<f64>> = Vec::with_capacity(36);
    for (k, r) in records.iter().enumerate() {
        row.clear();
        row.push(Some(r.stamp));
        push_state(&mut row, r.truth.as_ref());
        push_state(&mut row, Some(&r.estimate));
        match r.metrics() {
            Some(m) => row.extend([m.attitude_angle, m.velocity_error, m.position_error, m.lyapunov].map(Some)),
            None => row.extend([None; 4]),
        }
        row.push(pe_margins.get(k).copied().flatten());
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if let Some(v) = v {
                write!(out, "{v}").expect("writing to a String cannot fail");
            }
        }
        out.push('\n');
    }
    out
}
