//! Trajectory CSV: a header row then one row per sample.
//!
//! Values use 17 significant digits in scientific notation, which round-trips
//! every finite `f64` exactly.

use std::io::{self, BufRead, Write};

use crate::dynamics::ParticleState;
use crate::geometry::PlanarVector;
use crate::metrics::MetricSample;
use crate::simulation::{Sample, TrajectoryRecord};

pub const CSV_COLUMNS: [&str; 14] =
    ["t", "px", "py", "ptheta", "ex", "ey", "etheta", "u_p", "u_e", "r_norm", "gamma", "w", "los_rate", "residual"];

fn row(s: &Sample) -> [f64; 14] {
    let m = &s.metrics;
    [
        s.t,
        s.pursuer.position.x,
        s.pursuer.position.y,
        s.pursuer.heading,
        s.evader.position.x,
        s.evader.position.y,
        s.evader.heading,
        s.u_p,
        s.u_e,
        m.baseline_len,
        m.gamma,
        m.w_signed,
        m.los_rate,
        m.residual,
    ]
}

pub fn write_trajectory_csv<W: Write>(record: &TrajectoryRecord, sink: W) -> io::Result<()> {
    let mut sink = io::BufWriter::new(sink);
    writeln!(sink, "{}", CSV_COLUMNS.join(","))?;
    for s in &record.samples {
        let values = row(s);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                sink.write_all(b",")?;
            }
            write!(sink, "{v:.16e}")?;
        }
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

/// Parse a trajectory CSV back into samples.
///
/// The baseline and relative velocity are recomputed from the positions and
/// headings since they are not stored as columns.
pub fn read_trajectory_csv<R: BufRead>(source: R, nu: f64) -> io::Result<Vec<Sample>> {
    let invalid = |line: usize, msg: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = source.lines();
    let header = lines.next().transpose()?.ok_or_else(|| invalid(1, "missing header".into()))?;
    if header.trim_end() != CSV_COLUMNS.join(",") {
        return Err(invalid(1, format!("unexpected header `{header}`")));
    }
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(idx + 2, e.to_string()))?;
        let [t, px, py, pth, ex, ey, eth, u_p, u_e, r_norm, gamma, w, los_rate, residual]: [f64; 14] = values
            .try_into()
            .map_err(|v: Vec<f64>| invalid(idx + 2, format!("expected 14 fields, found {}", v.len())))?;
        let pursuer = ParticleState::new(PlanarVector::new(px, py), pth);
        let evader = ParticleState::new(PlanarVector::new(ex, ey), eth);
        let baseline = pursuer.position - evader.position;
        let rel_vel = pursuer.tangent() - nu * evader.tangent();
        samples.push(Sample {
            t,
            pursuer,
            evader,
            u_p,
            u_e,
            metrics: MetricSample { baseline, baseline_len: r_norm, rel_vel, gamma, w_signed: w, los_rate, residual },
        });
    }
    Ok(samples)
}
