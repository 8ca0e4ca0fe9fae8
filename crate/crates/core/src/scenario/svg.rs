//! Static SVG 1.1 figures: pursuer path solid, evader path dashed, and light
//! baseline segments joining simultaneous positions.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::geometry::PlanarVector;
use crate::simulation::TrajectoryRecord;

const WIDTH: f64 = 800.0;
const MIN_HEIGHT: f64 = 200.0;
const MAX_HEIGHT: f64 = 1600.0;
const MARGIN: f64 = 0.05;
const MAX_POLYLINE_POINTS: usize = 4000;
const PATH_STROKE: &str = "#222222";
const PATH_WIDTH: f64 = 1.5;
const EVADER_DASH: &str = "6,4";
const BASELINE_STROKE: &str = "#bbbbbb";
const BASELINE_WIDTH: f64 = 0.75;
const MARKER_RADIUS: f64 = 3.0;
const OVERLAY_DASHES: [&str; 4] = ["none", "2,3", "10,3,2,3", "12,6"];

/// World-to-pixel map with equal scale on both axes and y pointing up.
struct Frame {
    min: PlanarVector,
    scale: f64,
    offset: PlanarVector,
    height: f64,
}

impl Frame {
    fn fit<I: IntoIterator<Item = PlanarVector>>(points: I) -> Frame {
        let (mut lo, mut hi) =
            (PlanarVector::new(f64::INFINITY, f64::INFINITY), PlanarVector::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = PlanarVector::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = PlanarVector::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !(lo.x.is_finite() && lo.y.is_finite() && hi.x.is_finite() && hi.y.is_finite()) {
            lo = PlanarVector::ZERO;
            hi = PlanarVector::new(1.0, 1.0);
        }
        let span = (hi - lo).x.max((hi - lo).y).max(1e-9);
        let (w, h) = ((hi.x - lo.x).max(span * 1e-3), (hi.y - lo.y).max(span * 1e-3));
        let inner = WIDTH * (1.0 - 2.0 * MARGIN);
        let scale = (inner / w).min((MAX_HEIGHT * (1.0 - 2.0 * MARGIN)) / h);
        let height = (h * scale / (1.0 - 2.0 * MARGIN)).clamp(MIN_HEIGHT, MAX_HEIGHT);
        let offset = PlanarVector::new((WIDTH - w * scale) / 2.0, (height - h * scale) / 2.0);
        Frame { min: lo, scale, offset, height }
    }

    fn map(&self, p: PlanarVector) -> (f64, f64) {
        let x = self.offset.x + (p.x - self.min.x) * self.scale;
        let y = self.height - (self.offset.y + (p.y - self.min.y) * self.scale);
        (x, y)
    }
}

fn decimated(len: usize) -> Vec<usize> {
    if len <= MAX_POLYLINE_POINTS {
        return (0..len).collect();
    }
    let stride = len.div_ceil(MAX_POLYLINE_POINTS - 1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

/// `count` indices spread evenly over `0..len`, endpoints included.
pub fn baseline_indices(len: usize, count: usize) -> Vec<usize> {
    match (len, count) {
        (0, _) | (_, 0) => Vec::new(),
        (_, 1) => vec![0],
        _ => (0..count).map(|j| ((j as f64) * (len - 1) as f64 / (count - 1) as f64).round() as usize).collect(),
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[PlanarVector], class: &str, dash: &str) {
    let _ = write!(
        out,
        r#"<polyline class="{class}" fill="none" stroke="{PATH_STROKE}" stroke-width="{PATH_WIDTH}" stroke-dasharray="{dash}" points=""#
    );
    for (i, &p) in decimated(pts.len()).iter().map(|&i| &pts[i]).enumerate() {
        let (x, y) = frame.map(p);
        let sep = if i == 0 { "" } else { " " };
        let _ = write!(out, "{sep}{x:.6},{y:.6}");
    }
    out.push_str("\"/>\n");
}

fn marker(out: &mut String, frame: &Frame, p: PlanarVector, class: &str, filled: bool) {
    let (x, y) = frame.map(p);
    let fill = if filled { PATH_STROKE } else { "white" };
    let _ = writeln!(
        out,
        r#"<circle class="{class}" cx="{x:.6}" cy="{y:.6}" r="{MARKER_RADIUS}" fill="{fill}" stroke="{PATH_STROKE}" stroke-width="{PATH_WIDTH}"/>"#
    );
}

fn header(out: &mut String, frame: &Frame, title: &str) {
    let h = frame.height;
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{h:.6}" viewBox="0 0 {WIDTH} {h:.6}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Figure of one trajectory with `baseline_count` baseline segments.
pub fn emit_figure_svg<W: Write>(record: &TrajectoryRecord, baseline_count: usize, mut sink: W) -> io::Result<()> {
    let pursuer: Vec<PlanarVector> = record.samples.iter().map(|s| s.pursuer.position).collect();
    let evader: Vec<PlanarVector> = record.samples.iter().map(|s| s.evader.position).collect();
    let frame = Frame::fit(pursuer.iter().chain(&evader).copied());
    let mut out = String::new();
    header(&mut out, &frame, &record.scenario.label);

    for i in baseline_indices(pursuer.len(), baseline_count) {
        let (x1, y1) = frame.map(pursuer[i]);
        let (x2, y2) = frame.map(evader[i]);
        let _ = writeln!(
            out,
            r#"<line class="baseline" x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}" stroke="{BASELINE_STROKE}" stroke-width="{BASELINE_WIDTH}"/>"#
        );
    }
    match pursuer.len() {
        0 => {}
        1 => {
            marker(&mut out, &frame, pursuer[0], "pursuer", true);
            marker(&mut out, &frame, evader[0], "evader", false);
        }
        _ => {
            polyline(&mut out, &frame, &pursuer, "pursuer", "none");
            polyline(&mut out, &frame, &evader, "evader", EVADER_DASH);
        }
    }
    out.push_str("</svg>\n");
    sink.write_all(out.as_bytes())
}

/// Pursuer paths of several runs against a common evader, one dash style per
/// run, with a legend.
pub fn emit_overlay_svg<W: Write>(runs: &[(&str, &TrajectoryRecord)], mut sink: W) -> io::Result<()> {
    let frame = Frame::fit(
        runs.iter().flat_map(|(_, r)| r.samples.iter().flat_map(|s| [s.pursuer.position, s.evader.position])),
    );
    let mut out = String::new();
    header(&mut out, &frame, "comparison");

    // the evader path of the longest run covers the others
    if let Some((_, longest)) = runs.iter().max_by_key(|(_, r)| r.samples.len()) {
        let evader: Vec<PlanarVector> = longest.samples.iter().map(|s| s.evader.position).collect();
        let _ = writeln!(out, r#"<g stroke-opacity="0.6">"#);
        polyline(&mut out, &frame, &evader, "evader", EVADER_DASH);
        out.push_str("</g>\n");
    }
    for (k, (name, record)) in runs.iter().enumerate() {
        let pursuer: Vec<PlanarVector> = record.samples.iter().map(|s| s.pursuer.position).collect();
        let dash = OVERLAY_DASHES[k % OVERLAY_DASHES.len()];
        polyline(&mut out, &frame, &pursuer, &format!("pursuer {}", escape(name)), dash);
        let y = 20.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="10" y1="{y:.6}" x2="40" y2="{y:.6}" stroke="{PATH_STROKE}" stroke-width="{PATH_WIDTH}" stroke-dasharray="{dash}"/><text x="46" y="{:.6}" font-family="sans-serif" font-size="12">{}</text>"#,
            y + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    sink.write_all(out.as_bytes())
}
