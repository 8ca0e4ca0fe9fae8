//! Per-run summary JSON.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::gain_design::GainCertificate;
use crate::metrics::{envelope_report, gamma_non_increasing, EnvelopeReport};
use crate::simulation::{Termination, TrajectoryRecord};

pub const SUMMARY_SCHEMA: u32 = 1;

/// Per-sample rise in gamma tolerated when judging monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub holds: bool,
    #[serde(flatten)]
    pub report: EnvelopeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub label: String,
    pub pursuer_law: String,
    pub evader_program: String,
    pub nu: f64,
    pub step_size: f64,
    pub termination: Termination,
    pub capture_time: Option<f64>,
    pub final_time: f64,
    pub samples: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_final: f64,
    pub gamma_non_increasing: bool,
    pub peak_residual: f64,
    pub peak_abs_u_p: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<GainCertificate>,
    /// `None` without a certificate, or when the certificate does not
    /// describe this run.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub envelope_check: Option<EnvelopeCheck>,
}

pub fn summarize(record: &TrajectoryRecord, cert: Option<&GainCertificate>) -> RunSummary {
    let samples = &record.samples;
    let gammas = samples.iter().map(|s| s.metrics.gamma);
    let gamma_min = gammas.clone().fold(f64::INFINITY, f64::min);
    let gamma_max = gammas.fold(f64::NEG_INFINITY, f64::max);
    let peak_residual = samples.iter().map(|s| s.metrics.residual).fold(0.0, f64::max);
    let peak_abs_u_p = samples.iter().map(|s| s.u_p.abs()).fold(0.0, f64::max);
    let sc = &record.scenario;
    RunSummary {
        schema: SUMMARY_SCHEMA,
        label: sc.label.clone(),
        pursuer_law: sc.pursuer_law.name().to_string(),
        evader_program: sc.evader_program.name().to_string(),
        nu: sc.nu,
        step_size: sc.step_size,
        termination: record.termination,
        capture_time: record.capture_time(),
        final_time: samples.last().map_or(0.0, |s| s.t),
        samples: samples.len(),
        gamma_min,
        gamma_max,
        gamma_final: samples.last().map_or(f64::NAN, |s| s.metrics.gamma),
        gamma_non_increasing: gamma_non_increasing(samples, MONOTONE_SLACK),
        peak_residual,
        peak_abs_u_p,
        certificate: cert.copied(),
        envelope_check: cert
            .and_then(|c| envelope_report(record, c).ok())
            .map(|report| EnvelopeCheck { holds: report.holds(), report }),
    }
}

pub fn write_summary_json<W: Write>(
    record: &TrajectoryRecord,
    cert: Option<&GainCertificate>,
    mut sink: W,
) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut sink, &summarize(record, cert))?;
    sink.write_all(b"\n")
}
