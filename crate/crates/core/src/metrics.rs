//! Motion-camouflage observables.
//!
//! The cost ratio `gamma = (r/|r|) . (r'/|r'|)` lies in `[-1, 1]`: `-1` is pure
//! shortening of the baseline (the camouflaged approach), `0` pure rotation,
//! `+1` pure lengthening. The signed transverse relative velocity
//! `w = -(r/|r|) . r'^perp` vanishes exactly in camouflage states, and
//! `gamma^2 + w^2/|r'|^2 = 1`, so `1 - gamma^2` measures the distance from
//! camouflage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::EngagementState;
use crate::gain_design::GainCertificate;
use crate::geometry::PlanarVector;
use crate::guidance::PursuerLaw;
use crate::simulation::{Sample, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("baseline has zero length (collision)")]
    ZeroBaseline,
    #[error("initial cost ratio is +/-1; the envelope is singular there")]
    DegenerateGamma,
    #[error("trajectory has no samples")]
    EmptyTrace,
    #[error("certificate does not match the trajectory: {0}")]
    CertificateMismatch(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSample {
    /// `r = r_p - r_e`.
    pub baseline: PlanarVector,
    pub baseline_len: f64,
    /// `r' = x_p - nu x_e`.
    pub rel_vel: PlanarVector,
    pub gamma: f64,
    pub w_signed: f64,
    /// Line-of-sight rotation rate, `w / |r|`.
    pub los_rate: f64,
    /// `1 - gamma^2`, evaluated as `(w/|r'|)^2` to keep precision near camouflage.
    pub residual: f64,
}

impl MetricSample {
    /// `gamma + 1`, evaluated without cancellation when gamma is near `-1`.
    pub fn gap_to_camouflage(&self) -> f64 {
        if self.gamma < 0.0 {
            self.residual / (1.0 - self.gamma)
        } else {
            1.0 + self.gamma
        }
    }
}

pub fn compute_metrics(s: &EngagementState, nu: f64) -> Result<MetricSample, MetricsError> {
    let r = s.baseline();
    let len = r.norm();
    if len == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    let dir = PlanarVector::new(r.x / len, r.y / len);
    let rel_vel = s.relative_velocity(nu);
    // |r'| >= 1 - nu > 0 for nu < 1
    let speed = rel_vel.norm();
    let gamma = (dir.dot(rel_vel) / speed).clamp(-1.0, 1.0);
    let w_signed = -dir.dot(rel_vel.perp());
    let transverse = w_signed / speed;
    Ok(MetricSample {
        baseline: r,
        baseline_len: len,
        rel_vel,
        gamma,
        w_signed,
        los_rate: w_signed / len,
        residual: (transverse * transverse).min(1.0),
    })
}

/// Baseline decomposed against a fixed reference bearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTrace {
    /// Unit bearing of the first sample's baseline.
    pub reference_bearing: PlanarVector,
    /// `r(t) . reference_bearing`.
    pub lambda_along: Vec<f64>,
    /// `|r(t) - (r(t) . ref) ref|`.
    pub transverse_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamouflageCheck {
    pub trace: BaselineTrace,
    /// Largest `transverse_residual / |r(t)|` over the record.
    pub max_relative_residual: f64,
    pub holds: bool,
}

/// Whether the baseline keeps the bearing of its first sample, to a relative
/// tolerance `tol`.
pub fn camouflage_test(record: &TrajectoryRecord, tol: f64) -> Result<CamouflageCheck, MetricsError> {
    let first = record.samples.first().ok_or(MetricsError::EmptyTrace)?;
    let reference = first.metrics.baseline.unit().map_err(|_| MetricsError::ZeroBaseline)?;
    let mut lambda_along = Vec::with_capacity(record.samples.len());
    let mut transverse_residual = Vec::with_capacity(record.samples.len());
    let mut worst: f64 = 0.0;
    for sample in &record.samples {
        let r = sample.metrics.baseline;
        let len = r.norm();
        if len == 0.0 {
            return Err(MetricsError::ZeroBaseline);
        }
        let along = r.dot(reference);
        let across = reference.cross(r).abs();
        lambda_along.push(along);
        transverse_residual.push(across);
        worst = worst.max(across / len);
    }
    Ok(CamouflageCheck {
        trace: BaselineTrace { reference_bearing: reference, lambda_along, transverse_residual },
        max_relative_residual: worst,
        holds: worst <= tol,
    })
}

/// Upper envelope `tanh(atanh(gamma0) - c2 t)` on the cost ratio.
pub fn gamma_envelope(gamma0: f64, c2: f64, t: f64) -> Result<f64, MetricsError> {
    if gamma0.is_nan() || gamma0.abs() >= 1.0 {
        return Err(MetricsError::DegenerateGamma);
    }
    Ok((gamma0.atanh() - c2 * t).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// Samples inside the certificate's region of validity.
    pub checked: usize,
    pub violations: usize,
    /// Largest `gamma - envelope` among checked samples (may be negative).
    pub worst_excess: f64,
    pub slack: f64,
}

impl EnvelopeReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

fn certificate_matches(record: &TrajectoryRecord, cert: &GainCertificate) -> Result<(), MetricsError> {
    let sc = &record.scenario;
    if sc.nu != cert.nu {
        return Err(MetricsError::CertificateMismatch("speed ratio differs"));
    }
    match sc.pursuer_law {
        PursuerLaw::Mcpg { mu } if mu == cert.mu => {}
        PursuerLaw::Mcpg { .. } => return Err(MetricsError::CertificateMismatch("gain differs")),
        _ => return Err(MetricsError::CertificateMismatch("pursuer law is not MCPG")),
    }
    if sc.evader_program.bound() > cert.u_e_max {
        return Err(MetricsError::CertificateMismatch("evader steering exceeds certified bound"));
    }
    if let Some(first) = record.samples.first() {
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        if !rel(first.metrics.baseline_len, cert.r0_init) {
            return Err(MetricsError::CertificateMismatch("initial baseline length differs"));
        }
        if !rel(first.metrics.gamma, cert.gamma0) {
            return Err(MetricsError::CertificateMismatch("initial cost ratio differs"));
        }
    }
    Ok(())
}

/// Compare a MCPG trajectory against the certificate's envelope on every
/// sample with `t <= T`, `|r| >= r0` and `gamma > -1 + eps`, allowing a
/// discretization slack of `10 h^2`.
pub fn envelope_report(record: &TrajectoryRecord, cert: &GainCertificate) -> Result<EnvelopeReport, MetricsError> {
    certificate_matches(record, cert)?;
    let h = record.scenario.step_size;
    let slack = 10.0 * h * h;
    let mut report = EnvelopeReport { slack, worst_excess: f64::NEG_INFINITY, ..Default::default() };
    for sample in &record.samples {
        let m = &sample.metrics;
        if sample.t > cert.horizon || m.baseline_len < cert.r0 || m.gamma <= -1.0 + cert.epsilon {
            continue;
        }
        let bound = gamma_envelope(cert.gamma0, cert.c2, sample.t)?;
        let excess = m.gamma - bound;
        report.checked += 1;
        report.worst_excess = report.worst_excess.max(excess);
        if excess > slack {
            report.violations += 1;
        }
    }
    Ok(report)
}

pub fn check_envelope(record: &TrajectoryRecord, cert: &GainCertificate) -> Result<bool, MetricsError> {
    Ok(envelope_report(record, cert)?.holds())
}

/// Whether gamma never rises by more than `slack` between consecutive samples.
pub fn gamma_non_increasing(samples: &[Sample], slack: f64) -> bool {
    samples.windows(2).all(|w| w[1].metrics.gamma <= w[0].metrics.gamma + slack)
}

/// Sustained peak of the gap to camouflage once the initial transient is over.
///
/// The transient lasts until gamma first drops below `-1 + sqrt(eps)` and then
/// stops decreasing; the peak is taken over the remaining samples. Returns
/// `None` if gamma never gets that low, and the final gap if it decreases
/// all the way to the end.
pub fn post_transient_peak(samples: &[Sample], epsilon: f64) -> Option<f64> {
    let threshold = -1.0 + epsilon.sqrt();
    let crossing = samples.iter().position(|s| s.metrics.gamma < threshold)?;
    let gaps: Vec<f64> = samples[crossing..].iter().map(|s| s.metrics.gap_to_camouflage()).collect();
    let settled = gaps.windows(2).position(|w| w[1] > w[0]).unwrap_or(gaps.len() - 1);
    gaps[settled..].iter().copied().reduce(f64::max)
}

/// First sample time at which `gamma <= -1 + eps`.
pub fn first_time_within(samples: &[Sample], epsilon: f64) -> Option<f64> {
    samples.iter().find(|s| s.metrics.gamma <= -1.0 + epsilon).map(|s| s.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ParticleState;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn state(r: PlanarVector, hp: f64, he: f64) -> EngagementState {
        EngagementState::new(ParticleState::new(r, hp), ParticleState::new(PlanarVector::ZERO, he), 0.0)
    }

    #[test]
    fn pure_shortening() {
        // pursuer at +x heading -x, evader stationary
        let m = compute_metrics(&state(PlanarVector::new(5.0, 0.0), PI, 0.0), 0.0).unwrap();
        assert_eq!(m.gamma, -1.0);
        assert!(m.w_signed.abs() < 1e-15);
    }

    #[test]
    fn pure_rotation() {
        let m = compute_metrics(&state(PlanarVector::new(5.0, 0.0), PI / 2.0, 0.0), 0.0).unwrap();
        assert!(m.gamma.abs() < 1e-15);
        assert!((m.w_signed.abs() - m.rel_vel.norm()).abs() < 1e-15);
    }

    #[test]
    fn worked_example() {
        // r = (2,0), r' = x_p - nu x_e = (-1,1) with nu = 0.9. With x_p = (a,b):
        // |x_p - (-1,1)| = nu and |x_p| = 1 give a - b = (nu^2 - 3)/2.
        let nu: f64 = 0.9;
        let d = (nu * nu - 3.0) / 2.0;
        let b = (-d + (2.0 - d * d).sqrt()) / 2.0;
        let a = b + d;
        let x_e = PlanarVector::new(a + 1.0, b - 1.0) * (1.0 / nu);
        let s = state(PlanarVector::new(2.0, 0.0), b.atan2(a), x_e.angle());
        let m = compute_metrics(&s, nu).unwrap();
        assert!((m.rel_vel - PlanarVector::new(-1.0, 1.0)).norm() < 1e-14);
        assert!((m.gamma + FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((m.w_signed - 1.0).abs() < 1e-14);
        assert!((m.los_rate - 0.5).abs() < 1e-14);
        let identity = m.gamma * m.gamma + m.w_signed * m.w_signed / m.rel_vel.norm_squared();
        assert!((identity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_baseline_is_an_error() {
        let s = state(PlanarVector::ZERO, 0.0, 0.0);
        assert_eq!(compute_metrics(&s, 0.5), Err(MetricsError::ZeroBaseline));
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(gamma_envelope(0.3, 2.0, 0.0).unwrap(), 0.3f64.atanh().tanh());
        let c2 = 0.5f64.atanh();
        assert!((gamma_envelope(0.0, c2, 1.0).unwrap() + 0.5).abs() < 1e-15);
        let late = gamma_envelope(0.9, 1.0, 50.0).unwrap();
        assert!(late > -1.0 - 1e-15 && late < -1.0 + 1e-12);
        assert_eq!(gamma_envelope(1.0, 1.0, 1.0), Err(MetricsError::DegenerateGamma));
        assert_eq!(gamma_envelope(-1.0, 1.0, 1.0), Err(MetricsError::DegenerateGamma));
    }

    proptest! {
        #[test]
        fn metric_identities(
            x in -100.0..100.0f64, y in -100.0..100.0f64,
            hp in -7.0..7.0f64, he in -7.0..7.0f64, nu in 0.0..0.99f64,
        ) {
            prop_assume!(x.hypot(y) > 1e-6);
            let s = state(PlanarVector::new(x, y), hp, he);
            let m = compute_metrics(&s, nu).unwrap();
            let speed = m.rel_vel.norm();
            prop_assert!((-1.0..=1.0).contains(&m.gamma));
            prop_assert!(m.residual >= 0.0);
            prop_assert!((m.residual - (1.0 - m.gamma * m.gamma)).abs() < 1e-12);
            prop_assert!((m.gamma * m.gamma + m.w_signed * m.w_signed / (speed * speed) - 1.0).abs() < 1e-10);
            prop_assert!(speed >= 1.0 - nu - 1e-12 && speed <= 1.0 + nu + 1e-12);
            // |w| equals the norm of the vector transverse component
            let dir = m.baseline.unit().unwrap();
            let transverse = m.rel_vel - dir * dir.dot(m.rel_vel);
            prop_assert!((transverse.norm() - m.w_signed.abs()).abs() < 1e-12);
            let gap = m.gap_to_camouflage();
            prop_assert!((gap - (1.0 + m.gamma)).abs() < 1e-12);
        }

        #[test]
        fn envelope_is_monotone(g0 in -0.999..0.999f64, c2 in 0.0..10.0f64, t in 0.0..5.0f64, dt in 0.0..1.0f64, dc in 0.0..1.0f64) {
            let e = gamma_envelope(g0, c2, t).unwrap();
            prop_assert!(gamma_envelope(g0, c2, t + dt).unwrap() <= e);
            prop_assert!(gamma_envelope(g0, c2 + dc, t).unwrap() <= e);
        }
    }
}
