//! Gain certificates for MCPG.
//!
//! Under MCPG with gain `mu` and an evader whose curvature is bounded by
//! `u_e_max`, the cost ratio obeys `gamma' <= -(1 - gamma^2) c0 + sqrt(1 - gamma^2) c1`
//! whenever `|r| >= r0`, where `mu = ((1+nu)/(1-nu)) ((1+nu)/r0 + c0)` and
//! `c1 = nu^2 (1+nu) u_e_max / (1-nu)^2`. Taking `c0 >= 2 c1 / sqrt(eps)`
//! turns this into `gamma' <= -c2 (1 - gamma^2)` with `c2 = c0 - c1/sqrt(eps)`
//! while `1 - gamma^2 > eps`, which integrates to
//! `gamma(t) <= tanh(atanh(gamma0) - c2 t)`. The baseline cannot shrink below
//! `r0` before `T = (|r(0)| - r0) / (1 + nu)`, so a large enough `c2` forces
//! `gamma <= -1 + eps` by time `T`.
//!
//! [`design_certificate`] picks the smallest `c0` meeting both conditions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("speed ratio nu must lie in [0, 1)")]
    InvalidSpeedRatio,
    #[error("evader steering bound must be finite and non-negative")]
    UnboundedEvader,
    #[error("initial cost ratio is +1 (pure lengthening); no finite gain helps from there")]
    DegenerateStart,
    #[error("guaranteed-region radius r0 must satisfy 0 < r0 < |r(0)|")]
    InvalidGeometry,
    #[error("camouflage tolerance must lie in (0, 1)")]
    InvalidEpsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCertificate {
    /// Radius outside which the bound is guaranteed.
    pub r0: f64,
    pub epsilon: f64,
    pub epsilon_target: f64,
    pub gamma0: f64,
    pub c1: f64,
    pub c0: f64,
    pub c2: f64,
    pub mu: f64,
    /// Guaranteed horizon `T`.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub u_e_max: f64,
    pub nu: f64,
    /// `|r(0)|`.
    pub r0_init: f64,
    /// The starting geometry already satisfies `gamma0 <= -1 + epsilon_target`.
    pub met_at_start: bool,
}

impl GainCertificate {
    /// Cost-ratio level the certificate guarantees to reach.
    pub fn target_gamma(&self) -> f64 {
        -1.0 + self.epsilon
    }
}

fn check_nu(nu: f64) -> Result<(), DesignError> {
    if (0.0..1.0).contains(&nu) {
        Ok(())
    } else {
        Err(DesignError::InvalidSpeedRatio)
    }
}

/// Disturbance constant `c1 = nu^2 (1+nu) u_e_max / (1-nu)^2`.
pub fn compute_c1(nu: f64, u_e_max: f64) -> Result<f64, DesignError> {
    check_nu(nu)?;
    if !(u_e_max.is_finite() && u_e_max >= 0.0) {
        return Err(DesignError::UnboundedEvader);
    }
    let slow = 1.0 - nu;
    Ok(nu * nu * (1.0 + nu) * u_e_max / (slow * slow))
}

/// `min(epsilon_target, 1 - gamma0^2)`, so the bound applies from `t = 0`
/// even when the start is near pure lengthening.
pub fn choose_epsilon(epsilon_target: f64, gamma0: f64) -> Result<f64, DesignError> {
    if !(epsilon_target > 0.0 && epsilon_target < 1.0) {
        return Err(DesignError::InvalidEpsilon);
    }
    if !(-1.0..1.0).contains(&gamma0) {
        return Err(DesignError::DegenerateStart);
    }
    Ok(epsilon_target.min((1.0 - gamma0) * (1.0 + gamma0)))
}

/// Smallest `c2` for which the envelope reaches `-1 + epsilon` by `T`.
pub fn required_c2(nu: f64, gamma0: f64, epsilon: f64, r_init: f64, r0: f64) -> Result<f64, DesignError> {
    check_nu(nu)?;
    if gamma0.is_nan() || gamma0.abs() >= 1.0 {
        return Err(DesignError::DegenerateStart);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DesignError::InvalidEpsilon);
    }
    if !(r0 > 0.0 && r_init.is_finite() && r_init > r0) {
        return Err(DesignError::InvalidGeometry);
    }
    let target = 0.5 * (epsilon / (2.0 - epsilon)).ln();
    Ok((1.0 + nu) * (gamma0.atanh() - target) / (r_init - r0))
}

/// `mu = ((1+nu)/(1-nu)) ((1+nu)/r0 + c0)`.
pub fn gain_from_decomposition(nu: f64, r0: f64, c0: f64) -> f64 {
    (1.0 + nu) / (1.0 - nu) * ((1.0 + nu) / r0 + c0)
}

/// Inputs to [`design_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateRequest {
    pub nu: f64,
    pub u_e_max: f64,
    pub gamma0: f64,
    /// `|r(0)|`.
    pub r_init: f64,
    pub epsilon_target: f64,
    /// Guaranteed-region radius; `r_init / 100` when `None`.
    pub r0: Option<f64>,
}

pub fn design_certificate(req: &CertificateRequest) -> Result<GainCertificate, DesignError> {
    let CertificateRequest { nu, u_e_max, gamma0, r_init, epsilon_target, .. } = *req;
    let c1 = compute_c1(nu, u_e_max)?;
    let mut epsilon = choose_epsilon(epsilon_target, gamma0)?;
    if !(r_init.is_finite() && r_init > 0.0) {
        return Err(DesignError::InvalidGeometry);
    }
    let r0 = req.r0.unwrap_or(r_init / 100.0);
    if !(r0 > 0.0 && r0 < r_init) {
        return Err(DesignError::InvalidGeometry);
    }

    let met_at_start = gamma0 <= -1.0 + epsilon_target;
    let c2_required = if met_at_start {
        if epsilon == 0.0 {
            // gamma0 == -1 exactly: already camouflaged, keep the requested tolerance
            epsilon = epsilon_target;
        }
        0.0
    } else {
        required_c2(nu, gamma0, epsilon, r_init, r0)?
    };

    let disturbance = c1 / epsilon.sqrt();
    // c0 >= 2 c1/sqrt(eps)  <=>  c2 >= c1/sqrt(eps)
    let c2 = c2_required.max(disturbance);
    let c0 = c2 + disturbance;
    let mu = gain_from_decomposition(nu, r0, c0);
    let horizon = if met_at_start { 0.0 } else { (r_init - r0) / (1.0 + nu) };

    Ok(GainCertificate {
        r0,
        epsilon,
        epsilon_target,
        gamma0,
        c1,
        c0,
        c2,
        mu,
        horizon,
        u_e_max,
        nu,
        r0_init: r_init,
        met_at_start,
    })
}

/// Dimensionless navigation constant `mu r0` comparable to a PPNG gain.
pub fn ppng_equivalent_gain(cert: &GainCertificate) -> f64 {
    cert.mu * cert.r0
}
