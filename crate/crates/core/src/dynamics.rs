//! Unit-speed particle dynamics for the pursuer and evader.
//!
//! Each particle carries a natural Frenet frame `(tangent, normal)` which is
//! driven by a curvature control `u`: `r' = v x`, `x' = v u y`, `y' = -v u x`
//! with `v = 1` for the pursuer and `v = nu` for the evader. Because the frame
//! equations are pure rotations they reduce exactly to a heading angle with
//! `heading' = v u`; that is the form integrated here, so speed and frame
//! orthonormality hold by construction rather than by re-normalization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PlanarVector;
use crate::guidance::GuidanceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("state became non-finite; the step size is likely too large for the feedback gain")]
    NonFiniteState,
    #[error("baseline vanished during an integration stage")]
    ZeroBaseline,
    #[error("pursuer and evader start at the same position")]
    InitialCollision,
}

impl From<GuidanceError> for DynamicsError {
    fn from(e: GuidanceError) -> Self {
        match e {
            GuidanceError::ZeroBaseline => DynamicsError::ZeroBaseline,
        }
    }
}

/// Position and heading of a constant-speed particle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParticleState {
    pub position: PlanarVector,
    /// Unwrapped heading in radians.
    pub heading: f64,
}

impl ParticleState {
    pub fn new(position: PlanarVector, heading: f64) -> Self {
        Self { position, heading }
    }

    #[inline]
    pub fn tangent(&self) -> PlanarVector {
        PlanarVector::from_angle(self.heading)
    }

    #[inline]
    pub fn normal(&self) -> PlanarVector {
        self.tangent().perp()
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite()
    }
}

/// Natural Frenet frame `(tangent, normal)` of a particle.
#[inline]
pub fn frame_of(p: &ParticleState) -> (PlanarVector, PlanarVector) {
    let t = p.tangent();
    (t, t.perp())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EngagementState {
    pub pursuer: ParticleState,
    pub evader: ParticleState,
    pub time: f64,
}

impl EngagementState {
    pub fn new(pursuer: ParticleState, evader: ParticleState, time: f64) -> Self {
        Self { pursuer, evader, time }
    }

    /// Baseline vector `r = r_p - r_e`, pointing from the evader to the pursuer.
    #[inline]
    pub fn baseline(&self) -> PlanarVector {
        self.pursuer.position - self.evader.position
    }

    /// `r' = x_p - nu x_e`.
    #[inline]
    pub fn relative_velocity(&self, nu: f64) -> PlanarVector {
        self.pursuer.tangent() - nu * self.evader.tangent()
    }

    pub fn is_finite(&self) -> bool {
        self.pursuer.is_finite() && self.evader.is_finite() && self.time.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Evader speed as a fraction of pursuer speed, in `[0, 1)`.
    pub nu: f64,
    pub step_size: f64,
    pub capture_radius: f64,
}

/// Time derivative of an [`EngagementState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngagementRate {
    pub pursuer_velocity: PlanarVector,
    pub pursuer_turn_rate: f64,
    pub evader_velocity: PlanarVector,
    pub evader_turn_rate: f64,
    pub time_rate: f64,
}

/// Right-hand side of the pursuer/evader system for given curvature controls.
pub fn derivatives(s: &EngagementState, u_p: f64, u_e: f64, nu: f64) -> EngagementRate {
    EngagementRate {
        pursuer_velocity: s.pursuer.tangent(),
        pursuer_turn_rate: u_p,
        evader_velocity: nu * s.evader.tangent(),
        evader_turn_rate: nu * u_e,
        time_rate: 1.0,
    }
}

fn advance(s: &EngagementState, k: &EngagementRate, dt: f64) -> EngagementState {
    EngagementState {
        pursuer: ParticleState {
            position: s.pursuer.position + k.pursuer_velocity * dt,
            heading: s.pursuer.heading + k.pursuer_turn_rate * dt,
        },
        evader: ParticleState {
            position: s.evader.position + k.evader_velocity * dt,
            heading: s.evader.heading + k.evader_turn_rate * dt,
        },
        time: s.time + k.time_rate * dt,
    }
}

#[inline]
fn weighted(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (a + 2.0 * b + 2.0 * c + d) / 6.0
}

#[inline]
fn weighted_vec(a: PlanarVector, b: PlanarVector, c: PlanarVector, d: PlanarVector) -> PlanarVector {
    PlanarVector::new(weighted(a.x, b.x, c.x, d.x), weighted(a.y, b.y, c.y, d.y))
}

/// One classical fourth-order Runge-Kutta step of length `params.step_size`.
///
/// `evader` maps a stage time to the evader's curvature; `pursuer` maps a
/// stage state and that stage's evader curvature to the pursuer's curvature.
pub fn step<P, E>(
    s: &EngagementState,
    params: &SystemParams,
    pursuer: P,
    evader: E,
) -> Result<EngagementState, DynamicsError>
where
    P: Fn(&EngagementState, f64) -> Result<f64, GuidanceError>,
    E: Fn(f64) -> f64,
{
    let h = params.step_size;
    let nu = params.nu;
    let rate = |st: &EngagementState| -> Result<EngagementRate, DynamicsError> {
        let u_e = evader(st.time);
        let u_p = pursuer(st, u_e)?;
        Ok(derivatives(st, u_p, u_e, nu))
    };

    let k1 = rate(s)?;
    let k2 = rate(&advance(s, &k1, 0.5 * h))?;
    let k3 = rate(&advance(s, &k2, 0.5 * h))?;
    let k4 = rate(&advance(s, &k3, h))?;

    let combined = EngagementRate {
        pursuer_velocity: weighted_vec(
            k1.pursuer_velocity,
            k2.pursuer_velocity,
            k3.pursuer_velocity,
            k4.pursuer_velocity,
        ),
        pursuer_turn_rate: weighted(
            k1.pursuer_turn_rate,
            k2.pursuer_turn_rate,
            k3.pursuer_turn_rate,
            k4.pursuer_turn_rate,
        ),
        evader_velocity: weighted_vec(k1.evader_velocity, k2.evader_velocity, k3.evader_velocity, k4.evader_velocity),
        evader_turn_rate: weighted(k1.evader_turn_rate, k2.evader_turn_rate, k3.evader_turn_rate, k4.evader_turn_rate),
        time_rate: 1.0,
    };
    let next = advance(s, &combined, h);
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    Ok(next)
}
