//! Steering laws.
//!
//! Pursuer laws are state feedback on the baseline `r` and its rate `r'`:
//!
//! * motion camouflage proportional guidance (MCPG), `u_p = -mu (r/|r| . r'^perp)`;
//! * the exact two-term law, which adds a feed-forward of the evader's own
//!   curvature and makes the cost ratio non-increasing outside a disc;
//! * pure proportional navigation (PPNG), `u_p = N lambda'`, with `lambda'`
//!   the line-of-sight rotation rate.
//!
//! Evader programs are open-loop functions of time.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::EngagementState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GuidanceError {
    #[error("baseline has zero length (collision)")]
    ZeroBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PursuerLaw {
    Mcpg { mu: f64 },
    Exact { mu: f64 },
    Ppng { n: f64 },
}

impl PursuerLaw {
    /// Curvature command at `s`, given the evader's current curvature.
    pub fn control(&self, s: &EngagementState, nu: f64, u_e: f64) -> Result<f64, GuidanceError> {
        match *self {
            PursuerLaw::Mcpg { mu } => mcpg_control(s, mu, nu),
            PursuerLaw::Exact { mu } => exact_control(s, mu, nu, u_e),
            PursuerLaw::Ppng { n } => ppng_control(s, n, nu),
        }
    }

    /// The feedback gain in units of 1/length. For PPNG this is the gain the
    /// law would have at the given baseline length.
    pub fn gain(&self) -> f64 {
        match *self {
            PursuerLaw::Mcpg { mu } | PursuerLaw::Exact { mu } => mu,
            PursuerLaw::Ppng { n } => n,
        }
    }

    /// Same law with its gain multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            PursuerLaw::Mcpg { mu } => PursuerLaw::Mcpg { mu: mu * factor },
            PursuerLaw::Exact { mu } => PursuerLaw::Exact { mu: mu * factor },
            PursuerLaw::Ppng { n } => PursuerLaw::Ppng { n: n * factor },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PursuerLaw::Mcpg { .. } => "mcpg",
            PursuerLaw::Exact { .. } => "exact",
            PursuerLaw::Ppng { .. } => "ppng",
        }
    }
}

/// `r/|r| . r'^perp`, the negated signed transverse relative velocity.
fn baseline_dot_rate_perp(s: &EngagementState, nu: f64) -> Result<f64, GuidanceError> {
    let r = s.baseline();
    let dir = r.unit().map_err(|_| GuidanceError::ZeroBaseline)?;
    Ok(dir.dot(s.relative_velocity(nu).perp()))
}

/// MCPG: curvature proportional to the signed transverse relative velocity.
pub fn mcpg_control(s: &EngagementState, mu: f64, nu: f64) -> Result<f64, GuidanceError> {
    Ok(-mu * baseline_dot_rate_perp(s, nu)?)
}

/// MCPG plus the feed-forward term that cancels the evader's steering in the
/// cost-ratio dynamics. Requires `nu < 1` so that `1 - nu (x_p . x_e) > 0`.
pub fn exact_control(s: &EngagementState, mu: f64, nu: f64, u_e_now: f64) -> Result<f64, GuidanceError> {
    let feedback = mcpg_control(s, mu, nu)?;
    if u_e_now == 0.0 || nu == 0.0 {
        return Ok(feedback);
    }
    let c = s.pursuer.tangent().dot(s.evader.tangent());
    let feedforward = (c - nu) / (1.0 - nu * c) * nu * nu * u_e_now;
    Ok(feedback + feedforward)
}

/// PPNG: curvature proportional to the line-of-sight rotation rate `w / |r|`.
pub fn ppng_control(s: &EngagementState, n: f64, nu: f64) -> Result<f64, GuidanceError> {
    let r = s.baseline();
    let len = r.norm();
    if len == 0.0 {
        return Err(GuidanceError::ZeroBaseline);
    }
    let los_rate = -baseline_dot_rate_perp(s, nu)? / len;
    Ok(n * los_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EvaderProgram {
    Zero,
    Constant {
        c: f64,
    },
    Sinusoid {
        amplitude: f64,
        angular_freq: f64,
        phase: f64,
    },
    /// Uniform values on `[-u_max, u_max]`, one per `dwell` interval, joined by
    /// linear interpolation between interval midpoints.
    PiecewiseRandom {
        seed: u64,
        dwell: f64,
        u_max: f64,
    },
}

impl EvaderProgram {
    /// Closed-form bound on `|u_e|` over all time.
    pub fn bound(&self) -> f64 {
        match *self {
            EvaderProgram::Zero => 0.0,
            EvaderProgram::Constant { c } => c.abs(),
            EvaderProgram::Sinusoid { amplitude, .. } => amplitude.abs(),
            EvaderProgram::PiecewiseRandom { u_max, .. } => u_max.abs(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EvaderProgram::Zero => "zero",
            EvaderProgram::Constant { .. } => "constant",
            EvaderProgram::Sinusoid { .. } => "sinusoid",
            EvaderProgram::PiecewiseRandom { .. } => "piecewise_random",
        }
    }
}

/// Knot value for dwell interval `index`: a uniform draw on `[-u_max, u_max)`.
///
/// Each index reads its own 64-bit word from a ChaCha8 stream keyed by `seed`,
/// so the value depends only on `(seed, index)` and not on evaluation order.
pub fn random_knot(seed: u64, index: u64, u_max: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(index) * 2);
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u_max * (2.0 * unit - 1.0)
}

fn interpolate_knots(t: f64, dwell: f64, knot: impl Fn(u64) -> f64) -> f64 {
    // Knot k sits at the midpoint of dwell interval k, i.e. t = (k + 1/2) dwell.
    let s = t / dwell - 0.5;
    if s <= 0.0 {
        return knot(0);
    }
    let k = s.floor();
    let frac = s - k;
    let k = k as u64;
    let (a, b) = (knot(k), knot(k + 1));
    a + (b - a) * frac
}

/// Evader curvature at time `t`.
pub fn evader_control(p: &EvaderProgram, t: f64) -> f64 {
    match *p {
        EvaderProgram::Zero => 0.0,
        EvaderProgram::Constant { c } => c,
        EvaderProgram::Sinusoid { amplitude, angular_freq, phase } => amplitude * (angular_freq * t + phase).sin(),
        EvaderProgram::PiecewiseRandom { seed, dwell, u_max } => {
            interpolate_knots(t, dwell, |k| random_knot(seed, k, u_max))
        }
    }
}

/// An evader program with its random knots precomputed over a horizon.
///
/// Produces exactly the values of [`evader_control`]; beyond the tabulated
/// horizon it falls back to generating knots on demand.
#[derive(Debug, Clone)]
pub struct EvaderSignal {
    program: EvaderProgram,
    knots: Vec<f64>,
}

impl EvaderSignal {
    pub fn new(program: EvaderProgram, horizon: f64) -> Self {
        let knots = match program {
            EvaderProgram::PiecewiseRandom { seed, dwell, u_max } if horizon.is_finite() => {
                let count = (horizon.max(0.0) / dwell).ceil() as u64 + 3;
                (0..count).map(|k| random_knot(seed, k, u_max)).collect()
            }
            _ => Vec::new(),
        };
        Self { program, knots }
    }

    pub fn program(&self) -> &EvaderProgram {
        &self.program
    }

    pub fn at(&self, t: f64) -> f64 {
        match self.program {
            EvaderProgram::PiecewiseRandom { seed, dwell, u_max } => {
                interpolate_knots(t, dwell, |k| match self.knots.get(k as usize) {
                    Some(v) => *v,
                    None => random_knot(seed, k, u_max),
                })
            }
            ref p => evader_control(p, t),
        }
    }
}
