//! Fixed-step closed-loop simulation of a scenario.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{step, DynamicsError, EngagementState, ParticleState};
use crate::guidance::EvaderSignal;
use crate::metrics::{compute_metrics, MetricSample};
use crate::scenario::{ScenarioConfig, ScenarioError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
    #[error("initial positions coincide")]
    InitialCollision,
    #[error("initial state is not finite")]
    NonFiniteState,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `|r| <= capture_radius`.
    Capture,
    /// `t >= t_max`.
    TimeLimit,
    /// The integrator produced a non-finite state.
    NonFinite,
    /// A caller-supplied stop predicate fired.
    StopCondition,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Capture => "capture",
            Termination::TimeLimit => "time_limit",
            Termination::NonFinite => "non_finite",
            Termination::StopCondition => "stop_condition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub pursuer: ParticleState,
    pub evader: ParticleState,
    pub u_p: f64,
    pub u_e: f64,
    pub metrics: MetricSample,
}

impl Sample {
    pub fn state(&self) -> EngagementState {
        EngagementState::new(self.pursuer, self.evader, self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub scenario: ScenarioConfig,
    pub samples: Vec<Sample>,
    pub termination: Termination,
}

impl TrajectoryRecord {
    pub fn capture_time(&self) -> Option<f64> {
        match self.termination {
            Termination::Capture => self.samples.last().map(|s| s.t),
            _ => None,
        }
    }

    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Run a scenario until capture, the time limit, or numerical failure.
pub fn simulate(scenario: &ScenarioConfig) -> Result<TrajectoryRecord, SimulationError> {
    simulate_until(scenario, |_| false)
}

/// Like [`simulate`], additionally stopping after the first step whose sample
/// satisfies `stop`. The predicate sees every step, recorded or not; the
/// sample that triggers it is always recorded.
pub fn simulate_until<F>(scenario: &ScenarioConfig, stop: F) -> Result<TrajectoryRecord, SimulationError>
where
    F: Fn(&Sample) -> bool,
{
    scenario.validate().map_err(|e| match e {
        ScenarioError::Validation(ref m) if m.contains("coincide") => SimulationError::InitialCollision,
        other => SimulationError::Invalid(other),
    })?;

    let nu = scenario.nu;
    let h = scenario.step_size;
    let params = scenario.system_params();
    let law = scenario.pursuer_law;
    let signal = EvaderSignal::new(scenario.evader_program, scenario.t_max + h);
    let stride = scenario.sample_stride as u64;
    // tolerate t_max landing a rounding error past a grid point
    let max_steps = ((scenario.t_max / h) * (1.0 - 1e-12)).ceil() as u64;

    let sample_of = |s: &EngagementState| -> Option<Sample> {
        let metrics = compute_metrics(s, nu).ok()?;
        let u_e = signal.at(s.time);
        let u_p = law.control(s, nu, u_e).ok()?;
        Some(Sample { t: s.time, pursuer: s.pursuer, evader: s.evader, u_p, u_e, metrics })
    };

    let mut state = scenario.initial_state();
    if !state.is_finite() {
        return Err(SimulationError::NonFiniteState);
    }
    let first = sample_of(&state).ok_or(SimulationError::InitialCollision)?;
    let mut samples = Vec::with_capacity((max_steps / stride + 2).min(1 << 22) as usize);
    samples.push(first);

    if first.metrics.baseline_len <= scenario.capture_radius {
        return Ok(TrajectoryRecord { scenario: scenario.clone(), samples, termination: Termination::Capture });
    }

    let pursuer = |s: &EngagementState, u_e: f64| law.control(s, nu, u_e);
    let evader = |t: f64| signal.at(t);
    let mut termination = Termination::TimeLimit;
    let mut n: u64 = 0;
    while n < max_steps {
        let next = match step(&state, &params, pursuer, evader) {
            Ok(next) => next,
            // a stage landed on r = 0: the particles have met
            Err(DynamicsError::ZeroBaseline) => {
                termination = Termination::Capture;
                break;
            }
            Err(_) => {
                termination = Termination::NonFinite;
                break;
            }
        };
        n += 1;
        state = EngagementState { time: n as f64 * h, ..next };

        let Some(sample) = sample_of(&state) else {
            samples.push(Sample {
                t: state.time,
                pursuer: state.pursuer,
                evader: state.evader,
                u_p: 0.0,
                u_e: signal.at(state.time),
                metrics: MetricSample::default(),
            });
            termination = Termination::Capture;
            break;
        };
        let captured = sample.metrics.baseline_len <= scenario.capture_radius;
        let stopped = stop(&sample);
        if captured || stopped || n == max_steps || n.is_multiple_of(stride) {
            samples.push(sample);
        }
        if captured {
            termination = Termination::Capture;
            break;
        }
        if stopped {
            termination = Termination::StopCondition;
            break;
        }
    }

    Ok(TrajectoryRecord { scenario: scenario.clone(), samples, termination })
}
