//! Deterministic planar pursuit-evasion simulation with motion-camouflage
//! guidance.
//!
//! A unit-speed pursuer chases an evader moving at speed `nu < 1`. The
//! pursuer steers with the motion-camouflage proportional guidance law
//! (MCPG), its exact two-term refinement, or pure proportional navigation
//! (PPNG); the evader follows an open-loop curvature program. Gain
//! certificates give a feedback gain that provably drives the cost ratio
//! `gamma` to within `epsilon` of `-1` (motion camouflage) in finite time.

pub mod cli;
pub mod dynamics;
pub mod gain_design;
pub mod geometry;
pub mod guidance;
pub mod metrics;
pub mod scenario;
pub mod simulation;

pub use dynamics::{
    derivatives, frame_of, step, DynamicsError, EngagementRate, EngagementState, ParticleState, SystemParams,
};
pub use gain_design::{design_certificate, CertificateRequest, DesignError, GainCertificate};
pub use geometry::{GeometryError, PlanarVector};
pub use guidance::{EvaderProgram, GuidanceError, PursuerLaw};
pub use metrics::{compute_metrics, MetricSample, MetricsError};
pub use scenario::{parse_scenario, ScenarioConfig, ScenarioError};
pub use simulation::{simulate, simulate_until, Sample, SimulationError, Termination, TrajectoryRecord};
