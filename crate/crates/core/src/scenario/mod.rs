//! Scenario files and trajectory output formats.
//!
//! # Scenario grammar
//!
//! UTF-8 text, one `key = value` per line. Blank lines are ignored and `#`
//! starts a comment that runs to the end of the line. Keys are unique.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `label` | free text without `#` | `scenario` |
//! | `nu` | evader/pursuer speed ratio in `[0, 1)` | required |
//! | `pursuer_init.x`, `pursuer_init.y` | initial position | required |
//! | `pursuer_init.heading` | radians | `0` |
//! | `evader_init.x`, `evader_init.y` | initial position | required |
//! | `evader_init.heading` | radians | `0` |
//! | `pursuer_law.variant` | `mcpg`, `exact` or `ppng` | `mcpg` |
//! | `pursuer_law.mu` | gain (1/length), `mcpg` and `exact` only | required |
//! | `pursuer_law.n` | navigation constant, `ppng` only | required |
//! | `evader_program.variant` | `zero`, `constant`, `sinusoid`, `piecewise_random` | `zero` |
//! | `evader_program.c` | curvature, `constant` only | required |
//! | `evader_program.amplitude`, `evader_program.angular_freq` | `sinusoid` only | required |
//! | `evader_program.phase` | `sinusoid` only | `0` |
//! | `evader_program.seed` | unsigned integer, `piecewise_random` only | required |
//! | `evader_program.dwell`, `evader_program.u_max` | `piecewise_random` only | required |
//! | `step_size` | integrator step | `min(0.01, stability cap)` |
//! | `t_max` | time limit | `2 |r(0)| / (1 - nu)` |
//! | `capture_radius` | termination distance | `0.05` |
//! | `sample_stride` | record every n-th step | `1` |
//!
//! The stability cap is `h <= 0.1 / (mu (1 + nu))`; for PPNG the effective
//! gain is `n / capture_radius`, its largest value before capture.

pub mod csv;
pub mod summary;
pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{EngagementState, ParticleState, SystemParams};
use crate::geometry::PlanarVector;
use crate::guidance::{EvaderProgram, PursuerLaw};

pub use self::csv::{read_trajectory_csv, write_trajectory_csv, CSV_COLUMNS};
pub use self::summary::{summarize, write_summary_json, RunSummary};
pub use self::svg::{emit_figure_svg, emit_overlay_svg};

pub const DEFAULT_CAPTURE_RADIUS: f64 = 0.05;
pub const DEFAULT_MAX_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown override key `{0}`")]
    UnknownOverride(String),
    #[error("malformed override `{0}`; expected key=value")]
    MalformedOverride(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub label: String,
    pub nu: f64,
    pub pursuer_init: ParticleState,
    pub evader_init: ParticleState,
    pub pursuer_law: PursuerLaw,
    pub evader_program: EvaderProgram,
    pub step_size: f64,
    pub t_max: f64,
    pub capture_radius: f64,
    pub sample_stride: u32,
}

/// Largest step the closed loop tolerates at gain `effective_gain`.
pub fn stability_cap(effective_gain: f64, nu: f64) -> f64 {
    if effective_gain > 0.0 {
        0.1 / (effective_gain * (1.0 + nu))
    } else {
        f64::INFINITY
    }
}

fn default_t_max(r0: f64, nu: f64) -> f64 {
    2.0 * r0 / (1.0 - nu)
}

impl ScenarioConfig {
    /// A scenario with every optional field at its documented default.
    pub fn with_defaults(
        nu: f64,
        pursuer_init: ParticleState,
        evader_init: ParticleState,
        pursuer_law: PursuerLaw,
        evader_program: EvaderProgram,
    ) -> Self {
        let mut sc = ScenarioConfig {
            label: "scenario".to_string(),
            nu,
            pursuer_init,
            evader_init,
            pursuer_law,
            evader_program,
            step_size: 0.0,
            t_max: default_t_max((pursuer_init.position - evader_init.position).norm(), nu),
            capture_radius: DEFAULT_CAPTURE_RADIUS,
            sample_stride: 1,
        };
        sc.step_size = sc.stability_cap().min(DEFAULT_MAX_STEP);
        sc
    }

    pub fn initial_state(&self) -> EngagementState {
        EngagementState::new(self.pursuer_init, self.evader_init, 0.0)
    }

    pub fn initial_range(&self) -> f64 {
        self.initial_state().baseline().norm()
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams { nu: self.nu, step_size: self.step_size, capture_radius: self.capture_radius }
    }

    /// Gain governing closed-loop stiffness, in 1/length.
    pub fn effective_gain(&self) -> f64 {
        match self.pursuer_law {
            PursuerLaw::Mcpg { mu } | PursuerLaw::Exact { mu } => mu,
            PursuerLaw::Ppng { n } => n / self.capture_radius,
        }
    }

    pub fn stability_cap(&self) -> f64 {
        stability_cap(self.effective_gain(), self.nu)
    }

    /// Same scenario with the pursuer gain multiplied by `factor`.
    pub fn with_gain_scaled(&self, factor: f64) -> Self {
        ScenarioConfig { pursuer_law: self.pursuer_law.scaled(factor), ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: &str| Err(ScenarioError::Validation(m.to_string()));
        if self.label.contains('#') || self.label.contains('\n') || self.label.trim() != self.label {
            return fail("label must be a single line without `#` or surrounding spaces");
        }
        if !(self.nu.is_finite() && (0.0..1.0).contains(&self.nu)) {
            return fail("nu out of [0,1)");
        }
        if !(self.pursuer_init.is_finite() && self.evader_init.is_finite()) {
            return fail("initial states must be finite");
        }
        let r0 = self.initial_range();
        if r0.is_nan() || r0 <= 0.0 {
            return fail("initial positions coincide (|r(0)| must be positive)");
        }
        if !r0.is_finite() {
            return fail("initial separation overflows");
        }
        match self.pursuer_law {
            PursuerLaw::Mcpg { mu } | PursuerLaw::Exact { mu } => {
                if !(mu.is_finite() && mu >= 0.0) {
                    return fail("pursuer_law.mu must be finite and non-negative");
                }
            }
            PursuerLaw::Ppng { n } => {
                if !(n.is_finite() && n >= 0.0) {
                    return fail("pursuer_law.n must be finite and non-negative");
                }
            }
        }
        match self.evader_program {
            EvaderProgram::Zero => {}
            EvaderProgram::Constant { c } => {
                if !c.is_finite() {
                    return fail("evader_program.c must be finite (bounded steering)");
                }
            }
            EvaderProgram::Sinusoid { amplitude, angular_freq, phase } => {
                if !(amplitude.is_finite() && angular_freq.is_finite() && phase.is_finite()) {
                    return fail("sinusoid parameters must be finite (bounded steering)");
                }
            }
            EvaderProgram::PiecewiseRandom { dwell, u_max, .. } => {
                if !(dwell.is_finite() && dwell > 0.0) {
                    return fail("evader_program.dwell must be positive");
                }
                if !(u_max.is_finite() && u_max >= 0.0) {
                    return fail("evader_program.u_max must be finite and non-negative (bounded steering)");
                }
            }
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return fail("step_size must be positive");
        }
        if !(self.capture_radius.is_finite() && self.capture_radius > 0.0) {
            return fail("capture_radius must be positive");
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return fail("t_max must be finite and non-negative");
        }
        if self.sample_stride == 0 {
            return fail("sample_stride must be at least 1");
        }
        let cap = self.stability_cap();
        if self.step_size > cap {
            return Err(ScenarioError::Validation(format!(
                "step size violates stability cap: step_size = {} > {} = 0.1/(gain*(1+nu))",
                self.step_size, cap
            )));
        }
        Ok(())
    }

    /// Scenario file text listing every field explicitly.
    pub fn to_scenario_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("label", self.label.clone());
        kv("nu", fmt_f64(self.nu));
        kv("pursuer_init.x", fmt_f64(self.pursuer_init.position.x));
        kv("pursuer_init.y", fmt_f64(self.pursuer_init.position.y));
        kv("pursuer_init.heading", fmt_f64(self.pursuer_init.heading));
        kv("evader_init.x", fmt_f64(self.evader_init.position.x));
        kv("evader_init.y", fmt_f64(self.evader_init.position.y));
        kv("evader_init.heading", fmt_f64(self.evader_init.heading));
        kv("pursuer_law.variant", self.pursuer_law.name().to_string());
        match self.pursuer_law {
            PursuerLaw::Mcpg { mu } | PursuerLaw::Exact { mu } => kv("pursuer_law.mu", fmt_f64(mu)),
            PursuerLaw::Ppng { n } => kv("pursuer_law.n", fmt_f64(n)),
        }
        kv("evader_program.variant", self.evader_program.name().to_string());
        match self.evader_program {
            EvaderProgram::Zero => {}
            EvaderProgram::Constant { c } => kv("evader_program.c", fmt_f64(c)),
            EvaderProgram::Sinusoid { amplitude, angular_freq, phase } => {
                kv("evader_program.amplitude", fmt_f64(amplitude));
                kv("evader_program.angular_freq", fmt_f64(angular_freq));
                kv("evader_program.phase", fmt_f64(phase));
            }
            EvaderProgram::PiecewiseRandom { seed, dwell, u_max } => {
                kv("evader_program.seed", seed.to_string());
                kv("evader_program.dwell", fmt_f64(dwell));
                kv("evader_program.u_max", fmt_f64(u_max));
            }
        }
        kv("step_size", fmt_f64(self.step_size));
        kv("t_max", fmt_f64(self.t_max));
        kv("capture_radius", fmt_f64(self.capture_radius));
        kv("sample_stride", self.sample_stride.to_string());
        out
    }
}

/// Shortest text that parses back to the same `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

const KEYS: &[&str] = &[
    "label",
    "nu",
    "pursuer_init.x",
    "pursuer_init.y",
    "pursuer_init.heading",
    "evader_init.x",
    "evader_init.y",
    "evader_init.heading",
    "pursuer_law.variant",
    "pursuer_law.mu",
    "pursuer_law.n",
    "evader_program.variant",
    "evader_program.c",
    "evader_program.amplitude",
    "evader_program.angular_freq",
    "evader_program.phase",
    "evader_program.seed",
    "evader_program.dwell",
    "evader_program.u_max",
    "step_size",
    "t_max",
    "capture_radius",
    "sample_stride",
];

pub fn is_scenario_key(key: &str) -> bool {
    KEYS.contains(&key)
}

/// Raw key/value pairs with the line each came from (0 for overrides).
#[derive(Debug, Clone, Default)]
struct RawScenario {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawScenario {
    fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !is_scenario_key(key) {
                return Err(ScenarioError::Parse { line, message: format!("unknown key `{key}`") });
            }
            if value.is_empty() {
                return Err(ScenarioError::Parse { line, message: format!("missing value for `{key}`") });
            }
            if entries.insert(key.to_string(), (value.to_string(), line)).is_some() {
                return Err(ScenarioError::Parse { line, message: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    fn apply_override(&mut self, assignment: &str) -> Result<(), ScenarioError> {
        let (key, value) =
            assignment.split_once('=').ok_or_else(|| ScenarioError::MalformedOverride(assignment.to_string()))?;
        let (key, value) = (key.trim(), value.trim());
        if !is_scenario_key(key) {
            return Err(ScenarioError::UnknownOverride(key.to_string()));
        }
        if value.is_empty() {
            return Err(ScenarioError::MalformedOverride(assignment.to_string()));
        }
        self.entries.insert(key.to_string(), (value.to_string(), 0));
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ScenarioError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ScenarioError::Parse { line, message: format!("`{key}` expects a number, found `{v}`") }),
        }
    }

    fn required(&mut self, key: &str) -> Result<f64, ScenarioError> {
        self.number(key)?.ok_or_else(|| ScenarioError::Validation(format!("missing required key `{key}`")))
    }

    fn into_config(mut self) -> Result<ScenarioConfig, ScenarioError> {
        let label = self.take("label").map(|(v, _)| v).unwrap_or_else(|| "scenario".to_string());
        let nu = self.required("nu")?;
        let pursuer_init = ParticleState::new(
            PlanarVector::new(self.required("pursuer_init.x")?, self.required("pursuer_init.y")?),
            self.number("pursuer_init.heading")?.unwrap_or(0.0),
        );
        let evader_init = ParticleState::new(
            PlanarVector::new(self.required("evader_init.x")?, self.required("evader_init.y")?),
            self.number("evader_init.heading")?.unwrap_or(0.0),
        );

        let law_variant = self.take("pursuer_law.variant");
        let pursuer_law = match law_variant.as_ref().map(|(v, l)| (v.as_str(), *l)) {
            None | Some(("mcpg", _)) => PursuerLaw::Mcpg { mu: self.required("pursuer_law.mu")? },
            Some(("exact", _)) => PursuerLaw::Exact { mu: self.required("pursuer_law.mu")? },
            Some(("ppng", _)) => PursuerLaw::Ppng { n: self.required("pursuer_law.n")? },
            Some((other, line)) => {
                return Err(ScenarioError::Parse { line, message: format!("unknown pursuer_law.variant `{other}`") })
            }
        };

        let program_variant = self.take("evader_program.variant");
        let evader_program = match program_variant.as_ref().map(|(v, l)| (v.as_str(), *l)) {
            None | Some(("zero", _)) => EvaderProgram::Zero,
            Some(("constant", _)) => EvaderProgram::Constant { c: self.required("evader_program.c")? },
            Some(("sinusoid", _)) => EvaderProgram::Sinusoid {
                amplitude: self.required("evader_program.amplitude")?,
                angular_freq: self.required("evader_program.angular_freq")?,
                phase: self.number("evader_program.phase")?.unwrap_or(0.0),
            },
            Some(("piecewise_random", _)) => {
                let seed = match self.take("evader_program.seed") {
                    None => {
                        return Err(ScenarioError::Validation("missing required key `evader_program.seed`".to_string()))
                    }
                    Some((v, line)) => v.parse::<u64>().map_err(|_| ScenarioError::Parse {
                        line,
                        message: format!("`evader_program.seed` expects an unsigned integer, found `{v}`"),
                    })?,
                };
                EvaderProgram::PiecewiseRandom {
                    seed,
                    dwell: self.required("evader_program.dwell")?,
                    u_max: self.required("evader_program.u_max")?,
                }
            }
            Some((other, line)) => {
                return Err(ScenarioError::Parse { line, message: format!("unknown evader_program.variant `{other}`") })
            }
        };

        let mut sc = ScenarioConfig::with_defaults(nu, pursuer_init, evader_init, pursuer_law, evader_program);
        sc.label = label;
        if let Some(v) = self.number("capture_radius")? {
            sc.capture_radius = v;
        }
        // the PPNG cap depends on the capture radius
        sc.step_size = sc.stability_cap().min(DEFAULT_MAX_STEP);
        if let Some(v) = self.number("step_size")? {
            sc.step_size = v;
        }
        if let Some(v) = self.number("t_max")? {
            sc.t_max = v;
        }
        if let Some((v, line)) = self.take("sample_stride") {
            sc.sample_stride = v.parse::<u32>().map_err(|_| ScenarioError::Parse {
                line,
                message: format!("`sample_stride` expects a positive integer, found `{v}`"),
            })?;
        }

        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            let message = format!("key `{key}` does not apply to the selected variant");
            return Err(if line > 0 {
                ScenarioError::Parse { line, message }
            } else {
                ScenarioError::Validation(message)
            });
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// Parse and validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    RawScenario::parse(text)?.into_config()
}

/// Parse a scenario file after applying `key=value` overrides.
pub fn parse_scenario_with_overrides<S: AsRef<str>>(
    text: &str,
    overrides: &[S],
) -> Result<ScenarioConfig, ScenarioError> {
    let mut raw = RawScenario::parse(text)?;
    for o in overrides {
        raw.apply_override(o.as_ref())?;
    }
    raw.into_config()
}
