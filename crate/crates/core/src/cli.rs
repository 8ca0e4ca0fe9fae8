//! Command-line front end: `run`, `sweep`, `certify` and `compare`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::gain_design::{design_certificate, CertificateRequest, GainCertificate};
use crate::guidance::PursuerLaw;
use crate::metrics::{compute_metrics, envelope_report, first_time_within, post_transient_peak, EnvelopeReport};
use crate::scenario::{
    emit_figure_svg, emit_overlay_svg, parse_scenario_with_overrides, stability_cap, write_summary_json,
    write_trajectory_csv, ScenarioConfig, ScenarioError,
};
use crate::simulation::{simulate, simulate_until, SimulationError, Termination, TrajectoryRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

const FIGURE_BASELINES: usize = 20;
const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "mocam", version, about = "Planar pursuit-evasion with motion-camouflage guidance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run(CommonArgs),
    /// Simulate a scenario once per gain multiplier.
    Sweep(SweepArgs),
    /// Design a gain certificate for a scenario's geometry.
    Certify(CertifyArgs),
    /// Run a scenario under MCPG, the exact law and PPNG.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "mocam-out")]
    pub out: PathBuf,
    /// Override a scenario key, e.g. `--set pursuer_law.mu=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Also write SVG figures.
    #[arg(long)]
    pub figure: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Gain multipliers.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub gains: Vec<f64>,
    /// Transient threshold: peaks are measured after gamma first drops below -1 + sqrt(epsilon).
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Radius outside which the guarantee applies; defaults to |r(0)|/100.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Target closeness to camouflage, gamma <= -1 + epsilon.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Re-run the scenario at the certified gain and check the guarantee.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Radius used for the PPNG constant N = mu r0; defaults to |r(0)|/100.
    #[arg(long)]
    pub r0: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::UnknownOverride(_) | ScenarioError::MalformedOverride(_) => CliError::Usage(e.to_string()),
            ScenarioError::Parse { .. } | ScenarioError::Validation(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Invalid(e) => e.into(),
            SimulationError::InitialCollision => CliError::Validation(e.to_string()),
            SimulationError::NonFiniteState => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_error(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Parse arguments, execute the command and return the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Execute a parsed command. Returns the exit code of a run that completed
/// its outputs, or the error that prevented it.
pub fn execute(command: &Command) -> Result<i32, CliError> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn load_scenario(args: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(&args.scenario).map_err(io_error(&args.scenario))?;
    Ok(parse_scenario_with_overrides(&text, &args.overrides)?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

fn write_file<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_error(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

/// Trajectory CSV, summary JSON and optionally the figure for one run.
fn write_run_outputs(
    dir: &Path,
    record: &TrajectoryRecord,
    cert: Option<&GainCertificate>,
    figure: bool,
) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join("trajectory.csv"), |w| write_trajectory_csv(record, w))?;
    write_file(&dir.join("summary.json"), |w| write_summary_json(record, cert, w))?;
    if figure {
        write_file(&dir.join("figure.svg"), |w| emit_figure_svg(record, FIGURE_BASELINES, w))?;
    }
    Ok(())
}

fn status_of(record: &TrajectoryRecord) -> i32 {
    match record.termination {
        Termination::NonFinite => EXIT_NUMERICAL,
        _ => EXIT_OK,
    }
}

fn report_non_finite(label: &str, record: &TrajectoryRecord) {
    if record.termination == Termination::NonFinite {
        let t = record.final_sample().map_or(0.0, |s| s.t);
        eprintln!("error: {label}: state became non-finite near t = {t}; reduce step_size");
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

pub fn cmd_run(args: &CommonArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(args)?;
    let record = simulate(&scenario)?;
    write_run_outputs(&args.out, &record, None, args.figure)?;
    report_non_finite(&scenario.label, &record);
    println!(
        "{}: {} at t = {:?} after {} samples",
        scenario.label,
        record.termination.as_str(),
        record.final_sample().map_or(0.0, |s| s.t),
        record.samples.len()
    );
    Ok(status_of(&record))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub multiplier: f64,
    pub gain: f64,
    pub termination: Option<Termination>,
    pub post_transient_peak: Option<f64>,
    pub ratio_to_previous: Option<f64>,
    pub error: Option<String>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.common)?;
    if args.gains.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(CliError::Usage("gain multipliers must be finite and non-negative".into()));
    }
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        return Err(CliError::Usage("--epsilon must lie in (0, 1)".into()));
    }
    create_dir(&args.common.out)?;

    let outcomes: Vec<Result<TrajectoryRecord, CliError>> = args
        .gains
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let scaled = scenario.with_gain_scaled(m);
            let record = simulate(&scaled)?;
            let dir = args.common.out.join(format!("run_{i:02}"));
            write_run_outputs(&dir, &record, None, args.common.figure)?;
            Ok(record)
        })
        .collect();

    let mut rows: Vec<SweepRow> = Vec::with_capacity(outcomes.len());
    let mut code = EXIT_OK;
    for (&m, outcome) in args.gains.iter().zip(&outcomes) {
        let gain = scenario.pursuer_law.gain() * m;
        let row = match outcome {
            Ok(record) => {
                report_non_finite(&format!("multiplier {m}"), record);
                code = code.max(status_of(record));
                SweepRow {
                    multiplier: m,
                    gain,
                    termination: Some(record.termination),
                    post_transient_peak: post_transient_peak(&record.samples, args.epsilon),
                    ratio_to_previous: None,
                    error: None,
                }
            }
            Err(e) => {
                eprintln!("error: multiplier {m}: {}", e.message());
                code = code.max(e.exit_code());
                SweepRow {
                    multiplier: m,
                    gain,
                    termination: None,
                    post_transient_peak: None,
                    ratio_to_previous: None,
                    error: Some(e.message().to_string()),
                }
            }
        };
        rows.push(row);
    }
    for i in 1..rows.len() {
        if let (Some(prev), Some(cur)) = (rows[i - 1].post_transient_peak, rows[i].post_transient_peak) {
            rows[i].ratio_to_previous = Some(prev / cur);
        }
    }

    let mut table = String::from("run,multiplier,gain,termination,post_transient_peak,ratio_to_previous\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            table,
            "run_{i:02},{:?},{:?},{},{},{}",
            r.multiplier,
            r.gain,
            r.termination.map_or("error", |t| t.as_str()),
            fmt_opt(r.post_transient_peak),
            fmt_opt(r.ratio_to_previous)
        );
    }
    let path = args.common.out.join("sweep.csv");
    fs::write(&path, table).map_err(io_error(&path))?;

    for (i, r) in rows.iter().enumerate() {
        match (r.post_transient_peak, r.ratio_to_previous) {
            (Some(p), Some(q)) => println!("x{:?}: peak {p:.6e}, ratio to previous {q:.4}", r.multiplier),
            (Some(p), None) => println!("x{:?}: peak {p:.6e}", r.multiplier),
            _ if r.error.is_none() => println!("x{:?}: gamma never left the transient", r.multiplier),
            _ => println!("x{:?}: failed (run_{i:02})", r.multiplier),
        }
    }
    Ok(code)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    /// Gamma reached `-1 + epsilon` by `T`, or capture came first with
    /// gamma within `-1 + sqrt(epsilon)`.
    pub success: bool,
    pub t1: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub mu: f64,
    pub step_size: f64,
    pub termination: Termination,
    pub final_time: f64,
    pub gamma_final: f64,
    pub envelope: Option<EnvelopeReport>,
}

/// Certificate for a scenario's starting geometry.
pub fn certify_scenario(
    scenario: &ScenarioConfig,
    r0: Option<f64>,
    epsilon_target: f64,
) -> Result<GainCertificate, CliError> {
    if !matches!(scenario.pursuer_law, PursuerLaw::Mcpg { .. }) {
        return Err(CliError::Validation(format!(
            "certificates apply to the mcpg law, scenario uses `{}`",
            scenario.pursuer_law.name()
        )));
    }
    let start =
        compute_metrics(&scenario.initial_state(), scenario.nu).map_err(|e| CliError::Validation(e.to_string()))?;
    design_certificate(&CertificateRequest {
        nu: scenario.nu,
        u_e_max: scenario.evader_program.bound(),
        gamma0: start.gamma,
        r_init: start.baseline_len,
        epsilon_target,
        r0,
    })
    .map_err(|e| CliError::Validation(e.to_string()))
}

/// The scenario at the certified gain, stepped no coarser than its cap and
/// run just past the guaranteed horizon.
pub fn verification_scenario(scenario: &ScenarioConfig, cert: &GainCertificate) -> ScenarioConfig {
    let mut sc = scenario.clone();
    sc.pursuer_law = PursuerLaw::Mcpg { mu: cert.mu };
    sc.step_size = sc.step_size.min(stability_cap(cert.mu, sc.nu));
    sc.t_max = cert.horizon + sc.step_size;
    sc
}

/// Simulate at the certified gain until the target is met, capture or `T`.
pub fn verify_certificate(
    scenario: &ScenarioConfig,
    cert: &GainCertificate,
) -> Result<(TrajectoryRecord, Verification), CliError> {
    let sc = verification_scenario(scenario, cert);
    let target = cert.target_gamma();
    let record = simulate_until(&sc, |s| s.metrics.gamma <= target)?;
    let t1 = first_time_within(&record.samples, cert.epsilon);
    let last = record.final_sample().expect("records hold the initial sample");
    let reached = t1.is_some_and(|t| t <= cert.horizon);
    let captured_close = record.termination == Termination::Capture
        && last.t <= cert.horizon
        && last.metrics.gamma <= -1.0 + cert.epsilon.sqrt();
    let verification = Verification {
        success: reached || captured_close,
        t1,
        horizon: cert.horizon,
        mu: cert.mu,
        step_size: sc.step_size,
        termination: record.termination,
        final_time: last.t,
        gamma_final: last.metrics.gamma,
        envelope: envelope_report(&record, cert).ok(),
    };
    Ok((record, verification))
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.common)?;
    let cert = certify_scenario(&scenario, args.r0, args.epsilon)?;
    create_dir(&args.common.out)?;
    write_json(&args.common.out.join("certificate.json"), &cert)?;
    println!("certified mu = {:?} (r0 = {:?}, epsilon = {:?}, T = {:?})", cert.mu, cert.r0, cert.epsilon, cert.horizon);
    if !args.verify {
        return Ok(EXIT_OK);
    }

    let (record, verification) = verify_certificate(&scenario, &cert)?;
    let out = &args.common.out;
    write_json(&out.join("verification.json"), &verification)?;
    write_file(&out.join("summary.json"), |w| write_summary_json(&record, Some(&cert), w))?;
    if args.common.figure {
        write_file(&out.join("figure.svg"), |w| emit_figure_svg(&record, FIGURE_BASELINES, w))?;
    }
    report_non_finite(&scenario.label, &record);
    match verification.t1 {
        Some(t1) => println!(
            "verification {}: gamma <= {:?} at t1 = {t1:?} (T = {:?}, step {:?})",
            if verification.success { "passed" } else { "failed" },
            cert.target_gamma(),
            cert.horizon,
            verification.step_size
        ),
        None => println!(
            "verification {}: run ended by {} at t = {:?} with gamma = {:?} (T = {:?}, step {:?})",
            if verification.success { "passed" } else { "failed" },
            verification.termination.as_str(),
            verification.final_time,
            verification.gamma_final,
            cert.horizon,
            verification.step_size
        ),
    }
    Ok(status_of(&record))
}

/// MCPG, exact and PPNG variants of a scenario sharing one step size.
///
/// The MCPG gain is the scenario's `mu`; for a PPNG scenario it is
/// `n / r0`. PPNG uses `N = mu r0`.
pub fn comparison_scenarios(scenario: &ScenarioConfig, r0: Option<f64>) -> Result<[ScenarioConfig; 3], CliError> {
    let r0 = r0.unwrap_or(scenario.initial_range() / 100.0);
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(CliError::Usage("--r0 must be positive".into()));
    }
    let mu = match scenario.pursuer_law {
        PursuerLaw::Mcpg { mu } | PursuerLaw::Exact { mu } => mu,
        PursuerLaw::Ppng { n } => n / r0,
    };
    let n = mu * r0;
    let laws = [PursuerLaw::Mcpg { mu }, PursuerLaw::Exact { mu }, PursuerLaw::Ppng { n }];
    let mut out = laws.map(|law| ScenarioConfig { pursuer_law: law, ..scenario.clone() });
    let step = out.iter().map(|s| s.stability_cap()).fold(scenario.step_size, f64::min);
    for sc in &mut out {
        sc.step_size = step;
    }
    Ok(out)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<i32, CliError> {
    let scenario = load_scenario(&args.common)?;
    let scenarios = comparison_scenarios(&scenario, args.r0)?;
    create_dir(&args.common.out)?;

    let outcomes: Vec<Result<TrajectoryRecord, CliError>> = scenarios
        .par_iter()
        .map(|sc| {
            let record = simulate(sc)?;
            write_run_outputs(&args.common.out.join(sc.pursuer_law.name()), &record, None, args.common.figure)?;
            Ok(record)
        })
        .collect();

    let mut code = EXIT_OK;
    let mut table =
        String::from("law,gain,step_size,termination,capture_time,peak_residual,peak_abs_u_p,final_gamma\n");
    let mut finished = Vec::new();
    for (sc, outcome) in scenarios.iter().zip(&outcomes) {
        let name = sc.pursuer_law.name();
        match outcome {
            Ok(record) => {
                report_non_finite(name, record);
                code = code.max(status_of(record));
                let peak_residual = record.samples.iter().map(|s| s.metrics.residual).fold(0.0, f64::max);
                let peak_u = record.samples.iter().map(|s| s.u_p.abs()).fold(0.0, f64::max);
                let final_gamma = record.final_sample().map_or(f64::NAN, |s| s.metrics.gamma);
                let _ = writeln!(
                    table,
                    "{name},{:?},{:?},{},{},{peak_residual:?},{peak_u:?},{final_gamma:?}",
                    sc.pursuer_law.gain(),
                    sc.step_size,
                    record.termination.as_str(),
                    fmt_opt(record.capture_time())
                );
                println!(
                    "{name}: {} at t = {:?}, peak residual {peak_residual:.6e}",
                    record.termination.as_str(),
                    record.final_sample().map_or(0.0, |s| s.t)
                );
                finished.push((name, record));
            }
            Err(e) => {
                eprintln!("error: {name}: {}", e.message());
                code = code.max(e.exit_code());
                let _ = writeln!(table, "{name},{:?},{:?},error,,,,", sc.pursuer_law.gain(), sc.step_size);
            }
        }
    }
    let path = args.common.out.join("compare.csv");
    fs::write(&path, table).map_err(io_error(&path))?;
    write_file(&args.common.out.join("compare.svg"), |w| emit_overlay_svg(&finished, w))?;
    Ok(code)
}
