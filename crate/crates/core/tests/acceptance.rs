//! End-to-end acceptance checks. Each test reports one `criterion N: PASS` or
//! `FAIL` line on stderr (bypassing the harness's output capture) before
//! asserting.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mocam::cli::{certify_scenario, comparison_scenarios, verify_certificate};
use mocam::dynamics::{step, EngagementState, ParticleState, SystemParams};
use mocam::gain_design::GainCertificate;
use mocam::geometry::PlanarVector;
use mocam::guidance::{mcpg_control, ppng_control, EvaderProgram, PursuerLaw};
use mocam::metrics::{camouflage_test, envelope_report, gamma_non_increasing, post_transient_peak};
use mocam::scenario::{parse_scenario, read_trajectory_csv, stability_cap, write_trajectory_csv, ScenarioConfig};
use mocam::simulation::{simulate, Termination, TrajectoryRecord};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion} ({title}): {verdict} - {detail}");
}

fn at(x: f64, y: f64, heading: f64) -> ParticleState {
    ParticleState::new(PlanarVector::new(x, y), heading)
}

/// First violated structural invariant on any sample, if any.
fn structural_violation(record: &TrajectoryRecord) -> Option<String> {
    let nu = record.scenario.nu;
    let first = record.samples.first()?;
    let r_init = first.metrics.baseline_len;
    for s in &record.samples {
        let m = &s.metrics;
        let speed = m.rel_vel.norm();
        let identity = m.gamma * m.gamma + m.w_signed * m.w_signed / (speed * speed);
        if !(-1.0..=1.0).contains(&m.gamma) {
            return Some(format!("gamma {} out of range at t = {}", m.gamma, s.t));
        }
        if (identity - 1.0).abs() > 1e-10 {
            return Some(format!("gamma^2 + w^2/|r'|^2 = {identity} at t = {}", s.t));
        }
        if speed < 1.0 - nu - 1e-12 || speed > 1.0 + nu + 1e-12 {
            return Some(format!("|r'| = {speed} outside [1-nu, 1+nu] at t = {}", s.t));
        }
        if m.baseline_len < r_init - (1.0 + nu) * s.t - 1e-9 {
            return Some(format!("|r| = {} closes faster than 1+nu at t = {}", m.baseline_len, s.t));
        }
    }
    None
}

fn straight_line_certified() -> (ScenarioConfig, GainCertificate) {
    let mut sc = ScenarioConfig::with_defaults(
        0.9,
        at(100.0, 0.0, FRAC_PI_2),
        at(0.0, 0.0, 0.0),
        PursuerLaw::Mcpg { mu: 1.0 },
        EvaderProgram::Zero,
    );
    let cert = certify_scenario(&sc, Some(1.0), 0.01).unwrap();
    sc.pursuer_law = PursuerLaw::Mcpg { mu: cert.mu };
    sc.step_size = sc.stability_cap().min(0.01);
    (sc, cert)
}

#[test]
fn criterion_1_monotone_gamma_for_straight_line_evader() {
    let (sc, cert) = straight_line_certified();
    let started = Instant::now();
    let record = simulate(&sc).unwrap();
    let elapsed = started.elapsed();
    let monotone = gamma_non_increasing(&record.samples, 1e-9);
    let pass = record.termination == Termination::Capture
        && monotone
        && elapsed < Duration::from_secs(5)
        && structural_violation(&record).is_none();
    report(
        1,
        "monotone gamma, straight-line evader",
        pass,
        &format!(
            "mu = {:.4}, {} samples, termination {}, final gamma {:.6}, non-increasing {monotone}, {:.2?}",
            cert.mu,
            record.samples.len(),
            record.termination.as_str(),
            record.final_sample().unwrap().metrics.gamma,
            elapsed
        ),
    );
    assert!(pass);
}

fn gain_study(program: EvaderProgram, mu: f64) -> (ScenarioConfig, ScenarioConfig) {
    let mut base =
        ScenarioConfig::with_defaults(0.9, at(50.0, 0.0, 1.0), at(0.0, 0.0, 0.0), PursuerLaw::Mcpg { mu }, program);
    base.capture_radius = 1.0;
    base.step_size = stability_cap(3.0 * mu, 0.9).min(0.01);
    let tripled = base.with_gain_scaled(3.0);
    (base, tripled)
}

#[test]
fn criterion_2_gain_tripling_scaling() {
    let started = Instant::now();
    let cases = [
        ("sinusoid", EvaderProgram::Sinusoid { amplitude: 1.0, angular_freq: 1.0, phase: 0.0 }),
        ("random", EvaderProgram::PiecewiseRandom { seed: 7, dwell: 1.0, u_max: 1.0 }),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, program) in cases {
        let (base, tripled) = gain_study(program, 30.0);
        let low = simulate(&base).unwrap();
        let high = simulate(&tripled).unwrap();
        let ratio = match (post_transient_peak(&low.samples, 0.01), post_transient_peak(&high.samples, 0.01)) {
            (Some(a), Some(b)) => a / b,
            _ => f64::NAN,
        };
        pass &= (6.0..=12.0).contains(&ratio);
        pass &= structural_violation(&low).is_none() && structural_violation(&high).is_none();
        details.push(format!("{name} ratio {ratio:.3}"));
    }
    let elapsed = started.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    report(2, "gain tripling", pass, &format!("{}, {elapsed:.2?}", details.join(", ")));
    assert!(pass);
}

struct BatteryRun {
    index: usize,
    cert: GainCertificate,
    success: bool,
    envelope_violations: usize,
    structural: Option<String>,
    steps: usize,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
}

/// A random certified scenario with `gamma0 < 0.999`.
fn battery_scenario(rng: &mut ChaCha8Rng) -> ScenarioConfig {
    loop {
        let nu = uniform(rng, 0.3, 0.95);
        let r_init = uniform(rng, 5.0, 50.0);
        let bearing = uniform(rng, -PI, PI);
        let u = uniform(rng, 0.0, 1.5);
        let program = match rng.next_u32() % 4 {
            0 => EvaderProgram::Zero,
            1 => EvaderProgram::Constant { c: u * if rng.next_u32().is_multiple_of(2) { 1.0 } else { -1.0 } },
            2 => EvaderProgram::Sinusoid {
                amplitude: u,
                angular_freq: uniform(rng, 0.2, 3.0),
                phase: uniform(rng, 0.0, 2.0 * PI),
            },
            _ => EvaderProgram::PiecewiseRandom { seed: rng.next_u64(), dwell: uniform(rng, 0.2, 2.0), u_max: u },
        };
        let sc = ScenarioConfig::with_defaults(
            nu,
            at(r_init * bearing.cos(), r_init * bearing.sin(), uniform(rng, -PI, PI)),
            at(0.0, 0.0, uniform(rng, -PI, PI)),
            PursuerLaw::Mcpg { mu: 1.0 },
            program,
        );
        let gamma0 = mocam::compute_metrics(&sc.initial_state(), nu).unwrap().gamma;
        if gamma0 < 0.999 {
            return sc;
        }
    }
}

fn run_battery() -> Vec<BatteryRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let scenarios: Vec<ScenarioConfig> = (0..50).map(|_| battery_scenario(&mut rng)).collect();
    scenarios
        .par_iter()
        .enumerate()
        .map(|(index, sc)| {
            let cert = certify_scenario(sc, Some(sc.initial_range() / 100.0), 0.01).unwrap();
            let (record, verification) = verify_certificate(sc, &cert).unwrap();
            let envelope = envelope_report(&record, &cert).unwrap();
            BatteryRun {
                index,
                cert,
                success: verification.success,
                envelope_violations: envelope.violations,
                structural: structural_violation(&record),
                steps: record.samples.len(),
            }
        })
        .collect()
}

static BATTERY: std::sync::OnceLock<(Vec<BatteryRun>, Duration)> = std::sync::OnceLock::new();

fn battery() -> &'static (Vec<BatteryRun>, Duration) {
    BATTERY.get_or_init(|| {
        let started = Instant::now();
        let runs = run_battery();
        (runs, started.elapsed())
    })
}

#[test]
fn criterion_3_certificate_soundness_battery() {
    let (runs, elapsed) = battery();
    let failures: Vec<usize> = runs.iter().filter(|r| !r.success).map(|r| r.index).collect();
    let steps: usize = runs.iter().map(|r| r.steps).sum();
    let max_mu = runs.iter().map(|r| r.cert.mu).fold(0.0, f64::max);
    let pass = runs.len() == 50 && failures.is_empty() && *elapsed < Duration::from_secs(300);
    report(
        3,
        "certificate soundness battery",
        pass,
        &format!("{} runs, failures {failures:?}, {steps} samples, max mu {max_mu:.3e}, {elapsed:.2?}", runs.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_4_envelope_bound() {
    let (runs, _) = battery();
    let violating: Vec<(usize, usize)> =
        runs.iter().filter(|r| r.envelope_violations > 0).map(|r| (r.index, r.envelope_violations)).collect();
    let (sc, cert) = straight_line_certified();
    let straight = envelope_report(&simulate(&sc).unwrap(), &cert).unwrap();
    let pass = violating.is_empty() && straight.holds();
    report(
        4,
        "envelope bound",
        pass,
        &format!(
            "battery violations {violating:?}; straight-line run checked {} samples, worst excess {:.3e}",
            straight.checked, straight.worst_excess
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_structural_invariants() {
    let (runs, _) = battery();
    let mut problems: Vec<String> =
        runs.iter().filter_map(|r| r.structural.as_ref().map(|p| format!("battery {}: {p}", r.index))).collect();
    let (straight, _) = straight_line_certified();
    let (sin_lo, sin_hi) = gain_study(EvaderProgram::Sinusoid { amplitude: 1.0, angular_freq: 1.0, phase: 0.0 }, 30.0);
    let mut ppng = straight.clone();
    ppng.pursuer_law = PursuerLaw::Ppng { n: 3.0 };
    ppng.step_size = ppng.stability_cap().min(0.01);
    let mut checked = runs.len();
    for sc in [straight, sin_lo, sin_hi, ppng] {
        let record = simulate(&sc).unwrap();
        checked += 1;
        if let Some(p) = structural_violation(&record) {
            problems.push(format!("{}: {p}", sc.pursuer_law.name()));
        }
    }
    let pass = problems.is_empty();
    report(5, "structural invariants", pass, &format!("{checked} trajectories, problems {problems:?}"));
    assert!(pass);
}

/// Both particles fly straight with `r'` antiparallel to `r`, or tilted off it
/// by `tilt` radians.
fn parallel_flight(nu: f64, pursuer_heading: f64, evader_heading: f64, r_init: f64, tilt: f64) -> ScenarioConfig {
    let rel = PlanarVector::from_angle(pursuer_heading) - nu * PlanarVector::from_angle(evader_heading);
    let bearing = -rel.unit().unwrap();
    let bearing = PlanarVector::from_angle(bearing.angle() + tilt);
    let mut sc = ScenarioConfig::with_defaults(
        nu,
        ParticleState::new(bearing * r_init, pursuer_heading),
        at(0.0, 0.0, evader_heading),
        PursuerLaw::Mcpg { mu: 0.0 },
        EvaderProgram::Zero,
    );
    // run until the baseline has roughly halved
    sc.t_max = 0.5 * r_init / rel.norm();
    sc.step_size = 0.01;
    sc
}

fn max_w_ratio(record: &TrajectoryRecord) -> f64 {
    record.samples.iter().map(|s| s.metrics.w_signed.abs() / s.metrics.rel_vel.norm()).fold(0.0, f64::max)
}

#[test]
fn criterion_6_camouflage_characterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    // (a) exact camouflage motion
    let mut worst_a: f64 = 0.0;
    let mut a_ok = true;
    for _ in 0..20 {
        let sc = parallel_flight(
            uniform(&mut rng, 0.0, 0.95),
            uniform(&mut rng, -PI, PI),
            uniform(&mut rng, -PI, PI),
            uniform(&mut rng, 1.0, 100.0),
            0.0,
        );
        let record = simulate(&sc).unwrap();
        worst_a = worst_a.max(max_w_ratio(&record));
        a_ok &= camouflage_test(&record, 1e-9).unwrap().holds;
    }
    a_ok &= worst_a <= 1e-9;

    // (b) passing at tolerance tau bounds |w|/|r'| by 10 tau
    let mut b_ok = true;
    let mut worst_b: f64 = 0.0;
    for _ in 0..50 {
        let tilt = uniform(&mut rng, 1e-8, 1e-2) * if rng.next_u32().is_multiple_of(2) { 1.0 } else { -1.0 };
        let sc = parallel_flight(
            uniform(&mut rng, 0.0, 0.95),
            uniform(&mut rng, -PI, PI),
            uniform(&mut rng, -PI, PI),
            uniform(&mut rng, 1.0, 100.0),
            tilt,
        );
        let record = simulate(&sc).unwrap();
        let check = camouflage_test(&record, 1.0).unwrap();
        let tau = check.max_relative_residual;
        let ratio = max_w_ratio(&record) / tau;
        worst_b = worst_b.max(ratio);
        b_ok &= camouflage_test(&record, tau).unwrap().holds && ratio <= 10.0;
    }

    // (c) generic pursuit is not camouflage
    let generic = ScenarioConfig::with_defaults(
        0.5,
        at(10.0, 0.0, FRAC_PI_2),
        at(0.0, 0.0, 0.0),
        PursuerLaw::Ppng { n: 3.0 },
        EvaderProgram::Sinusoid { amplitude: 1.0, angular_freq: 1.0, phase: 0.0 },
    );
    let c_check = camouflage_test(&simulate(&generic).unwrap(), 1e-3).unwrap();
    let c_ok = !c_check.holds;

    let pass = a_ok && b_ok && c_ok;
    report(
        6,
        "camouflage characterization",
        pass,
        &format!(
            "(a) max |w|/|r'| {worst_a:.2e}; (b) worst (|w|/|r'|)/tau {worst_b:.3}; (c) residual {:.3e} fails 1e-3: {c_ok}",
            c_check.max_relative_residual
        ),
    );
    assert!(pass);
}

fn circle_error(steps: u32) -> f64 {
    let c = 1.5;
    let t_end = 2.0;
    let h = t_end / steps as f64;
    let params = SystemParams { nu: 0.5, step_size: h, capture_radius: 0.05 };
    let mut s = EngagementState::new(at(0.0, 0.0, 0.3), at(100.0, 0.0, 0.0), 0.0);
    for _ in 0..steps {
        s = step(&s, &params, |_, _| Ok(c), |_| 0.0).unwrap();
    }
    let center = PlanarVector::new(0.0, 0.0) + PlanarVector::from_angle(0.3).perp() * (1.0 / c);
    let exact = center + PlanarVector::from_angle(0.3 + c * t_end - FRAC_PI_2) * (1.0 / c);
    (s.pursuer.position - exact).norm()
}

#[test]
fn criterion_7_integrator_order() {
    let coarse = circle_error(40);
    let fine = circle_error(80);
    let ratio = coarse / fine;
    let pass = (12.0..=20.0).contains(&ratio);
    report(7, "integrator order", pass, &format!("errors {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3}"));
    assert!(pass);
}

#[test]
fn criterion_8_ppng_identity_and_law_coincidence() {
    let mu = 4.0;
    let sc = ScenarioConfig::with_defaults(
        0.8,
        at(20.0, 5.0, 2.0),
        at(0.0, 0.0, 0.5),
        PursuerLaw::Mcpg { mu },
        EvaderProgram::Sinusoid { amplitude: 0.8, angular_freq: 1.3, phase: 0.2 },
    );
    let record = simulate(&sc).unwrap();
    let mut worst: f64 = 0.0;
    for s in &record.samples {
        let state = s.state();
        let a = mcpg_control(&state, mu, sc.nu).unwrap();
        let b = ppng_control(&state, mu * s.metrics.baseline_len, sc.nu).unwrap();
        worst = worst.max((a - b).abs());
    }
    let identity_ok = worst <= 1e-12;

    let mut straight = sc.clone();
    straight.evader_program = EvaderProgram::Zero;
    let [mcpg, exact, _] = comparison_scenarios(&straight, None).unwrap();
    let (a, b) = (simulate(&mcpg).unwrap(), simulate(&exact).unwrap());
    let identical = a.samples == b.samples && a.termination == b.termination;

    let pass = identity_ok && identical;
    report(
        8,
        "PPNG identity and MCPG/exact coincidence",
        pass,
        &format!(
            "max |mcpg - ppng| {worst:.2e} over {} samples; mcpg == exact bitwise: {identical} ({} samples)",
            record.samples.len(),
            a.samples.len()
        ),
    );
    assert!(pass);
}

fn corpus_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mocam")).args(args).output().unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn criterion_9_determinism_and_io() {
    let scenario = corpus_dir().join("sinusoid_evader.scn");
    let scenario = scenario.to_str().unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let mut per_command = Vec::new();
        for cmd in ["run", "compare"] {
            let out = tmp.path().join(run).join(cmd);
            let status = run_cli(&[cmd, "--scenario", scenario, "--out", out.to_str().unwrap(), "--figure"]);
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
            per_command.push(dir_bytes(&out));
        }
        outputs.push(per_command);
    }
    let file_count: usize = outputs[0].iter().map(Vec::len).sum();
    let kinds_present = ["trajectory.csv", "summary.json", "figure.svg", "compare.svg"]
        .iter()
        .all(|k| outputs[0].iter().flatten().any(|(name, _)| name.ends_with(k)));
    let byte_identical = outputs[0] == outputs[1];

    let text = std::fs::read_to_string(scenario).unwrap();
    let record = simulate(&parse_scenario(&text).unwrap()).unwrap();
    let mut csv = Vec::new();
    write_trajectory_csv(&record, &mut csv).unwrap();
    let back = read_trajectory_csv(csv.as_slice(), record.scenario.nu).unwrap();
    let csv_exact = back.len() == record.samples.len()
        && back.iter().zip(&record.samples).all(|(a, b)| {
            a.t.to_bits() == b.t.to_bits()
                && a.pursuer == b.pursuer
                && a.evader == b.evader
                && a.u_p.to_bits() == b.u_p.to_bits()
                && a.u_e.to_bits() == b.u_e.to_bits()
                && a.metrics.baseline_len.to_bits() == b.metrics.baseline_len.to_bits()
                && a.metrics.gamma.to_bits() == b.metrics.gamma.to_bits()
                && a.metrics.w_signed.to_bits() == b.metrics.w_signed.to_bits()
                && a.metrics.los_rate.to_bits() == b.metrics.los_rate.to_bits()
                && a.metrics.residual.to_bits() == b.metrics.residual.to_bits()
        });

    let mut corpus: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    corpus.sort();
    let mut corpus_failures = Vec::new();
    for path in &corpus {
        let text = std::fs::read_to_string(path).unwrap();
        let ok =
            parse_scenario(&text).map(|sc| parse_scenario(&sc.to_scenario_text()).as_ref() == Ok(&sc)).unwrap_or(false);
        if !ok {
            corpus_failures.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }

    let pass = byte_identical && kinds_present && csv_exact && corpus.len() == 20 && corpus_failures.is_empty();
    report(
        9,
        "determinism and I/O",
        pass,
        &format!(
            "{file_count} output files byte-identical: {byte_identical}; csv round trip exact over {} samples: {csv_exact}; corpus {} files, failures {corpus_failures:?}",
            record.samples.len(),
            corpus.len()
        ),
    );
    assert!(pass);
}
