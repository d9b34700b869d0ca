//! `pendulum`: actions, spectra and monodromy of the spherical pendulum.
//!
//! Exit status: 0 on success, 2 for invalid input (including points outside
//! the energy-momentum image and unwritable outputs), 3 for numerical
//! failures.

mod config;
mod output;
mod svg;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pendulum_core::action::ActionEngine;
use pendulum_core::dynamics::{self, FullState};
use pendulum_core::geometry::{classify, sample_locus, turning_points};
use pendulum_core::monodromy::{
    default_loop, monodromy_analytic, monodromy_spectral, spectrum_for_loop, LoopSpec,
    MonodromyResult,
};
use pendulum_core::operators::{verify_relations, RelationWindow};
use pendulum_core::spectrum::SpectrumSolver;
use pendulum_core::{EnergyMomentum, RotationNumber, Stratum};
use serde_json::{json, Value};

use config::{Format, MethodArg, Overrides, RunConfig};
use output::{emit, num, pretty};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<pendulum_core::Error> for Failure {
    fn from(e: pendulum_core::Error) -> Self {
        Self {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "pendulum",
    version,
    about = "Actions, joint spectra and monodromy of the spherical pendulum"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Relative tolerance of the complete integrals.
    #[arg(long, global = true)]
    tol_quad: Option<f64>,
    /// Energy bracket width at which root finding stops.
    #[arg(long, global = true)]
    tol_root: Option<f64>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Period, rotation number, action and I at one point.
    Actions {
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, allow_hyphen_values = true)]
        l: f64,
        /// Shorthand for --format json.
        #[arg(long)]
        json: bool,
    },
    /// Sample the boundary curve of the energy-momentum image.
    Locus {
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
    /// Bohr-Sommerfeld joint spectrum for 0 <= n <= n-max, |m| <= m-max.
    Spectrum {
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        m_max: Option<u32>,
    },
    /// Monodromy matrix around the pinch point.
    Monodromy {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Loop vertices, one `h l` pair per line.
        #[arg(long = "loop")]
        loop_path: Option<PathBuf>,
    },
    /// Integrate the equations of motion and compare with the integrals.
    Dynamics {
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, allow_hyphen_values = true)]
        l: f64,
        #[arg(long)]
        step: Option<f64>,
        /// Length of the conservation run.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
    },
    /// Shifting-operator checks.
    Operators {
        #[command(subcommand)]
        action: OperatorsCommand,
    },
    /// SVG output.
    Plot {
        #[command(subcommand)]
        what: PlotCommand,
    },
}

#[derive(Subcommand)]
enum OperatorsCommand {
    /// Verify the commutation and adjoint relations on a window.
    Verify {
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        m_max: Option<u32>,
    },
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Scatter of the joint spectrum with the boundary curve.
    Spectrum {
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        m_max: Option<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.common.config {
        Some(path) => config::read_config_file(path)?,
        None => Overrides::default(),
    };
    let mut flags = Overrides {
        hbar: cli.common.hbar,
        tol_quad: cli.common.tol_quad,
        tol_root: cli.common.tol_root,
        format: cli.common.format,
        out: cli.common.out.clone(),
        ..Default::default()
    };
    match &cli.command {
        Command::Spectrum { n_max, m_max }
        | Command::Operators {
            action: OperatorsCommand::Verify { n_max, m_max },
        }
        | Command::Plot {
            what: PlotCommand::Spectrum { n_max, m_max },
        } => {
            flags.n_max = *n_max;
            flags.m_max = *m_max;
        }
        Command::Monodromy { method, .. } => flags.method = *method,
        Command::Dynamics { step, .. } => flags.step = *step,
        Command::Actions { json: true, .. } => flags.format = Some(Format::Json),
        _ => {}
    }
    let cfg = RunConfig::resolve(flags.over(file))?;

    match cli.command {
        Command::Actions { h, l, .. } => cmd_actions(&cfg, EnergyMomentum::new(h, l)),
        Command::Locus { count } => cmd_locus(&cfg, count),
        Command::Spectrum { .. } => cmd_spectrum(&cfg),
        Command::Monodromy { loop_path, .. } => cmd_monodromy(&cfg, loop_path.as_deref()),
        Command::Dynamics { h, l, duration, .. } => {
            cmd_dynamics(&cfg, EnergyMomentum::new(h, l), duration)
        }
        Command::Operators { .. } => cmd_operators_verify(&cfg),
        Command::Plot { .. } => cmd_plot_spectrum(&cfg),
    }
}

fn engine(cfg: &RunConfig) -> ActionEngine {
    ActionEngine::with_tolerance(cfg.tol_quad)
}

fn solver(cfg: &RunConfig) -> Result<SpectrumSolver, Failure> {
    Ok(SpectrumSolver::new(cfg.hbar)?
        .with_engine(engine(cfg))
        .with_root_tol(cfg.tol_root))
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<(), Failure> {
    match cfg.format {
        None | Some(Format::Json) => Ok(()),
        Some(f) => Err(Failure::invalid(format!(
            "{command} does not support --format {f:?}"
        ))),
    }
}

fn cmd_actions(cfg: &RunConfig, em: EnergyMomentum) -> Result<(), Failure> {
    if !(em.h.is_finite() && em.l.is_finite()) {
        return Err(Failure::invalid("h and l must be finite"));
    }
    let stratum = classify(em);
    let engine = engine(cfg);
    // Period and I diverge at the pinch point; the action stays finite.
    let (t_tilde, theta, a1, i_value) = if stratum == Stratum::PinchPoint {
        (None, RotationNumber::BranchCut, engine.action_a1(em)?, None)
    } else {
        let b = engine.action_bundle(em)?;
        (Some(b.t_tilde), b.theta_tilde, b.a1, Some(b.i_value))
    };
    let theta_json = match theta {
        RotationNumber::Principal(v) => num(v),
        RotationNumber::BranchCut => Value::String("branch_cut".into()),
    };
    let text = match cfg.format {
        Some(Format::Json) => pretty(&json!({
            "h": num(em.h),
            "l": num(em.l),
            "t_tilde": t_tilde.map_or(Value::Null, num),
            "theta_tilde": theta_json,
            "a1": num(a1),
            "i_value": i_value.map_or(Value::Null, num),
            "stratum": stratum.as_str(),
        })),
        None => {
            let opt = |v: Option<f64>| v.map_or("divergent".to_string(), output::fmt17);
            let theta = match theta {
                RotationNumber::Principal(v) => output::fmt17(v),
                RotationNumber::BranchCut => "branch_cut".into(),
            };
            format!(
                "stratum = {}\nt_tilde = {}\ntheta_tilde = {}\na1 = {}\ni_value = {}\n",
                stratum,
                opt(t_tilde),
                theta,
                output::fmt17(a1),
                opt(i_value)
            )
        }
        Some(f) => {
            return Err(Failure::invalid(format!(
                "actions does not support --format {f:?}"
            )))
        }
    };
    emit(cfg.out.as_deref(), &text)
}

fn cmd_locus(cfg: &RunConfig, count: usize) -> Result<(), Failure> {
    let locus = sample_locus(count)?;
    let text = match cfg.format {
        Some(Format::Csv) => {
            let mut s = String::from("s,h,l\n");
            for b in &locus {
                s.push_str(&format!(
                    "{},{},{}\n",
                    output::fmt17(b.s),
                    output::fmt17(b.h),
                    output::fmt17(b.l)
                ));
            }
            s
        }
        None | Some(Format::Json) => {
            let pts: Vec<Value> = locus
                .iter()
                .map(|b| json!({ "s": num(b.s), "h": num(b.h), "l": num(b.l) }))
                .collect();
            pretty(&Value::Array(pts))
        }
        Some(Format::Svg) => return Err(Failure::invalid("locus does not support --format svg")),
    };
    emit(cfg.out.as_deref(), &text)
}

fn build_spectrum(cfg: &RunConfig) -> Result<pendulum_core::spectrum::Spectrum, Failure> {
    let spectrum = solver(cfg)?.build_spectrum(cfg.n_max.unwrap_or(10), cfg.m_max.unwrap_or(10));
    let spectrum = match spectrum {
        Err(pendulum_core::Error::SpectrumPoint { n, m, source }) => {
            eprintln!("error: point ({n}, {m}) failed: {source}");
            return Err(Failure {
                code: 3,
                message: format!("spectrum point ({n}, {m}) could not be solved"),
            });
        }
        other => other?,
    };
    for q in &spectrum.excluded {
        eprintln!(
            "warning: ({}, {}) excluded: n hbar = 4/pi puts it on the pinch point",
            q.n, q.m
        );
    }
    Ok(spectrum)
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let spectrum = build_spectrum(cfg)?;
    let text = match cfg.format {
        Some(Format::Csv) => output::spectrum_csv(&spectrum),
        None | Some(Format::Json) => pretty(&output::spectrum_json(&spectrum)),
        Some(Format::Svg) => svg::render(&spectrum, &sample_locus(400)?),
    };
    emit(cfg.out.as_deref(), &text)
}

fn cmd_plot_spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    if matches!(cfg.format, Some(Format::Json | Format::Csv)) {
        return Err(Failure::invalid("plot writes SVG only"));
    }
    let spectrum = build_spectrum(cfg)?;
    emit(
        cfg.out.as_deref(),
        &svg::render(&spectrum, &sample_locus(400)?),
    )
}

/// Reads `h l` (or `h,l`) pairs, one per line; `#` starts a comment.
fn read_loop(path: &Path) -> Result<LoopSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut vertices = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some([h, l]) => vertices.push(EnergyMomentum::new(*h, *l)),
            _ => {
                return Err(Failure::invalid(format!(
                    "{} line {}: expected two numbers",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(LoopSpec::new(vertices)?)
}

fn cmd_monodromy(cfg: &RunConfig, loop_path: Option<&Path>) -> Result<(), Failure> {
    json_only(cfg, "monodromy")?;
    let loop_spec = match loop_path {
        Some(p) => read_loop(p)?,
        None => default_loop(cfg.hbar)?,
    };
    if loop_spec.winding == 0 {
        eprintln!("warning: trivial loop (winding number 0 about the pinch point)");
    }
    let result: MonodromyResult = match cfg.method.unwrap_or(MethodArg::Analytic) {
        MethodArg::Analytic => monodromy_analytic(&engine(cfg), &loop_spec)?,
        MethodArg::Spectral => {
            let solver = solver(cfg)?;
            let spectrum = spectrum_for_loop(&solver, &loop_spec)?;
            monodromy_spectral(&spectrum, &loop_spec)?
        }
    };
    let mut report = json!({
        "method": result.method.as_str(),
        "matrix": result.matrix,
        "winding": loop_spec.winding,
        "vertices": loop_spec.vertices.len(),
    });
    if let Some(c) = result.frame_change {
        report["hbar"] = num(cfg.hbar);
        report["frame_change"] = json!(c);
    }
    emit(cfg.out.as_deref(), &pretty(&report))
}

fn cmd_dynamics(cfg: &RunConfig, em: EnergyMomentum, duration: f64) -> Result<(), Failure> {
    json_only(cfg, "dynamics")?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Failure::invalid("duration must be non-negative"));
    }
    let engine = engine(cfg);
    let measured = dynamics::measure_first_return_with_step(em, cfg.step)?;
    let t = engine.period(em)?;
    let theta = engine
        .rotation_number(em)?
        .value()
        .ok_or(pendulum_core::Error::BranchCut { h: em.h, l: em.l })?;

    let tp = turning_points(em)?;
    let start = FullState::on_torus(em, 0.5 * (tp.x_minus + tp.x_plus));
    let traj = dynamics::integrate(start, duration, cfg.step)?;
    let mut drift = [0.0f64; 4];
    for s in &traj.states {
        let qq: f64 = s.q.iter().map(|v| v * v).sum();
        let qp: f64 = s.q.iter().zip(&s.p).map(|(a, b)| a * b).sum();
        let d = [
            (s.energy() - start.energy()).abs(),
            (s.momentum() - start.momentum()).abs(),
            (qq - 1.0).abs(),
            qp.abs(),
        ];
        for k in 0..4 {
            drift[k] = drift[k].max(d[k]);
        }
    }
    let report = json!({
        "h": num(em.h),
        "l": num(em.l),
        "step": num(cfg.step),
        "measured": {
            "t_period": num(measured.t_period),
            "theta_angle": num(measured.theta_angle),
        },
        "quadrature": { "t_tilde": num(t), "theta_tilde": num(theta) },
        "relative_error": {
            "t": num((measured.t_period / (2.0 * PI) - t).abs() / t),
            "theta": num((measured.theta_angle / (2.0 * PI) - theta).abs() / theta.abs()),
        },
        "conservation": {
            "duration": num(duration),
            "energy": num(drift[0]),
            "momentum": num(drift[1]),
            "sphere": num(drift[2]),
            "tangency": num(drift[3]),
        },
    });
    emit(cfg.out.as_deref(), &pretty(&report))
}

fn cmd_operators_verify(cfg: &RunConfig) -> Result<(), Failure> {
    json_only(cfg, "operators verify")?;
    let window = RelationWindow {
        n_max: cfg.n_max.unwrap_or(20),
        m_max: i64::from(cfg.m_max.unwrap_or(20)),
    };
    let report = verify_relations(cfg.hbar, window)?;
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| {
            json!({
                "relation": v.relation,
                "n": v.index.n,
                "m": v.index.m,
                "deviation": num(v.deviation),
            })
        })
        .collect();
    let value = json!({
        "hbar": num(report.hbar),
        "window": { "n_max": window.n_max, "m_max": window.m_max },
        "checks": report.checks,
        "passed": report.passed(),
        "violations": violations,
    });
    emit(cfg.out.as_deref(), &pretty(&value))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!("{} relation violations", report.violations.len()),
        })
    }
}
