//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

use std::f64::consts::PI;
use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use pendulum_core::action::{action_a1, action_jacobian, integral_i, period, rotation_number};
use pendulum_core::dynamics::{integrate, measure_first_return, FullState, DEFAULT_STEP};
use pendulum_core::geometry::{boundary_point, classify, min_energy_for_momentum, turning_points};
use pendulum_core::monodromy::default_loop;
use pendulum_core::operators::{verify_relations, RelationWindow};
use pendulum_core::spectrum::{build_spectrum, spectrum_symmetry_check};
use pendulum_core::{EnergyMomentum, Stratum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(t)
    } else {
        Err(format!("took {t:?}, limit {limit:?}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pinch_action() -> Outcome {
    let start = Instant::now();
    let a = action_a1(EnergyMomentum::new(1.0, 0.0)).map_err(|e| e.to_string())?;
    let err = (a - 4.0 / PI).abs();
    ensure(err <= 1e-8, || format!("A1(1,0) = {a}, error {err:e}"))?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("A1(1,0) = {a:.17}, |error| = {err:.1e}, {t:?}"))
}

/// Limits are taken at the inward point `(h(s) + 1e-4, l(s))`; at the
/// minimum `s = -1` the momentum is nudged to `+-1e-8` so that the rotation
/// number is defined.
fn boundary_closed_forms() -> Outcome {
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    for s in [-1.0, -0.75, -0.5, -0.25] {
        for sign in [-1i8, 1] {
            let b = boundary_point(s, sign).map_err(|e| e.to_string())?;
            let l = if s == -1.0 {
                f64::from(sign) * 1e-8
            } else {
                b.l
            };
            let em = EnergyMomentum::new(b.h + eps, l);
            ensure(classify(em) == Stratum::Regular, || {
                format!("{em:?} not regular")
            })?;
            let root = (3.0 * s * s + 1.0).sqrt();
            let expect = [
                (-s).sqrt() / root,
                f64::from(sign) / root,
                -2.0 * (-s).powf(1.5) / root,
            ];
            let got = [
                period(em).map_err(|e| e.to_string())?,
                rotation_number(em)
                    .map_err(|e| e.to_string())?
                    .value()
                    .unwrap(),
                integral_i(em).map_err(|e| e.to_string())?,
            ];
            for k in 0..3 {
                let d = (got[k] - expect[k]).abs();
                worst = worst.max(d);
                ensure(d <= 1e-3, || {
                    format!(
                        "s = {s}, sign {sign}, slot {k}: {} vs {}",
                        got[k], expect[k]
                    )
                })?;
            }
            let a = action_a1(em).map_err(|e| e.to_string())?;
            ensure(a <= 1e-3, || format!("A1 = {a} at s = {s}"))?;
        }
    }
    Ok(format!("worst deviation {worst:.2e}"))
}

fn jump_limits() -> Outcome {
    let mut worst: f64 = 0.0;
    for (h, target) in [(0.5, 0.5), (2.0, 1.0)] {
        for sign in [-1.0, 1.0] {
            let em = EnergyMomentum::new(h, sign * 1e-6);
            let v = rotation_number(em)
                .map_err(|e| e.to_string())?
                .value()
                .unwrap();
            let d = (v - sign * target).abs();
            worst = worst.max(d);
            ensure(d <= 1e-4, || format!("Theta({h}, {}) = {v}", sign * 1e-6))?;
        }
    }
    Ok(format!("worst deviation {worst:.2e}"))
}

fn derivative_identities() -> Outcome {
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let a = |h: f64, l: f64| action_a1(EnergyMomentum::new(h, l)).map_err(|e| e.to_string());
    for i in 0..10 {
        for j in 0..10 {
            let l = if j < 5 {
                -1.0 + 0.18 * j as f64
            } else {
                0.1 + 0.18 * (j - 5) as f64
            };
            let (_, h_min) = min_energy_for_momentum(l).map_err(|e| e.to_string())?;
            let h = h_min + 0.1 + 0.3 * i as f64;
            let em = EnergyMomentum::new(h, l);
            ensure(classify(em) == Stratum::Regular, || {
                format!("{em:?} not regular")
            })?;
            let jac = action_jacobian(em).map_err(|e| e.to_string())?;
            let t = jac.da1_dh();
            let minus_theta = jac.da1_dl();
            let dh = (a(h + step, l)? - a(h - step, l)?) / (2.0 * step);
            let dl = (a(h, l + step)? - a(h, l - step)?) / (2.0 * step);
            let rh = (dh - t).abs() / t.abs();
            let rl = (dl - minus_theta).abs() / minus_theta.abs();
            worst = worst.max(rh).max(rl);
            ensure(rh <= 1e-4 && rl <= 1e-4, || {
                format!("{em:?}: {rh:e}, {rl:e}")
            })?;
        }
    }
    Ok(format!("100 points, worst relative error {worst:.2e}"))
}

fn random_regular(rng: &mut ChaCha8Rng) -> EnergyMomentum {
    loop {
        let l = rng.gen_range(0.1..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (_, h_min) = min_energy_for_momentum(l).unwrap();
        let em = EnergyMomentum::new(h_min + rng.gen_range(0.02..3.0), l);
        if classify(em) == Stratum::Regular {
            return em;
        }
    }
}

fn dynamics_agreement() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let em = random_regular(&mut rng);
        let r = measure_first_return(em).map_err(|e| e.to_string())?;
        let t = period(em).map_err(|e| e.to_string())?;
        let th = rotation_number(em)
            .map_err(|e| e.to_string())?
            .value()
            .unwrap();
        let et = (r.t_period / (2.0 * PI) - t).abs() / t;
        let eth = (r.theta_angle / (2.0 * PI) - th).abs() / th.abs();
        worst = worst.max(et).max(eth);
        ensure(et <= 1e-6 && eth <= 1e-6, || {
            format!("{em:?}: {et:e}, {eth:e}")
        })?;
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "20 points, worst relative error {worst:.2e}, {t:?}"
    ))
}

fn pendulum(args: &[&str]) -> Result<(i32, String, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pendulum"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    ))
}

fn matrix_of(args: &[&str]) -> Result<Vec<Vec<i64>>, String> {
    let (code, stdout, stderr) = pendulum(args)?;
    ensure(code == 0, || format!("exit {code}: {stderr}"))?;
    let v: Value = serde_json::from_str(&stdout).map_err(|e| e.to_string())?;
    serde_json::from_value(v["matrix"].clone()).map_err(|e| e.to_string())
}

fn write_loop(path: &std::path::Path, vertices: &[EnergyMomentum]) -> Result<(), String> {
    let mut f = std::fs::File::create(path).map_err(|e| e.to_string())?;
    for v in vertices {
        writeln!(f, "{:e} {:e}", v.h, v.l).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn classical_monodromy() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let lp = default_loop(0.1).map_err(|e| e.to_string())?;
    let reversed = dir.path().join("reversed.txt");
    let double = dir.path().join("double.txt");
    write_loop(&reversed, &lp.reversed().vertices)?;
    write_loop(&double, &lp.repeated(2).vertices)?;
    let cases = [
        (
            vec!["monodromy", "--method", "analytic"],
            vec![vec![1, 0], vec![1, 1]],
        ),
        (
            vec![
                "monodromy",
                "--method",
                "analytic",
                "--loop",
                reversed.to_str().unwrap(),
            ],
            vec![vec![1, 0], vec![-1, 1]],
        ),
        (
            vec![
                "monodromy",
                "--method",
                "analytic",
                "--loop",
                double.to_str().unwrap(),
            ],
            vec![vec![1, 0], vec![2, 1]],
        ),
    ];
    let mut seen = Vec::new();
    for (args, expected) in cases {
        let m = matrix_of(&args)?;
        ensure(m == expected, || {
            format!("{args:?} gave {m:?}, expected {expected:?}")
        })?;
        seen.push(format!("{m:?}"));
    }
    Ok(seen.join(" "))
}

fn quantum_monodromy() -> Outcome {
    let analytic = matrix_of(&["monodromy", "--method", "analytic"])?;
    let spectral = matrix_of(&["monodromy", "--method", "spectral", "--hbar", "0.1"])?;
    ensure(spectral == analytic, || {
        format!("spectral {spectral:?} vs analytic {analytic:?}")
    })?;
    Ok(format!("spectral = analytic = {spectral:?}"))
}

fn spectrum_validity() -> Outcome {
    let start = Instant::now();
    let hbar = 0.1;
    let s = build_spectrum(hbar, 15, 15).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for p in &s.points {
        if p.stratum == Stratum::Regular {
            let a = action_a1(p.em()).map_err(|e| e.to_string())?;
            let r = (a - f64::from(p.qn.n) * hbar).abs();
            worst = worst.max(r);
            ensure(r <= 1e-9, || {
                format!("({}, {}): residual {r:e}", p.qn.n, p.qn.m)
            })?;
        }
    }
    let v = spectrum_symmetry_check(&s);
    ensure(v.is_empty(), || {
        format!("{} violations, first {:?}", v.len(), v[0])
    })?;
    let g = s.get(0, 0).ok_or("missing (0, 0)")?;
    ensure((g.h, g.l) == (-1.0, 0.0), || {
        format!("(0,0) -> ({}, {})", g.h, g.l)
    })?;
    ensure(s.points.len() == 16 * 31, || {
        format!("{} points", s.points.len())
    })?;
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!(
        "{} points, worst residual {worst:.2e}, {t:?}",
        s.points.len()
    ))
}

fn pinch_exclusion() -> Outcome {
    let hbar = 4.0 / (5.0 * PI);
    let s = build_spectrum(hbar, 10, 0).map_err(|e| e.to_string())?;
    ensure(s.get(5, 0).is_none(), || "(5, 0) present".into())?;
    ensure(s.excluded.iter().any(|q| q.n == 5 && q.m == 0), || {
        "(5, 0) not flagged".into()
    })?;
    let (code, stdout, stderr) = pendulum(&[
        "spectrum",
        "--hbar",
        &format!("{hbar:e}"),
        "--n-max",
        "10",
        "--m-max",
        "0",
        "--format",
        "csv",
    ])?;
    ensure(code == 0, || format!("exit {code}"))?;
    ensure(!stdout.lines().any(|l| l.starts_with("5,0,")), || {
        "row (5,0) in CSV".into()
    })?;
    ensure(stderr.contains("warning"), || "no warning emitted".into())?;
    Ok("(5, 0) excluded and warned".into())
}

fn operator_relations() -> Outcome {
    let start = Instant::now();
    let r = verify_relations(
        0.1,
        RelationWindow {
            n_max: 20,
            m_max: 20,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(r.passed(), || {
        format!(
            "{} violations, first {:?}",
            r.violations.len(),
            r.violations[0]
        )
    })?;
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("{} checks, 0 violations, {t:?}", r.checks))
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let em = random_regular(&mut rng);
        let tp = turning_points(em).map_err(|e| e.to_string())?;
        let x = tp.x_minus + rng.gen_range(0.0..1.0) * tp.width();
        let s0 = FullState::on_torus(em, x);
        let (h0, l0) = (s0.energy(), s0.momentum());
        let traj = integrate(s0, 10.0, DEFAULT_STEP).map_err(|e| e.to_string())?;
        for s in &traj.states {
            let qq: f64 = s.q.iter().map(|v| v * v).sum();
            let qp: f64 = s.q.iter().zip(&s.p).map(|(a, b)| a * b).sum();
            let d = (s.energy() - h0)
                .abs()
                .max((s.momentum() - l0).abs())
                .max((qq - 1.0).abs())
                .max(qp.abs());
            worst = worst.max(d);
        }
        ensure(worst <= 1e-8, || format!("{em:?}: drift {worst:e}"))?;
    }
    Ok(format!("10 seeds, worst drift {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("pinch action constant", pinch_action),
        ("boundary closed forms", boundary_closed_forms),
        ("jump limits of the rotation number", jump_limits),
        ("derivative identities", derivative_identities),
        ("dynamics oracle agreement", dynamics_agreement),
        ("classical monodromy", classical_monodromy),
        ("quantum monodromy", quantum_monodromy),
        ("spectrum validity", spectrum_validity),
        ("pinch exclusion", pinch_exclusion),
        ("operator relations", operator_relations),
        ("conservation suite", conservation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
