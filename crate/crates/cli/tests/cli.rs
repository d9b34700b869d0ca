use std::process::{Command, Output};

use serde_json::Value;

fn pendulum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pendulum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn actions_at_the_pinch() {
    let out = pendulum(&["actions", "--h", "1", "--l", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("a1 = 1.2732395447351"), "{text}");
    let v = json(&pendulum(&["actions", "--h", "1", "--l", "0", "--json"]));
    assert_eq!(v["stratum"], "pinch");
    assert_eq!(v["theta_tilde"], "branch_cut");
    assert!(v["t_tilde"].is_null());
}

#[test]
fn actions_json_schema() {
    let v = json(&pendulum(&[
        "actions", "--h", "0.5", "--l", "0.3", "--json",
    ]));
    for key in ["t_tilde", "theta_tilde", "a1", "i_value", "stratum"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["stratum"], "regular");
    // 17 significant digits survive serialization
    let raw = serde_json::to_string(&v["a1"]).unwrap();
    let mantissa: String = raw
        .split('e')
        .next()
        .unwrap()
        .chars()
        .filter(char::is_ascii_digit)
        .collect();
    assert_eq!(mantissa.len(), 17, "{raw}");
}

#[test]
fn exit_codes() {
    assert_eq!(
        pendulum(&["actions", "--h", "-2", "--l", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pendulum(&["actions", "--h", "0.5", "--l", "0.3", "--hbar", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        pendulum(&["spectrum", "--format", "bogus"]).status.code(),
        Some(2)
    );
    // the pinch guard is a numerical failure
    assert_eq!(
        pendulum(&["actions", "--h", "1.0000000001", "--l", "0"])
            .status
            .code(),
        Some(3)
    );
    // a quadrature budget that cannot be met
    assert_eq!(
        pendulum(&["actions", "--h", "0.5", "--l", "0.3", "--tol-quad", "1e-30"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn spectrum_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = pendulum(&[
            "spectrum",
            "--hbar",
            "0.1",
            "--n-max",
            "6",
            "--m-max",
            "4",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,h,l,a1,stratum"));
    assert_eq!(lines.count(), 7 * 9);
}

#[test]
fn trivial_spectrum_window() {
    let out = pendulum(&[
        "spectrum", "--hbar", "0.1", "--n-max", "0", "--m-max", "0", "--format", "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let f: Vec<&str> = rows[0].split(',').collect();
    assert_eq!((f[0], f[1]), ("0", "0"));
    assert_eq!(f[2].parse::<f64>().unwrap(), -1.0);
    assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(f[5], "min");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# coarse run\nhbar = 0.2\nn_max = 2\nm_max = 1\n").unwrap();
    let v = json(&pendulum(&["spectrum", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["hbar"].to_string().parse::<f64>().unwrap(), 0.2);
    assert_eq!(v["points"].as_array().unwrap().len(), 3 * 3);
    let v = json(&pendulum(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--hbar",
        "0.25",
        "--m-max",
        "0",
    ]));
    assert_eq!(v["hbar"].to_string().parse::<f64>().unwrap(), 0.25);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);

    std::fs::write(&cfg, "hbar: 0.2\n").unwrap();
    assert_eq!(
        pendulum(&["spectrum", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn svg_has_one_circle_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.svg");
    let out = pendulum(&[
        "plot",
        "spectrum",
        "--hbar",
        "0.1",
        "--n-max",
        "8",
        "--m-max",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg.matches("<circle").count(), 9 * 11);
    assert_eq!(svg.matches("class=\"locus\"").count(), 1);
    assert_eq!(svg.matches("class=\"pinch\"").count(), 1);
}

#[test]
fn unwritable_output_is_invalid_input() {
    let out = pendulum(&[
        "plot",
        "spectrum",
        "--n-max",
        "1",
        "--m-max",
        "1",
        "--out",
        "/nonexistent/dir/x.svg",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn loop_files() {
    let dir = tempfile::tempdir().unwrap();
    let trivial = dir.path().join("trivial.txt");
    std::fs::write(&trivial, "1.5 -0.3\n2.5 -0.3\n2.5 0.3\n1.5 0.3\n").unwrap();
    let out = pendulum(&["monodromy", "--loop", trivial.to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(stderr.contains("trivial loop"), "{stderr}");
    let v = json(&out);
    assert_eq!(v["matrix"], serde_json::json!([[1, 0], [0, 1]]));

    let outside = dir.path().join("outside.txt");
    std::fs::write(&outside, "-2 -0.5\n0 -0.5\n0 0.5\n-2 0.5\n").unwrap();
    assert_eq!(
        pendulum(&["monodromy", "--loop", outside.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let garbage = dir.path().join("garbage.txt");
    std::fs::write(&garbage, "0 0 0\n").unwrap();
    assert_eq!(
        pendulum(&["monodromy", "--loop", garbage.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn spectral_monodromy_on_a_coarse_lattice_fails_numerically() {
    // at hbar = 0.5 the loop is only a few cells wide and the rounding gate
    // rejects the frame transport
    let out = pendulum(&["monodromy", "--method", "spectral", "--hbar", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ambiguous"));
}

#[test]
fn operators_report() {
    let v = json(&pendulum(&[
        "operators",
        "verify",
        "--n-max",
        "5",
        "--m-max",
        "5",
    ]));
    assert_eq!(v["passed"], true);
    assert!(v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn dynamics_report() {
    let v = json(&pendulum(&["dynamics", "--h", "0.5", "--l", "0.3"]));
    let rel = v["relative_error"]["t"].to_string().parse::<f64>().unwrap();
    assert!(rel <= 1e-6);
    let drift = v["conservation"]["energy"]
        .to_string()
        .parse::<f64>()
        .unwrap();
    assert!(drift <= 1e-8);
}
