use std::io::Write;
use std::path::Path;

use pendulum_core::spectrum::Spectrum;
use serde_json::{json, Number, Value};

use crate::Failure;

pub const CSV_HEADER: &str = "n,m,h,l,a1,stratum";

/// 17 significant digits; enough to round-trip any double.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number carrying exactly the digits of [`fmt17`]; `null` when not
/// finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(
        fmt17(x)
            .parse::<Number>()
            .expect("formatted float is valid JSON"),
    )
}

pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &spectrum.points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.qn.n,
            p.qn.m,
            fmt17(p.h),
            fmt17(p.l),
            fmt17(p.a1),
            p.stratum.as_str()
        ));
    }
    out
}

pub fn spectrum_json(spectrum: &Spectrum) -> Value {
    let points: Vec<Value> = spectrum
        .points
        .iter()
        .map(|p| {
            json!({
                "n": p.qn.n,
                "m": p.qn.m,
                "h": num(p.h),
                "l": num(p.l),
                "a1": num(p.a1),
                "stratum": p.stratum.as_str(),
            })
        })
        .collect();
    let excluded: Vec<Value> = spectrum
        .excluded
        .iter()
        .map(|q| json!({ "n": q.n, "m": q.m }))
        .collect();
    json!({ "hbar": num(spectrum.hbar), "points": points, "excluded": excluded })
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values are serializable");
    s.push('\n');
    s
}

/// Writes to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::invalid(format!("cannot write to stdout: {e}")))
        }
    }
}
