//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    fn parse(s: &str) -> Option<Self> {
        Format::from_str(s, true).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Analytic,
    Spectral,
}

/// Values that may come from the config file or from flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub hbar: Option<f64>,
    pub tol_quad: Option<f64>,
    pub tol_root: Option<f64>,
    pub step: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub n_max: Option<u32>,
    pub m_max: Option<u32>,
    pub method: Option<MethodArg>,
}

impl Overrides {
    /// `self` wins wherever it is set.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            hbar: self.hbar.or(base.hbar),
            tol_quad: self.tol_quad.or(base.tol_quad),
            tol_root: self.tol_root.or(base.tol_root),
            step: self.step.or(base.step),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
            n_max: self.n_max.or(base.n_max),
            m_max: self.m_max.or(base.m_max),
            method: self.method.or(base.method),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hbar: f64,
    pub tol_quad: f64,
    pub tol_root: f64,
    pub step: f64,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub n_max: Option<u32>,
    pub m_max: Option<u32>,
    pub method: Option<MethodArg>,
}

impl RunConfig {
    pub fn resolve(values: Overrides) -> Result<Self, Failure> {
        let cfg = RunConfig {
            hbar: values.hbar.unwrap_or(0.1),
            tol_quad: values
                .tol_quad
                .unwrap_or(pendulum_core::action::DEFAULT_QUAD_TOL),
            tol_root: values
                .tol_root
                .unwrap_or(pendulum_core::spectrum::DEFAULT_ROOT_TOL),
            step: values.step.unwrap_or(pendulum_core::dynamics::DEFAULT_STEP),
            format: values.format,
            out: values.out,
            n_max: values.n_max,
            m_max: values.m_max,
            method: values.method,
        };
        for (name, v) in [
            ("hbar", cfg.hbar),
            ("tol-quad", cfg.tol_quad),
            ("tol-root", cfg.tol_root),
            ("step", cfg.step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(cfg)
    }
}

pub fn read_config_file(path: &Path) -> Result<Overrides, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// `-` and `_` are interchangeable in keys.
pub fn parse_config(text: &str) -> Result<Overrides, Failure> {
    let mut seen = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::invalid(format!(
                "config line {}: expected key = value",
                lineno + 1
            )));
        };
        seen.insert(
            key.trim().replace('-', "_"),
            (lineno + 1, value.trim().to_string()),
        );
    }

    let mut out = Overrides::default();
    for (key, (lineno, value)) in seen {
        let bad = |what: &str| {
            Failure::invalid(format!("config line {lineno}: {what} for {key}: {value:?}"))
        };
        let real = || value.parse::<f64>().map_err(|_| bad("expected a number"));
        let count = || {
            value
                .parse::<u32>()
                .map_err(|_| bad("expected a non-negative integer"))
        };
        match key.as_str() {
            "hbar" => out.hbar = Some(real()?),
            "tol_quad" => out.tol_quad = Some(real()?),
            "tol_root" => out.tol_root = Some(real()?),
            "step" => out.step = Some(real()?),
            "n_max" => out.n_max = Some(count()?),
            "m_max" => out.m_max = Some(count()?),
            "out" => out.out = Some(PathBuf::from(&value)),
            "format" => {
                out.format = Some(Format::parse(&value).ok_or_else(|| bad("unknown format"))?)
            }
            "method" => {
                out.method =
                    Some(MethodArg::from_str(&value, true).map_err(|_| bad("unknown method"))?)
            }
            _ => {
                return Err(Failure::invalid(format!(
                    "config line {lineno}: unknown key {key}"
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let o =
            parse_config("# run\nhbar = 0.05\ntol-quad=1e-10\n\nformat = CSV\nn_max = 7 # rows\n")
                .unwrap();
        assert_eq!(o.hbar, Some(0.05));
        assert_eq!(o.tol_quad, Some(1e-10));
        assert_eq!(o.format, Some(Format::Csv));
        assert_eq!(o.n_max, Some(7));
        assert!(o.m_max.is_none());
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_config("hbar 0.1").unwrap_err().code, 2);
        assert_eq!(parse_config("colour = red").unwrap_err().code, 2);
        assert_eq!(parse_config("hbar = fast").unwrap_err().code, 2);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = parse_config("hbar = 0.2\ntol_root = 1e-10").unwrap();
        let flags = Overrides {
            hbar: Some(0.3),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(flags.over(file)).unwrap();
        assert_eq!(cfg.hbar, 0.3);
        assert_eq!(cfg.tol_root, 1e-10);
        assert_eq!(cfg.tol_quad, pendulum_core::action::DEFAULT_QUAD_TOL);
    }

    #[test]
    fn non_positive_hbar_is_invalid() {
        let flags = Overrides {
            hbar: Some(0.0),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(flags).unwrap_err().code, 2);
    }
}
