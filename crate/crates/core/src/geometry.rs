//! The turning-point cubic and the energy-momentum range.
//!
//! Motion at energy `h` and angular momentum `l` is confined to heights
//! `x` where `P(x) = 2 (h - x)(1 - x^2) - l^2` is non-negative. The range of
//! the energy-momentum map is bounded by the curves where `P` acquires a
//! double root; these are parametrized by that double root `s` in `[-1, 0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Band around the boundary curve (and the two special points) inside which a
/// point is snapped to the lower-dimensional stratum.
pub const STRATUM_TOL: f64 = 1e-12;

/// Bracket for the boundary parameter used by [`min_energy_for_momentum`].
const S_BRACKET: (f64, f64) = (-1.0 + 1e-15, -1e-12);

/// A point `(h, l)` of the energy-momentum plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMomentum {
    pub h: f64,
    pub l: f64,
}

impl EnergyMomentum {
    pub const fn new(h: f64, l: f64) -> Self {
        Self { h, l }
    }

    /// Mirror image in the `h`-axis.
    pub fn reflect(self) -> Self {
        Self::new(self.h, -self.l)
    }

    pub fn classify(self) -> Stratum {
        classify(self)
    }
}

/// Stratification of the energy-momentum plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stratum {
    /// Regular values: fibers are 2-tori.
    Regular,
    /// Relative equilibria, `h = h_min(|l|)` with `l != 0`.
    BoundaryCurve,
    /// The stable equilibrium `(-1, 0)`.
    MinPoint,
    /// The unstable equilibrium `(1, 0)`; its fiber is a pinched torus.
    PinchPoint,
    /// Not attained by the energy-momentum map.
    Outside,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Regular => "regular",
            Stratum::BoundaryCurve => "boundary",
            Stratum::MinPoint => "min",
            Stratum::PinchPoint => "pinch",
            Stratum::Outside => "outside",
        }
    }
}

impl std::fmt::Display for Stratum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Roots `x_minus <= x_plus <= x_zero` of the turning-point cubic.
///
/// `gap_lo = 1 + x_minus` and `gap_hi = 1 - x_plus` are carried separately
/// because both can be tiny (small `|l|`), and the integrands of the action
/// engine divide by them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub x_minus: f64,
    pub x_plus: f64,
    pub x_zero: f64,
    pub gap_lo: f64,
    pub gap_hi: f64,
}

impl TurningPoints {
    /// Width `x_plus - x_minus` of the oscillation in height.
    pub fn width(&self) -> f64 {
        self.x_plus - self.x_minus
    }

    pub fn roots(&self) -> [f64; 3] {
        [self.x_minus, self.x_plus, self.x_zero]
    }
}

/// A point of the boundary curves, i.e. a relative equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub s: f64,
    pub sign: i8,
    pub h: f64,
    pub l: f64,
}

impl BoundaryPoint {
    pub fn em(&self) -> EnergyMomentum {
        EnergyMomentum::new(self.h, self.l)
    }
}

/// `P(x) = 2 (h - x)(1 - x^2) - l^2`.
pub fn eval_cubic(em: EnergyMomentum, x: f64) -> f64 {
    2.0 * (em.h - x) * (1.0 - x) * (1.0 + x) - em.l * em.l
}

/// `dP/dx`.
pub fn eval_cubic_derivative(em: EnergyMomentum, x: f64) -> f64 {
    6.0 * x * x - 4.0 * em.h * x - 2.0
}

fn boundary_h(s: f64) -> f64 {
    1.5 * s - 0.5 / s
}

fn boundary_abs_l(s: f64) -> f64 {
    (1.0 - s) * (1.0 + s) / (-s).sqrt()
}

/// The boundary curve point with double root `s` on the branch `sign`.
pub fn boundary_point(s: f64, sign: i8) -> Result<BoundaryPoint> {
    if !(-1.0..0.0).contains(&s) {
        return Err(Error::DomainError {
            value: s,
            domain: "[-1, 0)",
        });
    }
    if sign != 1 && sign != -1 {
        return Err(Error::DomainError {
            value: f64::from(sign),
            domain: "{-1, +1}",
        });
    }
    Ok(BoundaryPoint {
        s,
        sign,
        h: boundary_h(s),
        l: f64::from(sign) * boundary_abs_l(s),
    })
}

/// Minimum energy on the level set `L = l`, returned as `(s, h)` where `s` is
/// the boundary parameter.
pub fn min_energy_for_momentum(l: f64) -> Result<(f64, f64)> {
    let target = l.abs();
    if target == 0.0 {
        return Ok((-1.0, -1.0));
    }
    let f = |s: f64| boundary_abs_l(s) - target;
    let (mut lo, mut hi) = S_BRACKET;
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo > 0.0 {
        // |l| below what the bracket resolves: s is within 1e-15 of -1.
        return Ok((-1.0 + 0.5 * target, boundary_h(-1.0 + 0.5 * target)));
    }
    if f_hi < 0.0 {
        return Err(Error::ConvergenceError(format!(
            "|l| = {target} exceeds the boundary bracket"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo > 1e-12 {
        return Err(Error::ConvergenceError(format!(
            "boundary bisection stalled with width {:e}",
            hi - lo
        )));
    }
    let s = 0.5 * (lo + hi);
    Ok((s, boundary_h(s)))
}

pub fn classify(em: EnergyMomentum) -> Stratum {
    let EnergyMomentum { h, l } = em;
    if !h.is_finite() || !l.is_finite() {
        return Stratum::Outside;
    }
    if l.abs() <= STRATUM_TOL {
        if (h - 1.0).abs() <= STRATUM_TOL {
            return Stratum::PinchPoint;
        }
        if (h + 1.0).abs() <= STRATUM_TOL {
            return Stratum::MinPoint;
        }
    }
    if l == 0.0 {
        return if h > -1.0 {
            Stratum::Regular
        } else {
            Stratum::Outside
        };
    }
    let Ok((_, h_min)) = min_energy_for_momentum(l) else {
        return Stratum::Outside;
    };
    let band = STRATUM_TOL * h_min.abs().max(1.0);
    if (h - h_min).abs() <= band {
        Stratum::BoundaryCurve
    } else if h > h_min {
        Stratum::Regular
    } else {
        Stratum::Outside
    }
}

/// Newton iteration on a shifted copy of the cubic; a step is kept only when
/// it lowers the residual, so near-double roots are left alone.
fn polish(mut x: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let mut fx = f(x);
    for _ in 0..8 {
        let d = df(x);
        if fx == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        let f_next = f(next);
        if !(f_next.abs() < fx.abs()) {
            break;
        }
        x = next;
        fx = f_next;
    }
    x
}

/// Trigonometric solution of the monic cubic `x^3 - h x^2 - x + (h - l^2/2)`.
fn trig_roots(em: EnergyMomentum) -> Option<[f64; 3]> {
    let h = em.h;
    let p = -1.0 - h * h / 3.0;
    let q = -2.0 * h * h * h / 27.0 + 2.0 * h / 3.0 - 0.5 * em.l * em.l;
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let scale = 4.0 * (p * p * p).abs() + 27.0 * q * q;
    if disc > 1e-12 * scale {
        return None;
    }
    let r = 2.0 * (-p / 3.0).sqrt();
    let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = r * (phi - 2.0 * PI * k as f64 / 3.0).cos() + h / 3.0;
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Some(roots)
}

/// The three real roots of `P`, with accurate gaps to the poles at `x = +-1`.
pub fn turning_points(em: EnergyMomentum) -> Result<TurningPoints> {
    let stratum = classify(em);
    let EnergyMomentum { h, l } = em;
    match stratum {
        Stratum::Outside => return Err(Error::NotInRange { h, l }),
        Stratum::MinPoint => return Ok(factored(-1.0)),
        Stratum::PinchPoint => return Ok(factored(1.0)),
        Stratum::BoundaryCurve => {
            let (s, _) = min_energy_for_momentum(l)?;
            let t = -0.5 * s - 0.5 / s;
            return Ok(TurningPoints {
                x_minus: s,
                x_plus: s,
                x_zero: t,
                gap_lo: 1.0 + s,
                gap_hi: 1.0 - s,
            });
        }
        Stratum::Regular => {}
    }
    if l == 0.0 {
        return Ok(factored(h));
    }

    let [r0, r1, r2] = trig_roots(em).ok_or(Error::NotInRange { h, l })?;
    let f = |x: f64| eval_cubic(em, x);
    let df = |x: f64| eval_cubic_derivative(em, x);
    let x_zero = polish(r2, f, df);
    let mut x_minus = polish(r0, f, df);
    let mut x_plus = polish(r1, f, df);

    let l2 = l * l;
    // P(-1 + a) = 2 (h + 1 - a)(2 - a) a - l^2
    let mut gap_lo = 1.0 + x_minus;
    if gap_lo < 0.5 {
        let guess = if gap_lo > 0.0 {
            gap_lo
        } else {
            l2 / (4.0 * (h + 1.0))
        };
        gap_lo = polish(
            guess,
            |a| 2.0 * (h + 1.0 - a) * (2.0 - a) * a - l2,
            |a| 2.0 * ((2.0 - a) * (h + 1.0 - 2.0 * a) - (h + 1.0 - a) * a),
        );
        x_minus = gap_lo - 1.0;
    }
    // P(1 - b) = 2 (h - 1 + b) b (2 - b) - l^2
    let mut gap_hi = 1.0 - x_plus;
    if gap_hi < 0.5 {
        let guess = if gap_hi > 0.0 { gap_hi } else { f64::EPSILON };
        gap_hi = polish(
            guess,
            |b| 2.0 * (h - 1.0 + b) * b * (2.0 - b) - l2,
            |b| 2.0 * ((h - 1.0 + 2.0 * b) * (2.0 - b) - (h - 1.0 + b) * b),
        );
        x_plus = 1.0 - gap_hi;
    }
    Ok(TurningPoints {
        x_minus,
        x_plus,
        x_zero,
        gap_lo,
        gap_hi,
    })
}

/// Roots for `l = 0`, where `P = 2 (h - x)(1 - x)(1 + x)`.
fn factored(h: f64) -> TurningPoints {
    let mut roots = [-1.0, h, 1.0];
    roots.sort_by(|a, b| a.total_cmp(b));
    TurningPoints {
        x_minus: roots[0],
        x_plus: roots[1],
        x_zero: roots[2],
        gap_lo: 1.0 + roots[0],
        gap_hi: 1.0 - roots[1],
    }
}

/// Samples both boundary branches as a single polyline running from the
/// `l < 0` far end, through `(-1, 0)`, out to the `l > 0` far end.
///
/// `count` values of `s` are used per branch with geometric spacing in `-s`
/// from 1 down to 1e-4, so the `l -> infinity` end stays resolved.
pub fn sample_locus(count: usize) -> Result<Vec<BoundaryPoint>> {
    if count < 2 {
        return Err(Error::DomainError {
            value: count as f64,
            domain: "count >= 2",
        });
    }
    const NEG_S_MIN: f64 = 1e-4;
    let s_values: Vec<f64> = (0..count)
        .map(|k| -NEG_S_MIN.powf(k as f64 / (count - 1) as f64))
        .collect();
    let mut points = Vec::with_capacity(2 * count - 1);
    for &s in s_values.iter().rev() {
        points.push(boundary_point(s, -1)?);
    }
    for &s in s_values.iter().skip(1) {
        points.push(boundary_point(s, 1)?);
    }
    Ok(points)
}
