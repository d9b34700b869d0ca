//! Complete integrals over one oscillation in height: the normalized period,
//! the rotation number, the first action and the auxiliary integral `I`.
//!
//! All four are integrals over `[x_minus, x_plus]` with square-root endpoint
//! singularities. The substitution `x = x_minus + (x_plus - x_minus) sin^2(t)`
//! removes them:
//!
//! ```text
//! sqrt(P(x)) = (x_plus - x_minus) sin(t) cos(t) sqrt(2 (x_zero - x))
//! dx / sqrt(P(x)) = 2 dt / sqrt(2 (x_zero - x))
//! ```
//!
//! leaving smooth integrands on `[0, pi/2]`. What is left of the poles at
//! `x = -1` and `x = 1` (and of `x_zero` for the period near the pinch point)
//! shows up as narrow peaks at the ends, handled by geometric panel grading.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{
    classify, min_energy_for_momentum, turning_points, EnergyMomentum, Stratum, TurningPoints,
};
use crate::quadrature::{graded_panels, integrate_panels};

/// Quadrature convergence target used unless overridden.
pub const DEFAULT_QUAD_TOL: f64 = 1e-11;
/// Half-width of the excluded band around `h = 1` on `l = 0` for the period.
pub const PINCH_GUARD: f64 = 1e-9;
/// Largest jump of the continued rotation number accepted between vertices.
pub const MAX_THETA_STEP: f64 = 0.25;
/// Midpoint refinement cap for [`ActionEngine::continue_theta`].
pub const MAX_REFINEMENT: u32 = 20;

/// Principal value of the rotation number, or the marker for `l = 0` where
/// it jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationNumber {
    Principal(f64),
    BranchCut,
}

impl RotationNumber {
    pub fn value(self) -> Option<f64> {
        match self {
            RotationNumber::Principal(v) => Some(v),
            RotationNumber::BranchCut => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBundle {
    pub t_tilde: f64,
    pub theta_tilde: RotationNumber,
    pub a1: f64,
    pub i_value: f64,
}

impl ActionBundle {
    /// `a1 - (2 h T - I - l Theta)`; vanishes up to quadrature error.
    pub fn identity_residual(&self, em: EnergyMomentum) -> f64 {
        let theta = self.theta_tilde.value().unwrap_or(0.0);
        self.a1 - (2.0 * em.h * self.t_tilde - self.i_value - em.l * theta)
    }
}

/// Rotation number continued along a path, off the principal branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchedTheta {
    pub value: f64,
    pub sheet: i64,
}

/// Derivative of the action map `(h, l) -> (A1, A2 = l)`, laid out as
/// `entries[i][j] = d A_j / d x_i` with `x = (h, l)`:
///
/// ```text
/// [[ T,     0 ],
///  [ -Theta, 1 ]]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionJacobian {
    pub entries: [[f64; 2]; 2],
}

impl ActionJacobian {
    pub fn da1_dh(&self) -> f64 {
        self.entries[0][0]
    }

    pub fn da1_dl(&self) -> f64 {
        self.entries[1][0]
    }
}

/// Boundary closed forms at double root `s`, for the branch with sign of `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLimits {
    pub t_tilde: f64,
    pub theta_tilde: f64,
    pub i_value: f64,
}

impl BoundaryLimits {
    pub fn at(s: f64, sign: f64) -> Self {
        let root = (3.0 * s * s + 1.0).sqrt();
        Self {
            t_tilde: (-s).sqrt() / root,
            theta_tilde: sign.signum() / root,
            i_value: -2.0 * (-s).powf(1.5) / root,
        }
    }
}

const T_SLOT: usize = 0;
const THETA_SLOT: usize = 1;
const A1_SLOT: usize = 2;
const I_SLOT: usize = 3;

/// Evaluates the complete integrals at a fixed quadrature tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionEngine {
    pub quad_tol: f64,
}

impl Default for ActionEngine {
    fn default() -> Self {
        Self {
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }
}

impl ActionEngine {
    pub fn with_tolerance(quad_tol: f64) -> Self {
        Self { quad_tol }
    }

    /// Integrals of the four integrands over one oscillation. Slots that are
    /// not requested are left at zero.
    fn integrals(
        &self,
        em: EnergyMomentum,
        tp: &TurningPoints,
        want: [bool; 4],
    ) -> Result<[f64; 4]> {
        let d = tp.width();
        if d <= 0.0 {
            return Ok([0.0; 4]);
        }
        let l = em.l;
        let x0_gap = tp.x_zero - tp.x_plus;
        let scale_lo = (tp.gap_lo / d).sqrt();
        let hi_gap = [tp.gap_hi, x0_gap]
            .into_iter()
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let scale_hi = if hi_gap.is_finite() {
            (hi_gap / d).sqrt()
        } else {
            0.0
        };
        let panels = graded_panels(0.0, FRAC_PI_2, scale_lo, scale_hi);
        let integrand = |t: f64| {
            let (s, c) = t.sin_cos();
            let (s2, c2) = (s * s, c * c);
            let one_plus = tp.gap_lo + d * s2;
            let one_minus = tp.gap_hi + d * c2;
            let root = (2.0 * (x0_gap + d * c2)).sqrt();
            let mut out = [0.0; 4];
            if want[T_SLOT] {
                out[T_SLOT] = 2.0 / root;
            }
            if want[THETA_SLOT] {
                out[THETA_SLOT] = 2.0 * l / (one_plus * one_minus * root);
            }
            if want[A1_SLOT] {
                out[A1_SLOT] = 2.0 * d * d * s2 * c2 * root / (one_plus * one_minus);
            }
            if want[I_SLOT] {
                let x = if s2 < 0.5 {
                    tp.x_minus + d * s2
                } else {
                    tp.x_plus - d * c2
                };
                out[I_SLOT] = 4.0 * x / root;
            }
            out
        };
        let raw = integrate_panels(&panels, integrand, self.quad_tol).map_err(|e| {
            Error::QuadratureError {
                h: em.h,
                l: em.l,
                reason: format!(
                    "no convergence at {} nodes (last relative change {:e})",
                    crate::quadrature::MAX_NODES,
                    e.last_change
                ),
            }
        })?;
        Ok([raw[0] / PI, raw[1] / PI, raw[2] / PI, raw[3] / PI])
    }

    /// Boundary parameter for points on the boundary curve or the minimum.
    fn boundary_s(em: EnergyMomentum) -> Result<f64> {
        min_energy_for_momentum(em.l).map(|(s, _)| s)
    }

    fn require_torus_or_boundary(em: EnergyMomentum) -> Result<Stratum> {
        match classify(em) {
            s @ (Stratum::Regular | Stratum::BoundaryCurve | Stratum::MinPoint) => Ok(s),
            _ => Err(Error::NotInRange { h: em.h, l: em.l }),
        }
    }

    fn guard_pinch(em: EnergyMomentum) -> Result<()> {
        if em.l == 0.0 && (em.h - 1.0).abs() <= PINCH_GUARD {
            return Err(Error::QuadratureError {
                h: em.h,
                l: em.l,
                reason: "period diverges at the pinch point".into(),
            });
        }
        Ok(())
    }

    /// Normalized period `T / (2 pi)`.
    pub fn period(&self, em: EnergyMomentum) -> Result<f64> {
        match Self::require_torus_or_boundary(em)? {
            Stratum::Regular => {
                Self::guard_pinch(em)?;
                let tp = turning_points(em)?;
                Ok(self.integrals(em, &tp, [true, false, false, false])?[T_SLOT])
            }
            _ => Ok(BoundaryLimits::at(Self::boundary_s(em)?, 1.0).t_tilde),
        }
    }

    /// Principal rotation number `Theta / (2 pi)`.
    pub fn rotation_number(&self, em: EnergyMomentum) -> Result<RotationNumber> {
        let stratum = Self::require_torus_or_boundary(em)?;
        if em.l == 0.0 {
            return Ok(RotationNumber::BranchCut);
        }
        match stratum {
            Stratum::Regular => {
                let tp = turning_points(em)?;
                let v = self.integrals(em, &tp, [false, true, false, false])?[THETA_SLOT];
                Ok(RotationNumber::Principal(v))
            }
            _ => Ok(RotationNumber::Principal(
                BoundaryLimits::at(Self::boundary_s(em)?, em.l).theta_tilde,
            )),
        }
    }

    /// First action; zero on the boundary of the range.
    pub fn action_a1(&self, em: EnergyMomentum) -> Result<f64> {
        match classify(em) {
            Stratum::Outside => Err(Error::NotInRange { h: em.h, l: em.l }),
            Stratum::BoundaryCurve | Stratum::MinPoint => Ok(0.0),
            Stratum::Regular | Stratum::PinchPoint => {
                let tp = turning_points(em)?;
                Ok(self.integrals(em, &tp, [false, false, true, false])?[A1_SLOT])
            }
        }
    }

    /// `I = (2/pi) int x / sqrt(P) dx`.
    pub fn integral_i(&self, em: EnergyMomentum) -> Result<f64> {
        match Self::require_torus_or_boundary(em)? {
            Stratum::Regular => {
                let tp = turning_points(em)?;
                Ok(self.integrals(em, &tp, [false, false, false, true])?[I_SLOT])
            }
            _ => Ok(BoundaryLimits::at(Self::boundary_s(em)?, 1.0).i_value),
        }
    }

    /// All four quantities from one set of turning points and one quadrature.
    pub fn action_bundle(&self, em: EnergyMomentum) -> Result<ActionBundle> {
        match Self::require_torus_or_boundary(em)? {
            Stratum::Regular => {
                Self::guard_pinch(em)?;
                let tp = turning_points(em)?;
                let v = self.integrals(em, &tp, [true, em.l != 0.0, true, true])?;
                Ok(ActionBundle {
                    t_tilde: v[T_SLOT],
                    theta_tilde: if em.l == 0.0 {
                        RotationNumber::BranchCut
                    } else {
                        RotationNumber::Principal(v[THETA_SLOT])
                    },
                    a1: v[A1_SLOT],
                    i_value: v[I_SLOT],
                })
            }
            _ => {
                let lim = BoundaryLimits::at(Self::boundary_s(em)?, em.l);
                Ok(ActionBundle {
                    t_tilde: lim.t_tilde,
                    theta_tilde: if em.l == 0.0 {
                        RotationNumber::BranchCut
                    } else {
                        RotationNumber::Principal(lim.theta_tilde)
                    },
                    a1: 0.0,
                    i_value: lim.i_value,
                })
            }
        }
    }

    pub fn action_jacobian(&self, em: EnergyMomentum) -> Result<ActionJacobian> {
        if classify(em) != Stratum::Regular {
            return Err(Error::NotInRange { h: em.h, l: em.l });
        }
        if em.l == 0.0 {
            return Err(Error::BranchCut { h: em.h, l: em.l });
        }
        let tp = turning_points(em)?;
        let v = self.integrals(em, &tp, [true, true, false, false])?;
        Ok(ActionJacobian {
            entries: [[v[T_SLOT], 0.0], [-v[THETA_SLOT], 1.0]],
        })
    }

    /// A representative of the rotation number modulo 1. On `l = 0` the
    /// one-sided limit from `l > 0` is used; both sides agree modulo 1.
    fn theta_representative(&self, em: EnergyMomentum) -> Result<f64> {
        if classify(em) != Stratum::Regular {
            return Err(Error::NotInRange { h: em.h, l: em.l });
        }
        match self.rotation_number(em)? {
            RotationNumber::Principal(v) => Ok(v),
            RotationNumber::BranchCut => Ok(if em.h < 1.0 { 0.5 } else { 1.0 }),
        }
    }

    /// Continues the rotation number along `path`, choosing at every vertex
    /// the integer translate nearest the previous value. Segments whose jump
    /// exceeds [`MAX_THETA_STEP`] are bisected.
    pub fn continue_theta(&self, path: &[EnergyMomentum]) -> Result<Vec<BranchedTheta>> {
        let Some(&first) = path.first() else {
            return Ok(Vec::new());
        };
        let start = self.theta_representative(first)?;
        let mut out = Vec::with_capacity(path.len());
        out.push(BranchedTheta {
            value: start,
            sheet: 0,
        });
        let mut value = start;
        for pair in path.windows(2) {
            let (next, principal) = self.continue_segment(pair[0], value, pair[1], 0)?;
            value = next;
            out.push(BranchedTheta {
                value,
                sheet: (value - principal).round() as i64,
            });
        }
        Ok(out)
    }

    /// Returns the continued value at `to` and the representative it was
    /// derived from.
    fn continue_segment(
        &self,
        from: EnergyMomentum,
        from_value: f64,
        to: EnergyMomentum,
        depth: u32,
    ) -> Result<(f64, f64)> {
        let principal = self.theta_representative(to)?;
        let candidate = principal + (from_value - principal).round();
        if (candidate - from_value).abs() <= MAX_THETA_STEP {
            return Ok((candidate, principal));
        }
        if depth >= MAX_REFINEMENT {
            return Err(Error::RefinementLimit {
                levels: MAX_REFINEMENT,
            });
        }
        let mid = EnergyMomentum::new(0.5 * (from.h + to.h), 0.5 * (from.l + to.l));
        let (mid_value, _) = self.continue_segment(from, from_value, mid, depth + 1)?;
        self.continue_segment(mid, mid_value, to, depth + 1)
    }
}

pub fn period(em: EnergyMomentum) -> Result<f64> {
    ActionEngine::default().period(em)
}

pub fn rotation_number(em: EnergyMomentum) -> Result<RotationNumber> {
    ActionEngine::default().rotation_number(em)
}

pub fn action_a1(em: EnergyMomentum) -> Result<f64> {
    ActionEngine::default().action_a1(em)
}

pub fn integral_i(em: EnergyMomentum) -> Result<f64> {
    ActionEngine::default().integral_i(em)
}

pub fn action_bundle(em: EnergyMomentum) -> Result<ActionBundle> {
    ActionEngine::default().action_bundle(em)
}

pub fn action_jacobian(em: EnergyMomentum) -> Result<ActionJacobian> {
    ActionEngine::default().action_jacobian(em)
}

pub fn continue_theta(path: &[EnergyMomentum]) -> Result<Vec<BranchedTheta>> {
    ActionEngine::default().continue_theta(path)
}
