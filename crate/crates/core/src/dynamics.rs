//! Direct integration of the equations of motion, used as an independent
//! check on the quadrature results.
//!
//! The full system lives on `TS^2 = {<q,q> = 1, <q,p> = 0}`. The reduced
//! system uses the invariants `pi1 = q_3`, `pi2 = p_3`, `pi3 = <p,p>` on the
//! surface `pi2^2 + l^2 = pi3 (1 - pi1^2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{classify, turning_points, EnergyMomentum, Stratum};

/// Largest constraint residual accepted after a projected step.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Time resolution of first-return event location.
pub const EVENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub q: [f64; 3],
    pub p: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnData {
    pub t_period: f64,
    pub theta_angle: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl FullState {
    pub fn energy(&self) -> f64 {
        0.5 * dot(&self.p, &self.p) + self.q[2]
    }

    pub fn momentum(&self) -> f64 {
        self.q[0] * self.p[1] - self.q[1] * self.p[0]
    }

    /// `(pi1, pi2, pi3)` of this state.
    pub fn invariants(&self) -> [f64; 3] {
        [self.q[2], self.p[2], dot(&self.p, &self.p)]
    }

    /// A point of the torus over `em` at height `x`, moving upward.
    ///
    /// `x` must satisfy `P(x) >= 0` and `|x| < 1`.
    pub fn on_torus(em: EnergyMomentum, x: f64) -> Self {
        let rho = ((1.0 - x) * (1.0 + x)).sqrt();
        // p3^2 = P(x); p2 carries the angular momentum, p1 keeps <q,p> = 0
        let p3 = crate::geometry::eval_cubic(em, x).max(0.0).sqrt();
        Self {
            q: [rho, 0.0, x],
            p: [-x * p3 / rho, em.l / rho, p3],
        }
    }
}

impl ReducedState {
    pub fn energy(&self) -> f64 {
        0.5 * self.pi3 + self.pi1
    }

    /// `pi2^2 + l^2 - pi3 (1 - pi1^2)`.
    pub fn relation_residual(&self) -> f64 {
        self.pi2 * self.pi2 + self.l * self.l - self.pi3 * (1.0 - self.pi1 * self.pi1)
    }

    /// The turning point `pi1 = x_minus` on the torus over `em`.
    pub fn at_lower_turning_point(em: EnergyMomentum) -> Result<Self> {
        let tp = turning_points(em)?;
        Ok(Self {
            pi1: tp.x_minus,
            pi2: 0.0,
            pi3: 2.0 * (em.h - tp.x_minus),
            l: em.l,
        })
    }

    /// The point at height `x` on the torus over `em`, moving upward.
    pub fn at_height(em: EnergyMomentum, x: f64) -> Self {
        Self {
            pi1: x,
            pi2: crate::geometry::eval_cubic(em, x).max(0.0).sqrt(),
            pi3: 2.0 * (em.h - x),
            l: em.l,
        }
    }
}

/// Right-hand side `(dq/dt, dp/dt)` of the constrained equations.
pub fn full_vector_field(state: &FullState) -> ([f64; 3], [f64; 3]) {
    let FullState { q, p } = state;
    let lambda = q[2] - dot(p, p);
    (*p, [lambda * q[0], lambda * q[1], -1.0 + lambda * q[2]])
}

/// Rates `(d pi1, d pi2, d pi3)/dt` of the reduced equations.
pub fn reduced_vector_field(state: &ReducedState) -> [f64; 3] {
    let ReducedState { pi1, pi2, pi3, .. } = *state;
    [pi2, -pi1 * pi3 + pi1 * pi1 - 1.0, -2.0 * pi2]
}

fn rk4<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], dt: f64) -> [f64; N] {
    let axpy = |y: &[f64; N], k: &[f64; N], a: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += a * k[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&axpy(y, &k1, 0.5 * dt));
    let k3 = f(&axpy(y, &k2, 0.5 * dt));
    let k4 = f(&axpy(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// A system integrated by a fourth-order Runge-Kutta step followed by a
/// projection back onto its constraint surface.
pub trait Integrable: Copy {
    fn step(&self, dt: f64) -> Self;
    fn project(&self) -> Self;
    fn constraint_residual(&self) -> f64;
}

impl FullState {
    fn to_array(self) -> [f64; 6] {
        [
            self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2],
        ]
    }

    fn from_array(y: [f64; 6]) -> Self {
        Self {
            q: [y[0], y[1], y[2]],
            p: [y[3], y[4], y[5]],
        }
    }
}

impl Integrable for FullState {
    fn step(&self, dt: f64) -> Self {
        let f = |y: &[f64; 6]| {
            let (dq, dp) = full_vector_field(&FullState::from_array(*y));
            [dq[0], dq[1], dq[2], dp[0], dp[1], dp[2]]
        };
        Self::from_array(rk4(&f, &self.to_array(), dt))
    }

    /// `q <- q / |q|`, then `p <- p - <q,p> q`.
    fn project(&self) -> Self {
        let norm = dot(&self.q, &self.q).sqrt();
        let q = self.q.map(|c| c / norm);
        let qp = dot(&q, &self.p);
        let p = [
            self.p[0] - qp * q[0],
            self.p[1] - qp * q[1],
            self.p[2] - qp * q[2],
        ];
        Self { q, p }
    }

    fn constraint_residual(&self) -> f64 {
        (dot(&self.q, &self.q) - 1.0)
            .abs()
            .max(dot(&self.q, &self.p).abs())
    }
}

/// Reduced state extended by the accumulated azimuthal angle.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AngleState {
    reduced: ReducedState,
    angle: f64,
}

fn reduced_step(state: &AngleState, dt: f64) -> AngleState {
    let l = state.reduced.l;
    let f = |y: &[f64; 4]| {
        let s = ReducedState {
            pi1: y[0],
            pi2: y[1],
            pi3: y[2],
            l,
        };
        let r = reduced_vector_field(&s);
        [r[0], r[1], r[2], l / ((1.0 - y[0]) * (1.0 + y[0]))]
    };
    let r = state.reduced;
    let y = rk4(&f, &[r.pi1, r.pi2, r.pi3, state.angle], dt);
    AngleState {
        reduced: ReducedState {
            pi1: y[0],
            pi2: y[1],
            pi3: y[2],
            l,
        },
        angle: y[3],
    }
}

impl Integrable for ReducedState {
    fn step(&self, dt: f64) -> Self {
        reduced_step(
            &AngleState {
                reduced: *self,
                angle: 0.0,
            },
            dt,
        )
        .reduced
    }

    /// Newton steps along the gradient of the defining relation.
    fn project(&self) -> Self {
        let mut s = *self;
        for _ in 0..3 {
            let g = s.relation_residual();
            if g == 0.0 {
                break;
            }
            let grad = [2.0 * s.pi1 * s.pi3, 2.0 * s.pi2, -(1.0 - s.pi1 * s.pi1)];
            let norm2 = grad.iter().map(|c| c * c).sum::<f64>();
            if norm2 == 0.0 {
                break;
            }
            let k = g / norm2;
            s.pi1 -= k * grad[0];
            s.pi2 -= k * grad[1];
            s.pi3 -= k * grad[2];
        }
        s
    }

    fn constraint_residual(&self) -> f64 {
        self.relation_residual().abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub step: f64,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step
    }
}

/// Integrates from `state` for `duration` with fixed `step`, projecting after
/// every step. The last step is shortened to land on `duration`.
pub fn integrate<S: Integrable>(state: S, duration: f64, step: f64) -> Result<Trajectory<S>> {
    if !(step > 0.0) {
        return Err(Error::DomainError {
            value: step,
            domain: "step > 0",
        });
    }
    let n = (duration / step).ceil().max(0.0) as usize;
    let mut states = Vec::with_capacity(n + 1);
    states.push(state);
    let mut current = state;
    for k in 0..n {
        let dt = (duration - k as f64 * step).min(step);
        current = current.step(dt).project();
        let residual = current.constraint_residual();
        if !(residual <= CONSTRAINT_TOL) {
            return Err(Error::StepError { residual });
        }
        states.push(current);
    }
    Ok(Trajectory { step, states })
}

/// Which crossing marks a return to the seed.
#[derive(Debug, Clone, Copy)]
enum ReturnEvent {
    /// `pi2` turns from negative to non-negative (seed at a lower turning
    /// point).
    LowerTurn,
    /// `pi1` crosses the seed height with the seed's direction of motion.
    Crossing { height: f64, upward: bool },
}

impl ReturnEvent {
    fn value(&self, s: &ReducedState) -> f64 {
        match *self {
            ReturnEvent::LowerTurn => s.pi2,
            ReturnEvent::Crossing { height, upward } => {
                if upward {
                    s.pi1 - height
                } else {
                    height - s.pi1
                }
            }
        }
    }
}

/// Measures the first-return time and azimuthal advance starting from the
/// lower turning point of the torus over `em`.
pub fn measure_first_return(em: EnergyMomentum) -> Result<ReturnData> {
    measure_first_return_with_step(em, DEFAULT_STEP)
}

pub fn measure_first_return_with_step(em: EnergyMomentum, step: f64) -> Result<ReturnData> {
    check_torus(em)?;
    let seed = ReducedState::at_lower_turning_point(em)?;
    first_return(seed, ReturnEvent::LowerTurn, step)
}

/// Same measurement from an arbitrary seed on the torus. Seeds with
/// `pi2 == 0` are treated as lower turning points.
pub fn measure_first_return_from(seed: ReducedState, step: f64) -> Result<ReturnData> {
    let em = EnergyMomentum::new(seed.energy(), seed.l);
    check_torus(em)?;
    let event = if seed.pi2 == 0.0 {
        ReturnEvent::LowerTurn
    } else {
        ReturnEvent::Crossing {
            height: seed.pi1,
            upward: seed.pi2 > 0.0,
        }
    };
    first_return(seed, event, step)
}

fn check_torus(em: EnergyMomentum) -> Result<()> {
    if classify(em) != Stratum::Regular || em.l == 0.0 {
        return Err(Error::NotInRange { h: em.h, l: em.l });
    }
    Ok(())
}

fn first_return(seed: ReducedState, event: ReturnEvent, step: f64) -> Result<ReturnData> {
    // Linearized pendulum period; a generous multiple bounds the search.
    let t_max = 100.0 * 2.0 * PI;
    let advance = |s: &AngleState, dt: f64| {
        let mut next = reduced_step(s, dt);
        next.reduced = next.reduced.project();
        next
    };

    let mut state = AngleState {
        reduced: seed,
        angle: 0.0,
    };
    let mut t = 0.0;
    // The event function starts at zero (or at a zero of pi2); the return is
    // the first upward zero crossing after it has gone negative.
    let mut armed = false;
    let mut g_prev = event.value(&seed);
    while t < t_max {
        let next = advance(&state, step);
        if !(next.reduced.constraint_residual() <= CONSTRAINT_TOL) {
            return Err(Error::StepError {
                residual: next.reduced.constraint_residual(),
            });
        }
        let g = event.value(&next.reduced);
        if g < 0.0 {
            armed = true;
        }
        if armed && g_prev < 0.0 && g >= 0.0 {
            // bisection on the sub-step length from the step start
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if event.value(&advance(&state, mid).reduced) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            let end = advance(&state, tau);
            return Ok(ReturnData {
                t_period: t + tau,
                theta_angle: end.angle,
            });
        }
        g_prev = g;
        state = next;
        t += step;
    }
    Err(Error::EventError { t_max })
}
