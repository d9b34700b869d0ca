//! Period lattices and their monodromy around the pinch point `(1, 0)`.
//!
//! Two independent routes give the monodromy matrix:
//!
//! * analytically, by continuing the rotation number around a loop and
//!   reading off how the period-lattice basis `{(T, -Theta), (0, 2 pi)}`
//!   comes back;
//! * spectrally, by transporting a frame of neighbouring joint-spectrum
//!   differences around the same loop and recording the integer
//!   change of basis.
//!
//! Matrices act on coordinates with respect to the starting basis: column
//! `j` holds the coordinates of the transported `j`-th basis vector. The
//! spectral frame lives in the `(h, l)` plane, dual to the period lattice,
//! so its integer frame change `C` is reported as `(C^-1)^T`.

use std::f64::consts::PI;

use crate::action::{ActionEngine, RotationNumber};
use crate::error::{Error, Result};
use crate::geometry::{classify, EnergyMomentum, Stratum};
use crate::spectrum::{Spectrum, SpectrumPoint, SpectrumSolver};

/// Integer 2x2 matrix, row-major.
pub type IntMatrix = [[i64; 2]; 2];

pub const IDENTITY: IntMatrix = [[1, 0], [0, 1]];

/// Largest distance from an integer accepted when rounding a frame change.
pub const LATTICE_RESIDUAL_GATE: f64 = 0.2;
/// Largest distance from an integer accepted for winding numbers and the
/// rotation-number variation.
pub const WINDING_TOL: f64 = 1e-6;
/// Largest spacing between default-loop samples.
pub const DEFAULT_LOOP_SPACING: f64 = 0.02;
const EDGE_CHECKS: usize = 8;
const PINCH: (f64, f64) = (1.0, 0.0);

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn det(a: &IntMatrix) -> i64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn transpose(a: &IntMatrix) -> IntMatrix {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Inverse of a matrix with determinant +-1.
pub fn unimodular_inverse(a: &IntMatrix) -> Option<IntMatrix> {
    let d = det(a);
    if d != 1 && d != -1 {
        return None;
    }
    Some([[d * a[1][1], -d * a[0][1]], [-d * a[1][0], d * a[0][0]]])
}

/// Basis `{v1, v2}` of the period lattice in (time along `X_H`, time along
/// `X_L`) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodBasis {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

pub fn period_basis(engine: &ActionEngine, em: EnergyMomentum) -> Result<PeriodBasis> {
    if classify(em) != Stratum::Regular {
        return Err(Error::NotInRange { h: em.h, l: em.l });
    }
    let t = engine.period(em)?;
    let theta = match engine.rotation_number(em)? {
        RotationNumber::Principal(v) => v,
        RotationNumber::BranchCut => return Err(Error::BranchCut { h: em.h, l: em.l }),
    };
    Ok(PeriodBasis {
        v1: [2.0 * PI * t, -2.0 * PI * theta],
        v2: [0.0, 2.0 * PI],
    })
}

/// A closed polygon in the regular region. The closing edge from the last
/// vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpec {
    pub vertices: Vec<EnergyMomentum>,
    /// Winding number about `(1, 0)`.
    pub winding: i64,
    /// Sign of the winding number (0 for a trivial loop).
    pub orientation: i8,
}

impl LoopSpec {
    /// Validates `vertices` and computes the winding number. A repeated
    /// first vertex at the end is dropped.
    pub fn new(mut vertices: Vec<EnergyMomentum>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::LoopInvalid(format!(
                "a loop needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for k in 0..EDGE_CHECKS {
                let t = k as f64 / EDGE_CHECKS as f64;
                let p = EnergyMomentum::new(a.h + t * (b.h - a.h), a.l + t * (b.l - a.l));
                let c = classify(p);
                if c != Stratum::Regular {
                    return Err(Error::LoopInvalid(format!(
                        "point ({}, {}) on edge {i} is {c}, not regular",
                        p.h, p.l
                    )));
                }
            }
        }
        let winding = winding_number(&vertices)?;
        Ok(Self {
            vertices,
            winding,
            orientation: winding.signum() as i8,
        })
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self {
            vertices,
            winding: -self.winding,
            orientation: -self.orientation,
        }
    }

    /// The loop traversed `times` times in a row.
    pub fn repeated(&self, times: usize) -> Self {
        let vertices = self
            .vertices
            .iter()
            .copied()
            .cycle()
            .take(self.vertices.len() * times)
            .collect();
        Self {
            vertices,
            winding: self.winding * times as i64,
            orientation: self.orientation,
        }
    }

    /// Vertices followed by the first vertex again.
    pub fn closed_path(&self) -> Vec<EnergyMomentum> {
        let mut path = self.vertices.clone();
        path.push(self.vertices[0]);
        path
    }
}

/// Accumulated signed angle about `(1, 0)` over `2 pi`, rounded.
pub fn winding_number(vertices: &[EnergyMomentum]) -> Result<i64> {
    let n = vertices.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        let (ax, ay) = (a.h - PINCH.0, a.l - PINCH.1);
        let (bx, by) = (b.h - PINCH.0, b.l - PINCH.1);
        total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > WINDING_TOL {
        return Err(Error::LoopInvalid(format!(
            "winding number {turns} is not an integer"
        )));
    }
    Ok(rounded as i64)
}

/// Axis-aligned rectangle `[h0, h1] x [-l_half, l_half]`, positively
/// oriented from `(h0, -l_half)`, with edges subdivided into an odd number
/// of pieces no longer than `spacing`. The odd count keeps samples off
/// `l = 0`.
pub fn rectangle_loop(h0: f64, h1: f64, l_half: f64, spacing: f64) -> Result<LoopSpec> {
    let corners = [
        EnergyMomentum::new(h0, -l_half),
        EnergyMomentum::new(h1, -l_half),
        EnergyMomentum::new(h1, l_half),
        EnergyMomentum::new(h0, l_half),
    ];
    let mut vertices = Vec::new();
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let len = (b.h - a.h).hypot(b.l - a.l);
        let mut pieces = (len / spacing).ceil().max(1.0) as usize;
        if pieces.is_multiple_of(2) {
            pieces += 1;
        }
        for k in 0..pieces {
            let t = k as f64 / pieces as f64;
            vertices.push(EnergyMomentum::new(
                a.h + t * (b.h - a.h),
                a.l + t * (b.l - a.l),
            ));
        }
    }
    LoopSpec::new(vertices)
}

/// The rectangle with corners `(0, +-0.5)`, `(2, +-0.5)`. Samples are at most
/// `min(0.02, hbar / 5)` apart.
pub fn default_loop(hbar: f64) -> Result<LoopSpec> {
    if !(hbar > 0.0) {
        return Err(Error::DomainError {
            value: hbar,
            domain: "hbar > 0",
        });
    }
    rectangle_loop(0.0, 2.0, 0.5, DEFAULT_LOOP_SPACING.min(hbar / 5.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Spectral,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyResult {
    pub matrix: IntMatrix,
    pub method: Method,
    pub loop_spec: LoopSpec,
    /// Spectral method only: integer change of the transported `(h, l)`
    /// frame, `frame_end = frame_start * frame_change`.
    pub frame_change: Option<IntMatrix>,
}

/// Monodromy from the variation of the continued rotation number.
pub fn monodromy_analytic(engine: &ActionEngine, loop_spec: &LoopSpec) -> Result<MonodromyResult> {
    let branch = engine.continue_theta(&loop_spec.closed_path())?;
    let variation = branch.last().unwrap().value - branch[0].value;
    // v1 = 2 pi (T, -Theta) comes back as v1 + k v2 with k = -variation
    let k = -variation;
    let rounded = k.round();
    if (k - rounded).abs() > WINDING_TOL {
        return Err(Error::ConvergenceError(format!(
            "rotation number variation {variation} is not an integer"
        )));
    }
    Ok(MonodromyResult {
        matrix: [[1, 0], [rounded as i64, 1]],
        method: Method::Analytic,
        loop_spec: loop_spec.clone(),
        frame_change: None,
    })
}

/// The spectral quadrilateral with lower-left vertex `(n, m)`, in the order
/// `(n, m)`, `(n+1, m)`, `(n+1, m+1)`, `(n, m+1)`.
pub fn lattice_cell(spectrum: &Spectrum, n: i64, m: i64) -> Result<[SpectrumPoint; 4]> {
    let get = |n: i64, m: i64| {
        spectrum
            .get(n, m)
            .copied()
            .ok_or(Error::MissingPoint { n, m })
    };
    Ok([
        get(n, m)?,
        get(n + 1, m)?,
        get(n + 1, m + 1)?,
        get(n, m + 1)?,
    ])
}

type Frame = [[f64; 2]; 2];

/// Columns `p(n+1, m) - p(n, m)` and `p(n, m+1) - p(n, m)`.
fn cell_frame(cell: &[SpectrumPoint; 4]) -> Frame {
    let u1 = [cell[1].h - cell[0].h, cell[1].l - cell[0].l];
    let u2 = [cell[3].h - cell[0].h, cell[3].l - cell[0].l];
    [[u1[0], u2[0]], [u1[1], u2[1]]]
}

fn solve2(a: &Frame, b: &Frame) -> Option<Frame> {
    let d = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let inv = [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = inv[i][0] * b[0][j] + inv[i][1] * b[1][j];
        }
    }
    Some(out)
}

fn mul_real_int(a: &Frame, k: &IntMatrix) -> Frame {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * k[0][j] as f64 + a[i][1] * k[1][j] as f64;
        }
    }
    out
}

/// Lower-left vertices whose full quadrilateral is present in the spectrum,
/// with their cells.
fn anchors(spectrum: &Spectrum) -> Vec<[SpectrumPoint; 4]> {
    spectrum
        .points
        .iter()
        .filter_map(|p| lattice_cell(spectrum, i64::from(p.qn.n), p.qn.m).ok())
        .collect()
}

fn nearest_cell(cells: &[[SpectrumPoint; 4]], at: EnergyMomentum) -> Option<&[SpectrumPoint; 4]> {
    cells.iter().min_by(|a, b| {
        let da = (a[0].h - at.h).hypot(a[0].l - at.l);
        let db = (b[0].h - at.h).hypot(b[0].l - at.l);
        da.total_cmp(&db)
    })
}

/// Spectral monodromy starting from the cell frame at the loop's first
/// vertex.
pub fn monodromy_spectral(spectrum: &Spectrum, loop_spec: &LoopSpec) -> Result<MonodromyResult> {
    monodromy_spectral_with_frame(spectrum, loop_spec, IDENTITY)
}

/// Spectral monodromy with the starting frame `cell_frame * start`, where
/// `start` is unimodular.
pub fn monodromy_spectral_with_frame(
    spectrum: &Spectrum,
    loop_spec: &LoopSpec,
    start: IntMatrix,
) -> Result<MonodromyResult> {
    let Some(start_inv) = unimodular_inverse(&start) else {
        return Err(Error::DomainError {
            value: det(&start) as f64,
            domain: "unimodular starting frame",
        });
    };
    let cells = anchors(spectrum);
    let path = loop_spec.closed_path();
    let cell_at = |i: usize| -> Result<&[SpectrumPoint; 4]> {
        let at = path[i];
        let cell = nearest_cell(&cells, at)
            .ok_or_else(|| Error::LoopInvalid("spectrum has no complete quadrilateral".into()))?;
        let frame = cell_frame(cell);
        let reach = 2.0 * (frame[0][0].hypot(frame[1][0]) + frame[0][1].hypot(frame[1][1]));
        if (cell[0].h - at.h).hypot(cell[0].l - at.l) > reach {
            return Err(Error::LoopInvalid(format!(
                "spectrum does not cover the loop near ({}, {})",
                at.h, at.l
            )));
        }
        Ok(cell)
    };

    let mut labels = start;
    let mut frame = mul_real_int(&cell_frame(cell_at(0)?), &labels);
    let mut change = IDENTITY;
    for i in 1..path.len() {
        let basis = cell_frame(cell_at(i)?);
        let coords = solve2(&basis, &frame).ok_or(Error::LatticeAmbiguous {
            sample: i,
            residual: f64::INFINITY,
        })?;
        let mut next = [[0i64; 2]; 2];
        let mut residual: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let v = coords[r][c].round();
                residual = residual.max((coords[r][c] - v).abs());
                next[r][c] = v as i64;
            }
        }
        if residual > LATTICE_RESIDUAL_GATE {
            return Err(Error::LatticeAmbiguous {
                sample: i,
                residual,
            });
        }
        let prev_inv = unimodular_inverse(&labels).ok_or(Error::LatticeAmbiguous {
            sample: i,
            residual,
        })?;
        if unimodular_inverse(&next).is_none() {
            return Err(Error::LatticeAmbiguous {
                sample: i,
                residual,
            });
        }
        change = mat_mul(&change, &mat_mul(&prev_inv, &next));
        labels = next;
        frame = mul_real_int(&basis, &labels);
    }
    // `change` telescopes to start^-1 * labels_end
    debug_assert_eq!(change, mat_mul(&start_inv, &labels));
    let inverse = unimodular_inverse(&change).expect("product of unimodular matrices");
    Ok(MonodromyResult {
        matrix: transpose(&inverse),
        method: Method::Spectral,
        loop_spec: loop_spec.clone(),
        frame_change: Some(change),
    })
}

/// Builds a spectrum window covering `loop_spec` with a margin of a few
/// lattice cells.
pub fn spectrum_for_loop(solver: &SpectrumSolver, loop_spec: &LoopSpec) -> Result<Spectrum> {
    const MARGIN: f64 = 3.0;
    let mut a1_max: f64 = 0.0;
    let mut l_max: f64 = 0.0;
    for v in &loop_spec.vertices {
        a1_max = a1_max.max(solver.engine.action_a1(*v)?);
        l_max = l_max.max(v.l.abs());
    }
    let n_max = (a1_max / solver.hbar + MARGIN).ceil() as u32;
    let m_max = (l_max / solver.hbar + MARGIN).ceil() as u32;
    solver.build_spectrum(n_max, m_max)
}
