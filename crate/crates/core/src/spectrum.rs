//! Bohr-Sommerfeld joint spectrum: energy-momentum pairs `(h, m hbar)` with
//! `A1(h, m hbar) = n hbar`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::action::ActionEngine;
use crate::error::{Error, Result};
use crate::geometry::{min_energy_for_momentum, EnergyMomentum, Stratum};

/// Band on `|n hbar - 4/pi|` inside which `(n, 0)` is treated as landing on
/// the pinch point.
pub const PINCH_TOL: f64 = 1e-12;
/// Bisection stops once the energy bracket is this narrow.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
/// Lower end of the energy bracket above the minimum.
const BRACKET_OFFSET: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantumNumbers {
    pub n: u32,
    pub m: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub qn: QuantumNumbers,
    pub h: f64,
    pub l: f64,
    pub a1: f64,
    pub stratum: Stratum,
}

impl SpectrumPoint {
    pub fn em(&self) -> EnergyMomentum {
        EnergyMomentum::new(self.h, self.l)
    }
}

/// Result of [`SpectrumSolver::build_spectrum`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub hbar: f64,
    /// Sorted by `(m, n)`.
    pub points: Vec<SpectrumPoint>,
    /// Quantum numbers skipped because they land on the pinch point.
    pub excluded: Vec<QuantumNumbers>,
}

impl Spectrum {
    pub fn get(&self, n: i64, m: i64) -> Option<&SpectrumPoint> {
        let n = u32::try_from(n).ok()?;
        self.points
            .binary_search_by(|p| (p.qn.m, p.qn.n).cmp(&(m, n)))
            .ok()
            .map(|i| &self.points[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSolver {
    pub hbar: f64,
    pub engine: ActionEngine,
    pub root_tol: f64,
}

impl SpectrumSolver {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::DomainError {
                value: hbar,
                domain: "hbar > 0",
            });
        }
        Ok(Self {
            hbar,
            engine: ActionEngine::default(),
            root_tol: DEFAULT_ROOT_TOL,
        })
    }

    pub fn with_engine(mut self, engine: ActionEngine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_root_tol(mut self, root_tol: f64) -> Self {
        self.root_tol = root_tol;
        self
    }

    pub fn momentum(&self, m: i64) -> f64 {
        m as f64 * self.hbar
    }

    /// Solves `A1(h, m hbar) = n hbar` for `h`.
    pub fn solve_energy(&self, n: u32, m: i64) -> Result<SpectrumPoint> {
        let qn = QuantumNumbers { n, m };
        let l = self.momentum(m);
        let target = f64::from(n) * self.hbar;
        let (_, h_min) = min_energy_for_momentum(l)?;
        if n == 0 {
            let stratum = if m == 0 {
                Stratum::MinPoint
            } else {
                Stratum::BoundaryCurve
            };
            return Ok(SpectrumPoint {
                qn,
                h: h_min,
                l,
                a1: 0.0,
                stratum,
            });
        }
        if m == 0 && (target - 4.0 / PI).abs() <= PINCH_TOL {
            return Err(Error::PinchCollision { n, m });
        }

        let a1 = |h: f64| self.engine.action_a1(EnergyMomentum::new(h, l));
        let mut lo = h_min + BRACKET_OFFSET * h_min.abs().max(1.0);
        if a1(lo)? >= target {
            return Err(Error::ConvergenceError(format!(
                "A1 at the bracket start already exceeds {target}"
            )));
        }
        let mut offset = 1.0;
        let mut hi = h_min + offset;
        let mut doublings = 0;
        while a1(hi)? <= target {
            lo = hi;
            offset *= 2.0;
            hi = h_min + offset;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::ConvergenceError(
                    "upper energy bracket not found".into(),
                ));
            }
        }
        while hi - lo > self.root_tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if a1(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = 0.5 * (lo + hi);
        Ok(SpectrumPoint {
            qn,
            h,
            l,
            a1: a1(h)?,
            stratum: Stratum::Regular,
        })
    }

    /// All points with `0 <= n <= n_max` and `|m| <= m_max`, evaluated in
    /// parallel. Pinch collisions are excluded and listed; any other failure
    /// aborts with the offending quantum numbers attached.
    pub fn build_spectrum(&self, n_max: u32, m_max: u32) -> Result<Spectrum> {
        let m_max = i64::from(m_max);
        let grid: Vec<QuantumNumbers> = (-m_max..=m_max)
            .flat_map(|m| (0..=n_max).map(move |n| QuantumNumbers { n, m }))
            .collect();
        let solved: Vec<(QuantumNumbers, Result<SpectrumPoint>)> = grid
            .par_iter()
            .map(|&qn| (qn, self.solve_energy(qn.n, qn.m)))
            .collect();
        let mut points = Vec::with_capacity(solved.len());
        let mut excluded = Vec::new();
        for (qn, r) in solved {
            match r {
                Ok(p) => points.push(p),
                Err(Error::PinchCollision { .. }) => excluded.push(qn),
                Err(e) => {
                    return Err(Error::SpectrumPoint {
                        n: qn.n,
                        m: qn.m,
                        source: Box::new(e),
                    })
                }
            }
        }
        points.sort_by_key(|p| (p.qn.m, p.qn.n));
        Ok(Spectrum {
            hbar: self.hbar,
            points,
            excluded,
        })
    }
}

pub fn solve_energy(n: u32, m: i64, hbar: f64) -> Result<SpectrumPoint> {
    SpectrumSolver::new(hbar)?.solve_energy(n, m)
}

pub fn build_spectrum(hbar: f64, n_max: u32, m_max: u32) -> Result<Spectrum> {
    SpectrumSolver::new(hbar)?.build_spectrum(n_max, m_max)
}

/// One failed ordering or symmetry property.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryViolation {
    pub qn: QuantumNumbers,
    pub rule: &'static str,
    pub detail: String,
}

/// Checks mirror symmetry `h_{-m}(n) = h_m(n)` and strict growth of
/// `h_m(n)` in `n` and in `|m|`.
pub fn spectrum_symmetry_check(spectrum: &Spectrum) -> Vec<SymmetryViolation> {
    const MIRROR_TOL: f64 = 1e-9;
    let mut out = Vec::new();
    for p in &spectrum.points {
        let QuantumNumbers { n, m } = p.qn;
        let (n, m) = (i64::from(n), m);
        if m > 0 {
            if let Some(q) = spectrum.get(n, -m) {
                if (q.h - p.h).abs() > MIRROR_TOL {
                    out.push(SymmetryViolation {
                        qn: p.qn,
                        rule: "mirror",
                        detail: format!("h = {} vs {} at m = {}", p.h, q.h, -m),
                    });
                }
            }
        }
        if let Some(q) = spectrum.get(n + 1, m) {
            if !(q.h > p.h) {
                out.push(SymmetryViolation {
                    qn: p.qn,
                    rule: "increasing in n",
                    detail: format!("h = {} then {}", p.h, q.h),
                });
            }
        }
        let outward = if m >= 0 { m + 1 } else { m - 1 };
        if let Some(q) = spectrum.get(n, outward) {
            if !(q.h > p.h) {
                out.push(SymmetryViolation {
                    qn: p.qn,
                    rule: "increasing in |m|",
                    detail: format!("h = {} then {} at m = {}", p.h, q.h, outward),
                });
            }
        }
        if m == 0 {
            if let Some(q) = spectrum.get(n, -1) {
                if !(q.h > p.h) {
                    out.push(SymmetryViolation {
                        qn: p.qn,
                        rule: "increasing in |m|",
                        detail: format!("h = {} then {} at m = -1", p.h, q.h),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::action_a1;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ground_state() {
        for hbar in [0.1, 0.37, 2.0] {
            let p = solve_energy(0, 0, hbar).unwrap();
            assert_eq!((p.h, p.l), (-1.0, 0.0));
            assert_eq!(p.stratum, Stratum::MinPoint);
        }
    }

    #[test]
    fn boundary_state() {
        let p = solve_energy(0, 3, 0.1).unwrap();
        let (_, h) = min_energy_for_momentum(0.30000000000000004).unwrap();
        assert_eq!(p.h, h);
        assert_eq!(p.stratum, Stratum::BoundaryCurve);
        assert!(action_a1(p.em()).unwrap() <= 1e-8);
    }

    #[test]
    fn regular_state_residual() {
        let p = solve_energy(5, 2, 0.1).unwrap();
        assert_eq!(p.l, 2.0 * 0.1);
        let a = action_a1(EnergyMomentum::new(p.h, 0.2)).unwrap();
        assert!((a - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn pinch_collision() {
        let hbar = 4.0 / (5.0 * PI);
        assert!(matches!(
            solve_energy(5, 0, hbar),
            Err(Error::PinchCollision { n: 5, m: 0 })
        ));
        let s = build_spectrum(hbar, 5, 0).unwrap();
        assert_eq!(s.excluded, vec![QuantumNumbers { n: 5, m: 0 }]);
        assert!(s.get(5, 0).is_none());
        assert_eq!(s.points.len(), 5);
    }

    #[test]
    fn trivial_window() {
        let s = build_spectrum(0.1, 0, 0).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!((s.points[0].h, s.points[0].l), (-1.0, 0.0));
    }

    #[test]
    fn half_hbar_coherence() {
        for (n, m) in [(3u32, 1i64), (4, -2), (6, 0)] {
            let coarse = solve_energy(n, m, 0.1).unwrap();
            let fine = solve_energy(2 * n, 2 * m, 0.05).unwrap();
            assert_abs_diff_eq!(coarse.h, fine.h, epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetry_detector() {
        let mut s = build_spectrum(0.1, 4, 3).unwrap();
        assert!(spectrum_symmetry_check(&s).is_empty());
        let i = s
            .points
            .iter()
            .position(|p| p.qn == QuantumNumbers { n: 2, m: 1 })
            .unwrap();
        s.points[i].h += 1e-3;
        let v = spectrum_symmetry_check(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, "mirror");
    }

    #[test]
    fn zero_column_increases() {
        let s = build_spectrum(0.1, 20, 0).unwrap();
        for w in s.points.windows(2) {
            assert!(w[1].h > w[0].h);
        }
    }
}
