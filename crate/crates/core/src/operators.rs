//! Sparse operators on the Bohr-Sommerfeld basis `sigma(n, m)`, `n >= 0`.
//!
//! Quantized actions act diagonally (`Q_A1 = n hbar`, `Q_A2 = m hbar`), the
//! shifting operators `a1`, `a2` lower the labels and their adjoints raise
//! them. `a1` annihilates the `n = 0` row; the `m` lattice is unbounded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub n: u32,
    pub m: i64,
}

impl BasisIndex {
    pub fn new(n: u32, m: i64) -> Self {
        Self { n, m }
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sigma({}, {})", self.n, self.m)
    }
}

/// Finitely supported state in the orthonormal basis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateVector {
    coeffs: BTreeMap<BasisIndex, Complex64>,
}

impl StateVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(index: BasisIndex) -> Self {
        let mut s = Self::zero();
        s.coeffs.insert(index, Complex64::new(1.0, 0.0));
        s
    }

    pub fn add_term(&mut self, index: BasisIndex, c: Complex64) {
        let entry = self.coeffs.entry(index).or_default();
        *entry += c;
        if *entry == Complex64::default() {
            self.coeffs.remove(&index);
        }
    }

    pub fn coeff(&self, index: BasisIndex) -> Complex64 {
        self.coeffs.get(&index).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (BasisIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn support(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    /// `<self, other>`, antilinear in the first slot.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c.conj() * other.coeff(*k))
            .sum()
    }

    pub fn scaled(&self, s: Complex64) -> StateVector {
        let mut out = StateVector::zero();
        for (k, c) in self.terms() {
            out.add_term(k, c * s);
        }
        out
    }

    pub fn plus(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        for (k, c) in other.terms() {
            out.add_term(k, c);
        }
        out
    }

    pub fn minus(&self, other: &StateVector) -> StateVector {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_deviation(&self, other: &StateVector) -> f64 {
        let keys: BTreeSet<BasisIndex> = self.support().chain(other.support()).collect();
        keys.into_iter()
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

type Rule = dyn Fn(BasisIndex) -> Result<Vec<(BasisIndex, Complex64)>> + Send + Sync;

/// Linear operator given by its action on basis vectors.
#[derive(Clone)]
pub struct LatticeOperator {
    rule: Arc<Rule>,
    /// Inclusive `m` range on which the operator is defined, if limited.
    pub window: Option<(i64, i64)>,
}

impl fmt::Debug for LatticeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeOperator")
            .field("window", &self.window)
            .finish_non_exhaustive()
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn intersect(a: Option<(i64, i64)>, b: Option<(i64, i64)>) -> Option<(i64, i64)> {
    match (a, b) {
        (Some(a), Some(b)) => Some((a.0.max(b.0), a.1.min(b.1))),
        (a, None) => a,
        (None, b) => b,
    }
}

impl LatticeOperator {
    pub fn from_rule(
        rule: impl Fn(BasisIndex) -> Result<Vec<(BasisIndex, Complex64)>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            rule: Arc::new(rule),
            window: None,
        }
    }

    pub fn with_window(mut self, m_lo: i64, m_hi: i64) -> Self {
        self.window = Some((m_lo, m_hi));
        self
    }

    pub fn zero() -> Self {
        Self::from_rule(|_| Ok(Vec::new()))
    }

    pub fn identity() -> Self {
        Self::from_rule(|i| Ok(vec![(i, real(1.0))]))
    }

    pub fn apply_basis(&self, index: BasisIndex) -> Result<StateVector> {
        if let Some((lo, hi)) = self.window {
            if index.m < lo || index.m > hi {
                return Err(Error::MissingPoint {
                    n: i64::from(index.n),
                    m: index.m,
                });
            }
        }
        let mut out = StateVector::zero();
        for (k, c) in (self.rule)(index)? {
            out.add_term(k, c);
        }
        Ok(out)
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = StateVector::zero();
        for (k, c) in state.terms() {
            for (j, d) in self.apply_basis(k)?.terms() {
                out.add_term(j, c * d);
            }
        }
        Ok(out)
    }

    /// `self` after `inner`.
    pub fn compose(&self, inner: &LatticeOperator) -> LatticeOperator {
        let (outer, first) = (self.clone(), inner.clone());
        let window = intersect(self.window, inner.window);
        let mut op = Self::from_rule(move |i| {
            let mid = first.apply_basis(i)?;
            Ok(outer.apply(&mid)?.terms().collect())
        });
        op.window = window;
        op
    }

    pub fn sum(&self, other: &LatticeOperator) -> LatticeOperator {
        let (a, b) = (self.clone(), other.clone());
        let window = intersect(self.window, other.window);
        let mut op = Self::from_rule(move |i| {
            Ok(a.apply_basis(i)?.plus(&b.apply_basis(i)?).terms().collect())
        });
        op.window = window;
        op
    }

    pub fn scale(&self, s: Complex64) -> LatticeOperator {
        let a = self.clone();
        let mut op = Self::from_rule(move |i| Ok(a.apply_basis(i)?.scaled(s).terms().collect()));
        op.window = self.window;
        op
    }

    pub fn power(&self, k: u32) -> LatticeOperator {
        (0..k).fold(Self::identity(), |acc, _| self.compose(&acc))
    }
}

/// `AB - BA`.
pub fn commutator(a: &LatticeOperator, b: &LatticeOperator) -> LatticeOperator {
    a.compose(b).sum(&b.compose(a).scale(real(-1.0)))
}

fn check_which(which: u8) {
    assert!(
        which == 1 || which == 2,
        "operator index must be 1 or 2, got {which}"
    );
}

/// Quantized action `Q_A1` (`n hbar`) or `Q_A2` (`m hbar`).
///
/// # Panics
/// If `which` is not 1 or 2.
pub fn q_action(which: u8, hbar: f64) -> LatticeOperator {
    check_which(which);
    LatticeOperator::from_rule(move |i| {
        let v = if which == 1 {
            f64::from(i.n)
        } else {
            i.m as f64
        };
        Ok(vec![(i, real(v * hbar))])
    })
}

/// Shifting operator `a1` (`n -> n - 1`, zero on `n = 0`) or `a2`
/// (`m -> m - 1`).
pub fn shift(which: u8) -> LatticeOperator {
    check_which(which);
    LatticeOperator::from_rule(move |i| {
        Ok(match which {
            1 if i.n == 0 => Vec::new(),
            1 => vec![(BasisIndex::new(i.n - 1, i.m), real(1.0))],
            _ => vec![(BasisIndex::new(i.n, i.m - 1), real(1.0))],
        })
    })
}

/// Adjoint of [`shift`]: `n -> n + 1` or `m -> m + 1`.
pub fn raise(which: u8) -> LatticeOperator {
    check_which(which);
    LatticeOperator::from_rule(move |i| {
        Ok(match which {
            1 => vec![(BasisIndex::new(i.n + 1, i.m), real(1.0))],
            _ => vec![(BasisIndex::new(i.n, i.m + 1), real(1.0))],
        })
    })
}

/// Quantization of `e^{-i phi_k}` (lowering) or `e^{+i phi_k}` (raising)
/// away from the branch locus. At the corner, `Q_{e^{-i phi_2}} sigma(0, 0)`
/// is taken to be `a2 sigma(0, 0) = sigma(0, -1)`.
pub fn exp_angle(which: u8, lowering: bool) -> LatticeOperator {
    if lowering {
        shift(which)
    } else {
        raise(which)
    }
}

/// Diagonal operator `sigma(n, m) -> f(h_m(n), m hbar) sigma(n, m)` with
/// energies read from `spectrum`. Indices the spectrum lacks give
/// `MissingPoint`.
pub fn q_diagonal(
    f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    spectrum: &Spectrum,
) -> LatticeOperator {
    let table: BTreeMap<BasisIndex, (f64, f64)> = spectrum
        .points
        .iter()
        .map(|p| (BasisIndex::new(p.qn.n, p.qn.m), (p.h, p.l)))
        .collect();
    let lo = table.keys().map(|k| k.m).min();
    let hi = table.keys().map(|k| k.m).max();
    let op = LatticeOperator::from_rule(move |i| {
        let (h, l) = table.get(&i).ok_or(Error::MissingPoint {
            n: i64::from(i.n),
            m: i.m,
        })?;
        Ok(vec![(i, real(f(*h, *l)))])
    });
    match (lo, hi) {
        (Some(lo), Some(hi)) => op.with_window(lo, hi),
        _ => op,
    }
}

/// The six generators entering the commutation relations.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub hbar: f64,
    pub q: [LatticeOperator; 2],
    pub lower: [LatticeOperator; 2],
    pub raise: [LatticeOperator; 2],
}

impl OperatorSet {
    pub fn standard(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::DomainError {
                value: hbar,
                domain: "hbar > 0",
            });
        }
        Ok(Self {
            hbar,
            q: [q_action(1, hbar), q_action(2, hbar)],
            lower: [shift(1), shift(2)],
            raise: [raise(1), raise(2)],
        })
    }
}

/// Index window `0 <= n <= n_max`, `|m| <= m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationWindow {
    pub n_max: u32,
    pub m_max: i64,
}

impl RelationWindow {
    /// Indices checked: `m` strictly inside the window, so that `a2` and
    /// its adjoint never leave it.
    pub fn interior(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        let m_in = self.m_max - 1;
        (-m_in..=m_in).flat_map(move |m| (0..=self.n_max).map(move |n| BasisIndex::new(n, m)))
    }

    pub fn contains(&self, i: BasisIndex) -> bool {
        i.n <= self.n_max && i.m.abs() <= self.m_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationViolation {
    pub relation: String,
    pub index: BasisIndex,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    pub hbar: f64,
    pub window: RelationWindow,
    pub checks: usize,
    pub violations: Vec<RelationViolation>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_relations(hbar: f64, window: RelationWindow) -> Result<RelationReport> {
    verify_relations_for(&OperatorSet::standard(hbar)?, window)
}

/// Checks on every interior index of `window`:
/// `[Q_j, a_k] = -hbar d_jk a_k`, `[Q_j, a_k^+] = hbar d_jk a_k^+`,
/// `[a_j, a_k] = 0`, `[a_j^+, a_k^+] = 0`, `a1 sigma(0, m) = 0`, and the
/// pairing `<a_k^+ s, t> = <s, a_k t>` over all pairs in the window.
pub fn verify_relations_for(ops: &OperatorSet, window: RelationWindow) -> Result<RelationReport> {
    let hbar = ops.hbar;
    let scale = 1f64
        .max(f64::from(window.n_max + 2) * hbar)
        .max((window.m_max + 2) as f64 * hbar);
    let tol = 1e-15 * scale;
    let zero = LatticeOperator::zero();

    let mut relations: Vec<(String, LatticeOperator, LatticeOperator)> = Vec::new();
    for j in 0..2 {
        for k in 0..2 {
            let delta = if j == k { hbar } else { 0.0 };
            relations.push((
                format!(
                    "[Q_A{}, a{}] = {}",
                    j + 1,
                    k + 1,
                    if j == k { "-hbar a" } else { "0" }
                ),
                commutator(&ops.q[j], &ops.lower[k]),
                ops.lower[k].scale(real(-delta)),
            ));
            relations.push((
                format!(
                    "[Q_A{}, a{}^+] = {}",
                    j + 1,
                    k + 1,
                    if j == k { "hbar a^+" } else { "0" }
                ),
                commutator(&ops.q[j], &ops.raise[k]),
                ops.raise[k].scale(real(delta)),
            ));
        }
    }
    relations.push((
        "[a1, a2] = 0".into(),
        commutator(&ops.lower[0], &ops.lower[1]),
        zero.clone(),
    ));
    relations.push((
        "[a1^+, a2^+] = 0".into(),
        commutator(&ops.raise[0], &ops.raise[1]),
        zero,
    ));

    let mut checks = 0;
    let mut violations = Vec::new();
    let mut record = |relation: &str, index: BasisIndex, deviation: f64| {
        if !(deviation <= tol) {
            violations.push(RelationViolation {
                relation: relation.to_string(),
                index,
                deviation,
            });
        }
    };

    for index in window.interior() {
        for (name, lhs, rhs) in &relations {
            let d = lhs
                .apply_basis(index)?
                .max_deviation(&rhs.apply_basis(index)?);
            record(name, index, d);
            checks += 1;
        }
        if index.n == 0 {
            let image = ops.lower[0].apply_basis(index)?;
            record(
                "a1 sigma(0, m) = 0",
                index,
                image.max_deviation(&StateVector::zero()),
            );
            checks += 1;
        }
    }

    // Matrix elements <t, a^+ s> and <s, a t> for s, t in the window.
    let all: Vec<BasisIndex> = (-window.m_max..=window.m_max)
        .flat_map(|m| (0..=window.n_max).map(move |n| BasisIndex::new(n, m)))
        .collect();
    for k in 0..2 {
        let mut raised: BTreeMap<(BasisIndex, BasisIndex), Complex64> = BTreeMap::new();
        let mut lowered: BTreeMap<(BasisIndex, BasisIndex), Complex64> = BTreeMap::new();
        for &s in &all {
            for (t, c) in ops.raise[k].apply_basis(s)?.terms() {
                if window.contains(t) {
                    raised.insert((s, t), c.conj());
                }
            }
            for (t, c) in ops.lower[k].apply_basis(s)?.terms() {
                if window.contains(t) {
                    lowered.insert((t, s), c);
                }
            }
        }
        let name = format!("<a{0}^+ s, t> = <s, a{0} t>", k + 1);
        let pairs: BTreeSet<(BasisIndex, BasisIndex)> =
            raised.keys().chain(lowered.keys()).copied().collect();
        for (s, t) in pairs {
            let a = raised.get(&(s, t)).copied().unwrap_or_default();
            let b = lowered.get(&(s, t)).copied().unwrap_or_default();
            record(&name, s, (a - b).norm());
            checks += 1;
        }
    }

    Ok(RelationReport {
        hbar,
        window,
        checks,
        violations,
    })
}
