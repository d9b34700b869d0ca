//! Gauss-Legendre quadrature with node doubling on a fixed panel layout.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Node counts tried in order: 16, 32, ..., 4096.
pub const MIN_NODES: usize = 16;
pub const MAX_NODES: usize = 4096;
const LEVELS: usize = 9;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule for `n = 16 * 2^k`.
    pub fn cached(level: usize) -> &'static GaussLegendre {
        static RULES: [OnceLock<GaussLegendre>; LEVELS] = [const { OnceLock::new() }; LEVELS];
        RULES[level].get_or_init(|| GaussLegendre::new(MIN_NODES << level))
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotConverged {
    pub last_change: f64,
}

/// Integrates a vector-valued `f` over the union of `panels`, doubling the
/// per-panel node count until every component changes by at most
/// `rel_tol` times the integral of its absolute value.
pub fn integrate_panels<const N: usize>(
    panels: &[(f64, f64)],
    f: impl Fn(f64) -> [f64; N],
    rel_tol: f64,
) -> Result<[f64; N], NotConverged> {
    let mut previous: Option<[f64; N]> = None;
    let mut last_change = f64::INFINITY;
    for level in 0..LEVELS {
        let rule = GaussLegendre::cached(level);
        let mut sum = [0.0; N];
        let mut abs_sum = [0.0; N];
        for &(a, b) in panels {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = f(mid + half * x);
                for k in 0..N {
                    sum[k] += w * half * v[k];
                    abs_sum[k] += w * half * v[k].abs();
                }
            }
        }
        if let Some(prev) = previous {
            let mut converged = true;
            last_change = 0.0;
            for k in 0..N {
                let change = (sum[k] - prev[k]).abs();
                last_change = last_change.max(change / abs_sum[k].max(f64::MIN_POSITIVE));
                if change > rel_tol * abs_sum[k] {
                    converged = false;
                }
            }
            if converged {
                return Ok(sum);
            }
        }
        if sum.iter().any(|v| !v.is_finite()) {
            break;
        }
        previous = Some(sum);
    }
    Err(NotConverged { last_change })
}

/// Panels on `[lo, hi]` graded geometrically towards either end.
///
/// `scale_lo` / `scale_hi` are the widths of near-singular features at the
/// respective ends; a zero or large scale means no grading there.
pub fn graded_panels(lo: f64, hi: f64, scale_lo: f64, scale_hi: f64) -> Vec<(f64, f64)> {
    const MAX_GRADING: usize = 200;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut breaks = vec![lo, mid, hi];
    for (scale, toward_lo) in [(scale_lo, true), (scale_hi, false)] {
        if !(scale > 0.0 && scale < 0.5 * half) {
            continue;
        }
        let mut width = 0.5 * half;
        let mut k = 0;
        while width > scale / 8.0 && k < MAX_GRADING {
            breaks.push(if toward_lo { lo + width } else { hi - width });
            width *= 0.5;
            k += 1;
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    breaks.windows(2).map(|w| (w[0], w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_two() {
        for level in 0..LEVELS {
            let rule = GaussLegendre::cached(level);
            let s: f64 = rule.weights.iter().sum();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let rule = GaussLegendre::new(16);
        let integral: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(30))
            .sum();
        assert_abs_diff_eq!(integral, 2.0 / 31.0, epsilon = 1e-14);
    }

    #[test]
    fn graded_panels_resolve_narrow_peak() {
        // int_0^1 e / (e^2 + x^2) dx = atan(1/e)
        let eps = 1e-9;
        let panels = graded_panels(0.0, 1.0, eps, 0.0);
        let [v] = integrate_panels(&panels, |x| [eps / (eps * eps + x * x)], 1e-11).unwrap();
        assert_abs_diff_eq!(v, (1.0 / eps).atan(), epsilon = 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate_panels(&[(0.0, 1.0)], |x| [1.0 / x.sqrt().sqrt()], 1e-14);
        assert!(r.is_err());
    }
}
