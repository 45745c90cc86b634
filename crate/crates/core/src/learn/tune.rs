//! Constrained maximization of the expected transition log-likelihood.
//!
//! For a fixed `tau` the objective separates into a `delta` term and an
//! `epsilon` term, each the log-likelihood of a two-outcome distribution over
//! an interval, with closed-form maximizers. The profile over `tau` is concave,
//! so a golden-section search on the feasible `tau` interval finishes the job.

use super::{LearnConfig, TransitionCounts};
use crate::error::{Result, SegalignError};

/// Linear bounds of the feasible polytope for a fixed `eta`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Polytope {
    q: f64,
    z_m: f64,
    z_g: f64,
    margin: f64,
}

impl Polytope {
    pub(crate) fn new(eta: f64, config: &LearnConfig) -> Result<Self> {
        if !(config.z_m > 1.0) {
            return Err(SegalignError::InvalidArgument("z_m must exceed 1".into()));
        }
        if !(config.z_g > 0.0 && config.z_g < 1.0) {
            return Err(SegalignError::InvalidArgument("z_g must lie in (0, 1)".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(SegalignError::InvalidArgument("eta must lie in (0, 1)".into()));
        }
        let p = Self {
            q: 1.0 - eta,
            z_m: config.z_m,
            z_g: config.z_g,
            margin: config.margin,
        };
        p.tau_range()?;
        Ok(p)
    }

    /// Interval for `delta` given `tau`, shrunk by the margin.
    fn delta_range(&self, tau: f64) -> (f64, f64) {
        let q2 = self.q * self.q;
        let lo = (self.z_g * self.q).max((1.0 - tau - self.z_m * q2) / 2.0);
        let hi = self.q.min((1.0 - tau - q2) / 2.0);
        (lo + self.margin, hi - self.margin)
    }

    fn epsilon_range(&self, tau: f64) -> (f64, f64) {
        let q2 = self.q * self.q;
        let lo = (self.z_g * self.q).max(1.0 - tau - self.z_m * q2);
        let hi = self.q.min(1.0 - tau - q2);
        (lo + self.margin, hi - self.margin)
    }

    /// Feasible `tau` interval, or an error naming the binding constraint.
    pub(crate) fn tau_range(&self) -> Result<(f64, f64)> {
        let (q, q2, m) = (self.q, self.q * self.q, self.margin);
        let lows = [
            (0.0, "tau > 0"),
            (1.0 - self.z_m * q2 - 2.0 * q, "1 - 2·delta - tau < z_m (1 - eta)^2 with delta < 1 - eta"),
            (1.0 - self.z_m * q2 - q, "1 - epsilon - tau < z_m (1 - eta)^2 with epsilon < 1 - eta"),
        ];
        let highs = [
            (1.0, "tau < 1"),
            (1.0 - q2 - 2.0 * self.z_g * q, "1 - 2·delta - tau > (1 - eta)^2 with delta > z_g (1 - eta)"),
            (1.0 - q2 - self.z_g * q, "1 - epsilon - tau > (1 - eta)^2 with epsilon > z_g (1 - eta)"),
        ];
        let lo = lows.iter().copied().fold((f64::NEG_INFINITY, ""), |a, b| if b.0 > a.0 { b } else { a });
        let hi = highs.iter().copied().fold((f64::INFINITY, ""), |a, b| if b.0 < a.0 { b } else { a });
        // a wider margin on tau keeps the inner intervals at positive width
        let (tlo, thi) = (lo.0 + 8.0 * m, hi.0 - 8.0 * m);
        if tlo > thi {
            return Err(SegalignError::EmptyFeasibleRegion(format!(
                "`{}` conflicts with `{}` (z_m = {}, z_g = {}, eta = {})",
                lo.1,
                hi.1,
                self.z_m,
                self.z_g,
                1.0 - q
            )));
        }
        Ok((tlo, thi))
    }

    /// Whether `(delta, epsilon, tau)` satisfies every constraint strictly.
    pub(crate) fn contains(&self, delta: f64, epsilon: f64, tau: f64) -> bool {
        let q2 = self.q * self.q;
        let a = 1.0 - 2.0 * delta - tau;
        let b = 1.0 - epsilon - tau;
        let g = |v: f64| v > self.z_g * self.q && v < self.q;
        q2 < a && a < self.z_m * q2 && q2 < b && b < self.z_m * q2 && g(delta) && g(epsilon) && tau > 0.0 && tau < 1.0
    }

    /// Nearest point of the margin-shrunk polytope, clamping `tau` first.
    pub(crate) fn project(&self, delta: f64, epsilon: f64, tau: f64) -> Result<(f64, f64, f64)> {
        let (tlo, thi) = self.tau_range()?;
        let tau = if tau.is_finite() { tau.clamp(tlo, thi) } else { tlo };
        let (dlo, dhi) = self.delta_range(tau);
        let (elo, ehi) = self.epsilon_range(tau);
        Ok((clamp_to(delta, dlo, dhi), clamp_to(epsilon, elo, ehi), tau))
    }
}

/// Clamp that tolerates an interval collapsed by rounding.
fn clamp_to(v: f64, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        0.5 * (lo + hi)
    } else if v.is_finite() {
        v.clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    }
}

/// `a log(1 - s·x - tau) + b log x`, maximized over `x ∈ [lo, hi]`.
fn best_binary(a: f64, b: f64, s: f64, tau: f64, lo: f64, hi: f64, fallback: f64) -> f64 {
    if a + b <= 0.0 {
        return clamp_to(fallback, lo, hi);
    }
    clamp_to(b * (1.0 - tau) / (s * (a + b)), lo, hi)
}

/// Expected transition log-likelihood per alignment.
pub fn objective(c: &TransitionCounts, delta: f64, epsilon: f64, tau: f64) -> f64 {
    let term = |w: f64, v: f64| if w == 0.0 { 0.0 } else { w * v.ln() };
    term(c.c_mm, 1.0 - 2.0 * delta - tau) + term(c.c_gm, 1.0 - epsilon - tau) + term(c.c_op, delta) + term(c.c_ex, epsilon)
}

/// Maximizes the transition objective over the feasible polytope.
pub fn tune_params(
    counts: &TransitionCounts,
    init: (f64, f64, f64),
    eta: f64,
    config: &LearnConfig,
) -> Result<(f64, f64, f64)> {
    let poly = Polytope::new(eta, config)?;
    let (d0, e0, t0) = poly.project(init.0, init.1, init.2)?;
    let (tlo, thi) = poly.tau_range()?;
    let inner = |tau: f64| {
        let (dlo, dhi) = poly.delta_range(tau);
        let (elo, ehi) = poly.epsilon_range(tau);
        let d = best_binary(counts.c_mm, counts.c_op, 2.0, tau, dlo, dhi, d0);
        let e = best_binary(counts.c_gm, counts.c_ex, 1.0, tau, elo, ehi, e0);
        (d, e, objective(counts, d, e, tau))
    };
    // golden-section search on the concave profile
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (tlo, thi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = inner(x1).2;
    let mut f2 = inner(x2).2;
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = inner(x1).2;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = inner(x2).2;
        }
    }
    let mut best = (d0, e0, t0, objective(counts, d0, e0, t0));
    for tau in [tlo, thi, 0.5 * (a + b)] {
        let (d, e, f) = inner(tau);
        if f > best.3 {
            best = (d, e, tau, f);
        }
    }
    Ok((best.0, best.1, best.2))
}
