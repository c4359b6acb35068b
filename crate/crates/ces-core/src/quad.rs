//! Adaptive quadrature on `(0, ∞)` for radial moment integrands.
//!
//! Uses the exp-sinh double-exponential rule: the substitution
//! `t = exp((π/2)·sinh(u))` maps the half-line to `u ∈ (−∞, ∞)` and makes
//! the trapezoid rule converge at double-exponential rate for the smooth,
//! eventually-monotone kernels integrated here (including integrable
//! endpoint singularities such as `t^{-1/2}` factors).
//!
//! Integrands are supplied in log form, `ln f(t)`, so that kernels like
//! `t^{M−1+p} g(t) φ(t)²` can be evaluated for extreme `t` without
//! intermediate overflow; `−∞` denotes `f(t) = 0`.

use crate::{CesError, Result};

/// Absolute and relative tolerance used by moment computations.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Half-width of the truncated `u` grid. At `|u| = 5.5` the substitution
/// reaches `t ≈ e^{±192}`, far beyond where any admissible kernel
/// contributes, while every intermediate stays inside f64 range.
const U_MAX: f64 = 5.5;

const MAX_LEVEL: u32 = 13;

/// `∫₀^∞ exp(ln_f(t)) dt` to absolute+relative tolerance `tol`.
pub fn integrate_ln(ln_f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    // One transformed node: u ↦ f(t(u))·t(u)·(π/2)cosh(u), assembled in logs.
    let node = |u: f64| -> f64 {
        let ln_t = half_pi * u.sinh();
        let t = ln_t.exp();
        let lf = ln_f(t);
        if lf == f64::NEG_INFINITY {
            return 0.0;
        }
        let ln_term = lf + ln_t + (half_pi * u.cosh()).ln();
        let term = ln_term.exp();
        debug_assert!(term.is_finite(), "quadrature term overflow at u={u}");
        term
    };

    let mut h = 1.0f64;
    // level 0: nodes at integer u
    let mut sum = node(0.0);
    let mut j = 1.0;
    while j <= U_MAX {
        sum += node(j) + node(-j);
        j += 1.0;
    }
    let mut estimate = h * sum;

    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        // new nodes at odd multiples of h
        let mut new_sum = 0.0;
        let mut u = h;
        while u <= U_MAX {
            new_sum += node(u) + node(-u);
            u += 2.0 * h;
        }
        sum += new_sum;
        let refined = h * sum;
        let err = (refined - estimate).abs();
        estimate = refined;
        if level >= 3 && err <= tol * (1.0 + estimate.abs()) {
            return Ok(estimate);
        }
    }
    Err(CesError::DivergentIntegral(format!(
        "exp-sinh quadrature did not reach tolerance {tol:.1e} \
         (last estimate {estimate:.6e})"
    )))
}
