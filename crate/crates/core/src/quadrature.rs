//! Quadrature for integrals over `m ∈ (0, ∞)` of resolvent expressions.
//!
//! With `m = t/(1-t)` the integrands behave like powers of `t` and `1-t` at the ends,
//! which Gauss-Legendre handles poorly. A tanh-sinh rule in `t` clusters nodes at both
//! ends doubly exponentially; written directly in `m` it is `m = exp(π sinh τ)` with the
//! trapezoidal rule in `τ`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{FnlsError, Result};

pub const DEFAULT_ORDER: usize = 256;
pub const MIN_ORDER: usize = 32;
/// Relative error allowed when reproducing `x^s` from the scalar identity.
pub const SYMBOL_TOL: f64 = 1e-8;
const LOG_M_CAP: f64 = 700.0;

#[derive(Debug, Clone, Serialize)]
pub struct MQuadrature {
    s: f64,
    nodes: Vec<(f64, f64)>,
}

impl MQuadrature {
    /// Builds and validates the rule; fails if `x^s` is not reproduced on `[1e-2, 1e2]`.
    pub fn build(s: f64, order: usize) -> Result<Self> {
        // the scalar identity holds on all of (0, 1); the flow itself needs s > 1/2
        if !(s > 0.0 && s < 1.0) {
            return Err(FnlsError::domain(format!("s must lie in (0, 1), got {s}")));
        }
        if order < MIN_ORDER {
            return Err(FnlsError::domain(format!(
                "quadrature order must be >= {MIN_ORDER}, got {order}"
            )));
        }
        let quad = MQuadrature {
            s,
            nodes: nodes(s, order),
        };
        let (worst_x, error) = quad.validation_error();
        if error > SYMBOL_TOL {
            return Err(FnlsError::QuadratureValidation { worst_x, error });
        }
        Ok(quad)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `(m_k, w_k)` with `∫_0^∞ f(m) dm ≈ Σ w_k f(m_k)`.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().map(|&(m, w)| w * f(m)).sum()
    }

    /// `(sin πs/π) ∫ m^(s-1) x/(x+m) dm`, which should equal `x^s`.
    pub fn symbol(&self, x: f64) -> f64 {
        let c = (PI * self.s).sin() / PI;
        c * self.integrate(|m| m.powf(self.s - 1.0) * x / (x + m))
    }

    /// Worst relative symbol error over 50 log-spaced points in `[1e-2, 1e2]`.
    pub fn validation_error(&self) -> (f64, f64) {
        (0..50)
            .map(|i| {
                let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
                let exact = x.powf(self.s);
                (x, (self.symbol(x) - exact).abs() / exact)
            })
            .fold((0.0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc })
    }
}

/// `c_s = sqrt(sin πs / π)`.
pub fn c_s(s: f64) -> f64 {
    ((PI * s).sin() / PI).sqrt()
}

fn nodes(s: f64, order: usize) -> Vec<(f64, f64)> {
    // near 0 the integrands carry at least m^s; near ∞ at most m^(s-1) times a bounded factor
    // of size up to ~1e2, hence the extra 12/π
    let tau_min = -(36.0 / (PI * s)).asinh();
    let tau_max = (36.0 / (PI * (1.0 - s)) + 12.0 / PI).min(LOG_M_CAP / PI).asinh();
    let h = (tau_max - tau_min) / (order - 1) as f64;
    (0..order)
        .map(|k| {
            let tau = tau_min + h * k as f64;
            let m = (PI * tau.sinh()).exp();
            let mut w = h * PI * tau.cosh() * m;
            if k == 0 || k == order - 1 {
                w *= 0.5;
            }
            (m, w)
        })
        .collect()
}
