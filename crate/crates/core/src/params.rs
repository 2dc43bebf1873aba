use serde::{Deserialize, Serialize};

use crate::error::{FnlsError, Result};

/// Relative tolerance used when deciding whether `alpha` sits on a critical exponent.
const CLASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criticality {
    MassSubcritical,
    MassCritical,
    Intercritical,
    EnergyCritical,
    EnergySupercritical,
}

impl Criticality {
    /// Classes for which the elliptic ground-state equation with mass term is solvable.
    pub fn energy_subcritical(self) -> bool {
        matches!(
            self,
            Criticality::MassSubcritical | Criticality::MassCritical | Criticality::Intercritical
        )
    }
}

/// `(d, s, alpha)` for `i u_t - (-Δ)^s u = -|u|^alpha u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub dim: usize,
    pub s: f64,
    pub alpha: f64,
}

impl PhysicsParams {
    pub fn new(dim: usize, s: f64, alpha: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if dim == 0 {
            violations.push(format!("dimension must be >= 1, got {dim}"));
        }
        if !(s > 0.5 && s < 1.0) {
            violations.push(format!("s must lie in (1/2, 1), got {s}"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            violations.push(format!("alpha must be positive, got {alpha}"));
        }
        if violations.is_empty() {
            Ok(PhysicsParams { dim, s, alpha })
        } else {
            Err(FnlsError::Domain(violations.join("; ")))
        }
    }

    pub fn d(&self) -> f64 {
        self.dim as f64
    }

    /// `s_c = d/2 - 2s/alpha`.
    pub fn critical_exponent(&self) -> f64 {
        self.d() / 2.0 - 2.0 * self.s / self.alpha
    }

    /// `4s/d`.
    pub fn alpha_star(&self) -> f64 {
        4.0 * self.s / self.d()
    }

    /// `4s/(d-2s)`, present only when `d > 2s`.
    pub fn alpha_star_upper(&self) -> Option<f64> {
        let gap = self.d() - 2.0 * self.s;
        (gap > 0.0).then(|| 4.0 * self.s / gap)
    }

    pub fn class(&self) -> Criticality {
        let lower = self.alpha_star();
        if close(self.alpha, lower) {
            return Criticality::MassCritical;
        }
        if self.alpha < lower {
            return Criticality::MassSubcritical;
        }
        match self.alpha_star_upper() {
            Some(upper) if close(self.alpha, upper) => Criticality::EnergyCritical,
            Some(upper) if self.alpha > upper => Criticality::EnergySupercritical,
            _ => Criticality::Intercritical,
        }
    }

    /// `sigma = (4s - (d-2s) alpha)/(d alpha - 4s)`; undefined at the mass-critical power.
    pub fn sigma(&self) -> Option<f64> {
        match self.class() {
            Criticality::MassCritical => None,
            Criticality::EnergyCritical => Some(0.0),
            _ => {
                let num = 4.0 * self.s - (self.d() - 2.0 * self.s) * self.alpha;
                Some(num / (self.d() * self.alpha - 4.0 * self.s))
            }
        }
    }

    /// Sobolev exponent `s* = 2d/(d-2s)`.
    pub fn sobolev_exponent(&self) -> Option<f64> {
        let gap = self.d() - 2.0 * self.s;
        (gap > 0.0).then(|| 2.0 * self.d() / gap)
    }

    /// `d alpha - 4s`, the coefficient that separates `K` from `s E`.
    pub fn mass_gap(&self) -> f64 {
        self.d() * self.alpha - 4.0 * self.s
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLASS_TOL * a.abs().max(b.abs())
}
