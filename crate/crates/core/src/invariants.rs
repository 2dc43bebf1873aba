//! Conserved functionals, the virial quantity `K`, and the exponent arithmetic of the local theory.

use serde::Serialize;

use crate::error::{FnlsError, Result};
use crate::field::Field;
use crate::params::{Criticality, PhysicsParams};

/// Absolute slack allowed when checking exponent (in)equalities.
const EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedReport {
    pub mass: f64,
    pub energy: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// `‖(-Δ)^(s/2) u‖`.
    pub hs_norm: f64,
    /// `‖u‖_{L^(alpha+2)}`.
    pub l_alpha2_norm: f64,
}

impl ConservedReport {
    /// `‖u‖^(alpha+2)_{L^(alpha+2)}`.
    pub fn potential(&self, params: &PhysicsParams) -> f64 {
        self.l_alpha2_norm.powf(params.alpha + 2.0)
    }

    /// `K - (s E - (d alpha - 4s)/(4(alpha+2)) Y)`, normalised by the size of the terms.
    pub fn k_identity_residual(&self, params: &PhysicsParams) -> f64 {
        let y = self.potential(params);
        let alt = params.s * self.energy - params.mass_gap() / (4.0 * (params.alpha + 2.0)) * y;
        let scale = (params.s * self.hs_norm * self.hs_norm).max(y).max(f64::MIN_POSITIVE);
        (self.k - alt).abs() / scale
    }
}

pub fn conserved_report(field: &Field, params: &PhysicsParams) -> ConservedReport {
    let p = params.alpha + 2.0;
    let hs_norm = field.to_spectral().hdot_sq(params.s).sqrt();
    let y = field.lp_integral(p);
    let x = hs_norm * hs_norm;
    ConservedReport {
        mass: field.mass(),
        energy: 0.5 * x - y / p,
        k: 0.5 * params.s * x - params.d() * params.alpha / (4.0 * p) * y,
        hs_norm,
        l_alpha2_norm: y.powf(1.0 / p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub class: Criticality,
    pub s_c: f64,
    pub sigma: Option<f64>,
    pub alpha_star: f64,
    pub alpha_star_upper: Option<f64>,
}

pub fn classify_criticality(params: &PhysicsParams) -> CriticalityReport {
    CriticalityReport {
        class: params.class(),
        s_c: params.critical_exponent(),
        sigma: params.sigma(),
        alpha_star: params.alpha_star(),
        alpha_star_upper: params.alpha_star_upper(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    Schrodinger,
    Radial,
    Fractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissiblePair {
    /// `f64::INFINITY` stands for `p = ∞`.
    pub p: f64,
    pub q: f64,
    pub gamma_pq: f64,
    pub kind: PairKind,
}

/// `γ_{p,q} = d/2 - d/q - 2s/p`.
pub fn gamma_pq(d: usize, s: f64, p: f64, q: f64) -> f64 {
    let d = d as f64;
    d / 2.0 - d / q - 2.0 * s / p
}

pub fn admissible_pair(d: usize, s: f64, p: f64, q: f64, kind: PairKind) -> Result<AdmissiblePair> {
    if d == 0 {
        return Err(FnlsError::domain("dimension must be >= 1"));
    }
    if !(p >= 2.0) {
        return Err(FnlsError::Rejected(format!("p = {p} is not in [2, ∞]")));
    }
    if !(q >= 2.0 && q.is_finite()) {
        return Err(FnlsError::Rejected(format!("q = {q} is not in [2, ∞)")));
    }
    let df = d as f64;
    let near = |a: f64, b: f64| (a - b).abs() <= EXPONENT_TOL * (1.0 + b.abs());
    let radial_excluded = || {
        let q_end = (4.0 * df - 2.0) / (2.0 * df - 3.0);
        near(p, 2.0) && q_end > 0.0 && near(q, q_end)
    };
    match kind {
        PairKind::Schrodinger => {
            let lhs = 2.0 / p + df / q;
            if lhs > df / 2.0 + EXPONENT_TOL {
                return Err(FnlsError::Rejected(format!(
                    "Schrödinger condition 2/p + d/q <= d/2 fails: {lhs} > {}",
                    df / 2.0
                )));
            }
            // the endpoint (2, ∞) in d = 2 is excluded; q is finite here so it cannot occur
        }
        PairKind::Radial => {
            let lhs = 2.0 / p + (2.0 * df - 1.0) / q;
            let rhs = (2.0 * df - 1.0) / 2.0;
            if lhs > rhs + EXPONENT_TOL {
                return Err(FnlsError::Rejected(format!(
                    "radial condition 2/p + (2d-1)/q <= (2d-1)/2 fails: {lhs} > {rhs}"
                )));
            }
            if radial_excluded() {
                return Err(FnlsError::Rejected(
                    "radial endpoint (2, (4d-2)/(2d-3)) is excluded".into(),
                ));
            }
        }
        PairKind::Fractional => {
            let lhs = 2.0 * s / p + df / q;
            if !near(lhs, df / 2.0) {
                return Err(FnlsError::Rejected(format!(
                    "fractional condition 2s/p + d/q = d/2 fails: {lhs} != {}",
                    df / 2.0
                )));
            }
            if radial_excluded() {
                return Err(FnlsError::Rejected(
                    "fractional endpoint (2, (4d-2)/(2d-3)) is excluded".into(),
                ));
            }
        }
    }
    Ok(AdmissiblePair {
        p,
        q,
        gamma_pq: gamma_pq(d, s, p, q),
        kind,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LwpMode {
    RadialSubcritical,
    RadialCritical,
}

/// Exponent pair of the radial local theory at regularity `gamma` (ignored in critical mode).
pub fn lwp_exponents(params: &PhysicsParams, gamma: f64, mode: LwpMode) -> Result<(f64, f64)> {
    let d = params.d();
    let s = params.s;
    let a = params.alpha;
    let s_c = params.critical_exponent();
    let mut violated = Vec::new();
    if params.dim < 2 {
        violated.push("d >= 2".to_string());
    }
    if s < d / (2.0 * d - 1.0) {
        violated.push(format!("s >= d/(2d-1) = {}", d / (2.0 * d - 1.0)));
    }
    let pair = match mode {
        LwpMode::RadialSubcritical => {
            if !(gamma >= 0.0 && gamma < d / 2.0) {
                violated.push(format!("0 <= gamma < d/2 (gamma = {gamma})"));
            }
            if !(gamma > s_c) {
                violated.push(format!("gamma > s_c = {s_c} (gamma = {gamma})"));
            }
            (
                4.0 * s * (a + 2.0) / (a * (d - 2.0 * gamma)),
                d * (a + 2.0) / (d + a * gamma),
            )
        }
        LwpMode::RadialCritical => {
            if s_c < -EXPONENT_TOL {
                violated.push(format!("s_c >= 0 (s_c = {s_c})"));
            }
            (a + 2.0, 2.0 * d * (a + 2.0) / (d * (a + 2.0) - 4.0 * s))
        }
    };
    if violated.is_empty() {
        Ok(pair)
    } else {
        Err(FnlsError::Domain(format!(
            "hypotheses violated: {}",
            violated.join("; ")
        )))
    }
}
