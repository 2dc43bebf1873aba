//! Blow-up criteria for initial data and the lower bounds `δ` on `-K(u(t))` they provide.

use serde::Serialize;

use crate::dynamics::TrajectoryRecord;
use crate::error::{FnlsError, Result};
use crate::field::Field;
use crate::ground_state::ThresholdData;
use crate::invariants::conserved_report;
use crate::params::{Criticality, PhysicsParams};

pub const ANALYTIC_LABEL: &str = "criterion met (analytic)";
pub const NUMERIC_LABEL: &str = "monitor consistent (numeric)";
/// Relative tolerance for matching threshold parameters against the data's.
const PARAM_TOL: f64 = 1e-12;
/// Products within this relative distance of a threshold count as equal, hence not covered.
pub const EQUALITY_TOL: f64 = 1e-9;

fn strictly_below(value: f64, threshold: f64) -> bool {
    value < threshold - EQUALITY_TOL * threshold.abs()
}

fn strictly_above(value: f64, threshold: f64) -> bool {
    value > threshold + EQUALITY_TOL * threshold.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CriterionMet,
    NotCovered,
}

/// Each check is `None` when its branch does not apply to the power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[allow(non_snake_case)]
pub struct CriteriaChecks {
    pub E_negative: bool,
    pub intercritical_energy_product: Option<bool>,
    pub intercritical_gradient_product: Option<bool>,
    pub energy_critical_energy: Option<bool>,
    pub energy_critical_gradient: Option<bool>,
}

/// Every compared quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub energy: f64,
    pub mass: f64,
    pub hs_norm: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha_mass_critical: f64,
    /// `E(u0) M(u0)^σ` (intercritical) or `E(u0)` (energy-critical).
    pub energy_quantity: Option<f64>,
    /// `‖(-Δ)^(s/2)u0‖ ‖u0‖^σ` (intercritical) or `‖(-Δ)^(s/2)u0‖` (energy-critical).
    pub gradient_quantity: Option<f64>,
    pub energy_threshold: Option<f64>,
    pub gradient_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBound {
    pub delta: f64,
    pub rho: f64,
    pub rho_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriteriaVerdict {
    pub class: Criticality,
    pub checks: CriteriaChecks,
    pub delta: Option<f64>,
    /// `ρ` behind `delta` in the threshold branches.
    pub rho: Option<f64>,
    pub verdict: Verdict,
    pub label: Option<&'static str>,
    pub provenance: Provenance,
}

fn check_thresholds(params: &PhysicsParams, data: &ThresholdData) -> Result<()> {
    let t = data.params();
    let near = |a: f64, b: f64| (a - b).abs() <= PARAM_TOL * b.abs().max(1.0);
    if t.dim != params.dim || !near(t.s, params.s) || !near(t.alpha, params.alpha) {
        return Err(FnlsError::structural(format!(
            "thresholds were computed for (d, s, alpha) = ({}, {}, {}), data has ({}, {}, {})",
            t.dim, t.s, t.alpha, params.dim, params.s, params.alpha
        )));
    }
    let regime_ok = matches!(
        (params.class(), data),
        (Criticality::Intercritical, ThresholdData::Intercritical(_))
            | (Criticality::EnergyCritical, ThresholdData::EnergyCritical(_))
    );
    if !regime_ok {
        return Err(FnlsError::structural("threshold regime does not match the power"));
    }
    Ok(())
}

/// Classifies `u0`; thresholds are required for intercritical and energy-critical powers.
pub fn classify(u0: &Field, params: &PhysicsParams, thresholds: Option<&ThresholdData>) -> Result<CriteriaVerdict> {
    if u0.grid().dim() != params.dim {
        return Err(FnlsError::structural("grid dimension differs from params.dim"));
    }
    let class = params.class();
    let needs = matches!(class, Criticality::Intercritical | Criticality::EnergyCritical);
    match (needs, thresholds) {
        (true, None) => {
            return Err(FnlsError::structural(format!("{class:?} data needs threshold data")))
        }
        (_, Some(t)) => check_thresholds(params, t)?,
        (false, None) => {}
    }

    let rep = conserved_report(u0, params);
    let e_negative = rep.energy < 0.0;
    let mut checks = CriteriaChecks {
        E_negative: e_negative,
        intercritical_energy_product: None,
        intercritical_gradient_product: None,
        energy_critical_energy: None,
        energy_critical_gradient: None,
    };
    let mut prov = Provenance {
        energy: rep.energy,
        mass: rep.mass,
        hs_norm: rep.hs_norm,
        k: rep.k,
        alpha_mass_critical: params.alpha_star(),
        energy_quantity: None,
        gradient_quantity: None,
        energy_threshold: None,
        gradient_threshold: None,
    };

    let mut branch_met = false;
    match thresholds {
        Some(ThresholdData::Intercritical(t)) => {
            let ep = rep.energy * rep.mass.powf(t.sigma);
            let gp = rep.hs_norm * rep.mass.sqrt().powf(t.sigma);
            // equality is not covered: the inequalities are strict
            let e_ok = strictly_below(ep, t.e_q_m_sigma);
            let g_ok = strictly_above(gp, t.x0_direct);
            checks.intercritical_energy_product = Some(e_ok);
            checks.intercritical_gradient_product = Some(g_ok);
            branch_met = e_ok && g_ok;
            prov.energy_quantity = Some(ep);
            prov.gradient_quantity = Some(gp);
            prov.energy_threshold = Some(t.e_q_m_sigma);
            prov.gradient_threshold = Some(t.x0_direct);
        }
        Some(ThresholdData::EnergyCritical(t)) => {
            let e_ok = strictly_below(rep.energy, t.e_w);
            let g_ok = strictly_above(rep.hs_norm, t.y0_direct);
            checks.energy_critical_energy = Some(e_ok);
            checks.energy_critical_gradient = Some(g_ok);
            branch_met = e_ok && g_ok;
            prov.energy_quantity = Some(rep.energy);
            prov.gradient_quantity = Some(rep.hs_norm);
            prov.energy_threshold = Some(t.e_w);
            prov.gradient_threshold = Some(t.y0_direct);
        }
        None => {}
    }

    let negative_branch = e_negative && params.alpha >= params.alpha_star() * (1.0 - PARAM_TOL);
    let met = negative_branch || branch_met;
    let (delta, rho) = if negative_branch {
        (Some(-params.s * rep.energy), None)
    } else if branch_met {
        let b = delta_bound(u0, params, thresholds.expect("branch needs thresholds"), None)?;
        (Some(b.delta), Some(b.rho))
    } else {
        (None, None)
    };
    Ok(CriteriaVerdict {
        class,
        checks,
        delta,
        rho,
        verdict: if met { Verdict::CriterionMet } else { Verdict::NotCovered },
        label: met.then_some(ANALYTIC_LABEL),
        provenance: prov,
    })
}

/// `δ` for data below the threshold with nonnegative energy, at `rho` or at the largest
/// admissible `ρ` when `rho` is `None`.
pub fn delta_bound(
    u0: &Field,
    params: &PhysicsParams,
    thresholds: &ThresholdData,
    rho: Option<f64>,
) -> Result<DeltaBound> {
    check_thresholds(params, thresholds)?;
    let rep = conserved_report(u0, params);
    if rep.energy < 0.0 {
        return Err(FnlsError::domain(
            "delta_bound covers E(u0) >= 0; negative energy gives δ = -s E(u0)",
        ));
    }
    let (s, d, a) = (params.s, params.d(), params.alpha);
    let (ratio, hs_sq, mass_factor) = match thresholds {
        ThresholdData::Intercritical(t) => {
            if !strictly_above(rep.hs_norm * rep.mass.sqrt().powf(t.sigma), t.x0_direct) {
                return Err(FnlsError::Rejected("gradient product is not above x0".into()));
            }
            let ep = rep.energy * rep.mass.powf(t.sigma);
            (ep / t.e_q_m_sigma, t.hs_norm_sq, (t.mass / rep.mass).powf(t.sigma))
        }
        ThresholdData::EnergyCritical(t) => {
            if !strictly_above(rep.hs_norm, t.y0_direct) {
                return Err(FnlsError::Rejected("gradient norm is not above that of W".into()));
            }
            (rep.energy / t.e_w, t.hs_norm_sq, 1.0)
        }
    };
    let rho_max = (1.0 - ratio).min(1.0);
    if !(rho_max > EQUALITY_TOL) {
        return Err(FnlsError::Rejected(format!(
            "no admissible ρ > 0: energy quantity is {ratio} times the threshold"
        )));
    }
    let rho = rho.unwrap_or(rho_max);
    if !(rho > 0.0 && rho <= rho_max) {
        return Err(FnlsError::Rejected(format!("ρ = {rho} is outside (0, {rho_max}]")));
    }
    let delta = match thresholds {
        ThresholdData::Intercritical(_) => (d * a - 4.0 * s) * rho / 8.0 * hs_sq * mass_factor,
        ThresholdData::EnergyCritical(_) => rho * s * s / (d - 2.0 * s) * hs_sq,
    };
    Ok(DeltaBound { delta, rho, rho_max })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonitorCheck {
    pub delta: f64,
    pub sup_k: f64,
    /// Window over which the records were resolved.
    pub t_first: f64,
    pub t_last: f64,
    pub samples: usize,
    pub relative_tolerance: f64,
    pub consistent: bool,
    pub label: Option<&'static str>,
}

/// Checks `sup K(u(t)) <= -δ + tol·δ` over the leading records whose mass drift stays
/// within `drift_limit` and that carry no periodization warning.
pub fn monitor_k_bound(
    delta: f64,
    records: &[TrajectoryRecord],
    relative_tolerance: f64,
    drift_limit: f64,
) -> Result<MonitorCheck> {
    if !(delta > 0.0) {
        return Err(FnlsError::domain("δ must be positive"));
    }
    let resolved: Vec<&TrajectoryRecord> = records
        .iter()
        .take_while(|r| r.mass_drift <= drift_limit && !r.resolution_flags.periodization)
        .collect();
    if resolved.is_empty() {
        return Err(FnlsError::Rejected("no resolved samples to monitor".into()));
    }
    let sup_k = resolved.iter().map(|r| r.conserved.k).fold(f64::NEG_INFINITY, f64::max);
    let consistent = sup_k <= -delta + relative_tolerance * delta;
    Ok(MonitorCheck {
        delta,
        sup_k,
        t_first: resolved[0].t,
        t_last: resolved[resolved.len() - 1].t,
        samples: resolved.len(),
        relative_tolerance,
        consistent,
        label: consistent.then_some(NUMERIC_LABEL),
    })
}
