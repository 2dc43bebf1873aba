//! The five subcommands. Each writes its artifacts into `dir` and returns a short JSON summary.

use std::path::Path;
use std::sync::Arc;

use fnls_core::cutoffs::{make_phi, make_psi, verify_weight_properties};
use fnls_core::dynamics::{virial_estimate_monitor, EvolveOptions, Monitors};
use fnls_core::ground_state::{GroundStateSolution, ThresholdData};
use fnls_core::virial::{auxiliary_identity_check, lemma_bound_report, m_action, v_action};
use fnls_core::{
    classify, energy_critical_thresholds, evolve, intercritical_thresholds, make_w, solve_q, strang_step,
    virial_actions, Criticality, Field, Grid, MQuadrature, PhysicsParams, Spectrum,
};
use log::info;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_diagnostics, write_field, write_json};

const Q_TOL: f64 = 1e-10;
const Q_MAX_ITER: usize = 4000;
const QUAD_ORDER: usize = 256;

fn ground_state_solution(params: &PhysicsParams, grid: &Arc<Grid>) -> Result<GroundStateSolution, CliError> {
    info!("solving for the ground state on {} points", grid.len());
    let sol = if params.class() == Criticality::EnergyCritical {
        make_w(Arc::clone(grid), params)?
    } else {
        solve_q(Arc::clone(grid), params, Q_TOL, Q_MAX_ITER)?
    };
    Ok(sol)
}

fn thresholds_for(sol: &GroundStateSolution) -> Result<Option<ThresholdData>, CliError> {
    Ok(match sol.params.class() {
        Criticality::Intercritical => Some(intercritical_thresholds(sol)?),
        Criticality::EnergyCritical => Some(energy_critical_thresholds(sol)?),
        _ => None,
    })
}

#[derive(Serialize)]
struct GroundStateArtifact<'a> {
    kind: fnls_core::ground_state::ProfileKind,
    params: PhysicsParams,
    n: usize,
    #[serde(rename = "L")]
    half_length: f64,
    norms: fnls_core::ground_state::ProfileNorms,
    pohozaev_residuals: (f64, f64),
    iterations: usize,
    converged: bool,
    spectral_tail: f64,
    thresholds: &'a Option<ThresholdData>,
}

pub fn ground_state(cfg: &RunConfig, dir: &Path) -> Result<Value, CliError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let sol = ground_state_solution(&params, &grid)?;
    let thresholds = thresholds_for(&sol)?;
    write_field(&dir.join("profile.fnls"), &sol.profile, &params)?;
    let artifact = GroundStateArtifact {
        kind: sol.kind,
        params,
        n: grid.points_per_dim(),
        half_length: grid.half_length(),
        norms: sol.norms,
        pohozaev_residuals: sol.pohozaev_residuals,
        iterations: sol.iterations,
        converged: sol.converged,
        spectral_tail: sol.spectral_tail,
        thresholds: &thresholds,
    };
    write_json(&dir.join("ground_state.json"), &artifact)?;
    Ok(json!({
        "converged": sol.converged,
        "pohozaev_residuals": sol.pohozaev_residuals,
        "spectral_tail": sol.spectral_tail,
    }))
}

fn initial_state(cfg: &RunConfig, params: &PhysicsParams, grid: &Arc<Grid>) -> Result<Field, CliError> {
    cfg.initial_field(grid, || Ok(ground_state_solution(params, grid)?.profile))
}

pub fn evolve_cmd(cfg: &RunConfig, dir: &Path) -> Result<Value, CliError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let u0 = initial_state(cfg, &params, &grid)?;
    let quad = MQuadrature::build(params.s, QUAD_ORDER)?;
    let monitors = Monitors::new(&grid, &cfg.monitors.radii, Some(quad))?;
    let opts = EvolveOptions::new(cfg.time.dt, cfg.time.t_end, cfg.time.sample_every);
    info!("evolving to t = {} with dt = {}", cfg.time.t_end, cfg.time.dt);
    let mut last = None;
    let traj = fnls_core::dynamics::evolve_with(&u0, &params, &opts, &monitors, |_, u| last = Some(u.clone()))?;
    write_diagnostics(&dir.join("diagnostics.csv"), &cfg.monitors.radii, &traj.records)?;
    write_json(&dir.join("blowup_report.json"), &traj.report)?;
    if let Some(u) = last {
        write_field(&dir.join("final_state.fnls"), &u, &params)?;
    }
    Ok(json!({
        "stopping_reason": traj.report.stopping_reason,
        "triggered": traj.report.triggered,
        "t_final": traj.report.t_final,
        "growth_factor": traj.report.growth_factor,
        "samples": traj.records.len(),
    }))
}

pub fn classify_cmd(cfg: &RunConfig, dir: &Path) -> Result<Value, CliError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let needs_profile = matches!(params.class(), Criticality::Intercritical | Criticality::EnergyCritical)
        || matches!(cfg.initial, crate::config::Initial::GroundStateMultiple { .. });
    let sol = if needs_profile { Some(ground_state_solution(&params, &grid)?) } else { None };
    let thresholds = match &sol {
        Some(s) => thresholds_for(s)?,
        None => None,
    };
    let u0 = cfg.initial_field(&grid, || Ok(sol.as_ref().expect("profile solved above").profile.clone()))?;
    let verdict = classify(&u0, &params, thresholds.as_ref())?;
    write_json(&dir.join("verdict.json"), &json!({ "verdict": verdict, "thresholds": thresholds }))?;
    Ok(json!({ "verdict": verdict.verdict, "delta": verdict.delta }))
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }
}

/// `|a - b|` against `max(1e-3 |b|, 1e-8)`, reported as a ratio to that allowance.
fn fd_check(name: String, fd: f64, rhs: f64) -> Check {
    let allowance = (1e-3 * rhs.abs()).max(1e-8);
    Check::new(name, (fd - rhs).abs() / allowance, 1.0)
}

/// Band-limited field with seeded random modes up to a quarter of the Nyquist frequency.
fn random_band_limited(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Result<Field, CliError> {
    let cut = grid.nyquist() / 4.0;
    let dim = grid.dim();
    let coeffs = (0..grid.len())
        .map(|i| {
            let inside = (0..dim).all(|a| grid.xi_component(i, a).abs() <= cut);
            let (re, im): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if inside { Complex64::new(re, im) } else { Complex64::new(0.0, 0.0) }
        })
        .collect();
    Ok(Spectrum::new(Arc::clone(grid), coeffs)?.to_physical())
}

pub fn verify(cfg: &RunConfig, dir: &Path) -> Result<Value, CliError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let u0 = initial_state(cfg, &params, &grid)?;
    let quad = MQuadrature::build(params.s, QUAD_ORDER)?;
    let mut checks = Vec::new();
    let mut info = serde_json::Map::new();

    checks.push(Check::new("quadrature_symbol", quad.validation_error().1, 1e-8));
    checks.push(Check::new("auxiliary_identity", auxiliary_identity_check(&u0, &params, &quad)?.residual, 1e-6));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let u = random_band_limited(&grid, &mut rng)?;
        worst = worst.max(auxiliary_identity_check(&u, &params, &quad)?.residual);
    }
    checks.push(Check::new("auxiliary_identity_random", worst, 1e-6));

    // central differences around one step of the flow
    let dt = cfg.time.dt;
    let u1 = strang_step(&u0, dt, &params)?;
    let u2 = strang_step(&u1, dt, &params)?;
    let mut lemma = Vec::new();
    for &r in &cfg.monitors.radii {
        let psi = make_psi(Arc::clone(&grid), r)?;
        let phi = make_phi(Arc::clone(&grid), r)?;
        let rv = virial_actions(&u1, &psi, &params, &quad)?;
        let rm = virial_actions(&u1, &phi, &params, &quad)?;
        let fd_v = (v_action(&u2, &psi) - v_action(&u0, &psi)) / (2.0 * dt);
        let fd_m = (m_action(&u2, &phi) - m_action(&u0, &phi)) / (2.0 * dt);
        checks.push(fd_check(format!("dV_dt_R{r}"), fd_v, rv.dv_dt_rhs));
        checks.push(fd_check(format!("dM_dt_R{r}"), fd_m, rm.dm_dt_rhs));
        checks.push(Check::new(format!("dV_dt_imag_R{r}"), rv.dv_dt_imag.abs() / rv.dv_dt_rhs.abs().max(1e-8), 1e-10));
        let t = rm.term_breakdown;
        let sum = t.bilaplacian_term + t.hessian_term + t.nonlinear_term;
        checks.push(Check::new(
            format!("dM_dt_breakdown_R{r}"),
            (sum - rm.dm_dt_rhs).abs() / rm.dm_dt_rhs.abs().max(1.0),
            1e-12,
        ));

        let w = verify_weight_properties(&phi)?;
        let min = w.min_theta_second.min(w.min_radial_slope).min(w.min_laplacian);
        checks.push(Check::new(format!("phi_pointwise_R{r}"), (-min).max(0.0), 1e-12));
        let ext = fnls_core::exterior_mass(&u0, r)?;
        checks.push(Check::new(format!("exterior_below_psi_R{r}"), (ext.sharp - ext.v_psi).max(0.0), 1e-14 * ext.v_psi));
        lemma.push(json!({ "radius": r, "bounds": lemma_bound_report(&u0, &phi, &params, &quad)? }));
    }
    info.insert("lemma_bounds".into(), Value::Array(lemma));
    let first = cfg.monitors.radii[0];
    info.insert(
        "virial_estimate".into(),
        serde_json::to_value(virial_estimate_monitor(&u0, first, &params, &quad, cfg.monitors.q_exponent)?)
            .map_err(|e| CliError::io(e.to_string()))?,
    );

    info!("checking conservation up to t = {}", cfg.time.t_end);
    let opts = EvolveOptions::new(dt, cfg.time.t_end, cfg.time.sample_every);
    let traj = evolve(&u0, &params, &opts, &Monitors::none())?;
    let e0 = traj.records[0].conserved.energy;
    let e_drift = traj
        .records
        .iter()
        .map(|r| (r.conserved.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    checks.push(Check::new("mass_drift", traj.report.max_mass_drift, 1e-10));
    checks.push(Check::new("energy_drift", e_drift, 1e-6));
    info.insert("conservation_run".into(), json!({ "t_final": traj.report.t_final, "stopping_reason": traj.report.stopping_reason }));
    info.insert("initial".into(), json!(fnls_core::conserved_report(&u0, &params)));
    info.insert("class".into(), json!(params.class()));

    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    let all_pass = failed.is_empty();
    write_json(&dir.join("verification.json"), &json!({ "all_pass": all_pass, "checks": checks, "informational": info }))?;
    if all_pass {
        Ok(json!({ "all_pass": true, "checks": checks.len() }))
    } else {
        Err(CliError::verification(failed))
    }
}
