//! Strang splitting for the focusing flow, trajectory monitors and blow-up detection.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::cutoffs::{make_phi, psi_within_box, Weight};
use crate::error::{FnlsError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::invariants::{conserved_report, ConservedReport};
use crate::params::PhysicsParams;
use crate::quadrature::MQuadrature;
use crate::virial::{v_action, virial_actions, VirialReport};

pub const MAX_DT: f64 = 1e-2;
pub const DEFAULT_BLOWUP_FACTOR: f64 = 20.0;
pub const DEFAULT_DRIFT_LIMIT: f64 = 1e-6;
/// Fraction of the Nyquist frequency kept by the truncation after each nonlinear sub-step.
pub const DEALIAS_FRACTION: f64 = 2.0 / 3.0;
/// Per-step truncated mass fraction above which a sample is flagged as aliased.
pub const ALIAS_FLAG_TOL: f64 = 1e-10;
/// Relative change of `t*` tolerated between a run and its refinement.
pub const REFINEMENT_TOL: f64 = 0.05;

/// One fixed-`dt` Strang step with precomputed linear phases.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<Grid>,
    params: PhysicsParams,
    dt: f64,
    phase: Vec<Complex64>,
    /// `|ξ|^(2s)`.
    symbol: Vec<f64>,
    /// `None` disables truncation.
    keep: Option<Vec<bool>>,
    nonlinear: bool,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: Field,
    /// Mass fraction removed by truncation during the step.
    pub alias_tail: f64,
    pub mass: f64,
    pub hs_norm: f64,
}

impl Stepper {
    /// Full flow with truncation after each nonlinear sub-step.
    pub fn new(grid: Arc<Grid>, params: &PhysicsParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FnlsError::domain(format!("dt must be positive, got {dt}")));
        }
        if grid.dim() != params.dim {
            return Err(FnlsError::structural("grid dimension differs from params.dim"));
        }
        let s = params.s;
        let symbol: Vec<f64> = grid.xi_sq().iter().map(|k2| k2.powf(s)).collect();
        let phase = symbol.iter().map(|w| Complex64::from_polar(1.0, -w * dt)).collect();
        let cutoff = DEALIAS_FRACTION * grid.nyquist();
        let keep = (0..grid.len())
            .map(|i| (0..grid.dim()).all(|a| grid.xi_component(i, a).abs() <= cutoff))
            .collect();
        Ok(Stepper {
            grid,
            params: *params,
            dt,
            phase,
            symbol,
            keep: Some(keep),
            nonlinear: true,
        })
    }

    /// Free flow `e^{-i dt (-Δ)^s}` only.
    pub fn linear(grid: Arc<Grid>, params: &PhysicsParams, dt: f64) -> Result<Self> {
        let mut st = Stepper::new(grid, params, dt)?;
        st.nonlinear = false;
        st.keep = None;
        Ok(st)
    }

    pub fn without_truncation(mut self) -> Self {
        self.keep = None;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn nonlinear_half(&self, data: &mut [Complex64]) {
        let half_alpha = 0.5 * self.params.alpha;
        let h = 0.5 * self.dt;
        for v in data.iter_mut() {
            let a2 = v.norm_sqr();
            if a2 > 0.0 {
                let (sin, cos) = (a2.powf(half_alpha) * h).sin_cos();
                *v *= Complex64::new(cos, sin);
            }
        }
    }

    /// Zeros the high modes and returns the removed and total `Σ|c|²`.
    fn truncate(&self, coeffs: &mut [Complex64]) -> (f64, f64) {
        let Some(keep) = &self.keep else {
            return (0.0, coeffs.iter().map(|c| c.norm_sqr()).sum());
        };
        let mut removed = 0.0;
        let mut total = 0.0;
        for (c, &k) in coeffs.iter_mut().zip(keep) {
            let e = c.norm_sqr();
            total += e;
            if !k {
                removed += e;
                *c = Complex64::new(0.0, 0.0);
            }
        }
        (removed, total)
    }

    pub fn step(&self, field: &Field) -> Result<StepOutcome> {
        if !field.grid().same_shape(&self.grid) {
            return Err(FnlsError::structural("field grid differs from the stepper grid"));
        }
        let g = &self.grid;
        let mut data = field.values().to_vec();
        let mut removed = 0.0;
        let mut total = 0.0;
        if self.nonlinear {
            self.nonlinear_half(&mut data);
        }
        g.forward_in_place(&mut data);
        if self.nonlinear {
            let (r, t) = self.truncate(&mut data);
            removed += r;
            total = t;
        }
        for (c, p) in data.iter_mut().zip(&self.phase) {
            *c *= p;
        }
        if self.nonlinear {
            g.inverse_in_place(&mut data);
            self.nonlinear_half(&mut data);
            g.forward_in_place(&mut data);
            let (r, _) = self.truncate(&mut data);
            removed += r;
        }
        let vol = g.volume();
        let mass = vol * data.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let hs_sq = vol * data.iter().zip(&self.symbol).map(|(c, w)| w * c.norm_sqr()).sum::<f64>();
        g.inverse_in_place(&mut data);
        let next = Field::new(Arc::clone(g), data)?;
        if !(next.is_finite() && mass.is_finite() && hs_sq.is_finite()) {
            return Err(FnlsError::NonFinite {
                t: self.dt,
                last_finite: Box::new(field.clone()),
            });
        }
        Ok(StepOutcome {
            field: next,
            alias_tail: if total > 0.0 { removed / total } else { 0.0 },
            mass,
            hs_norm: hs_sq.sqrt(),
        })
    }
}

/// One Strang step of the full flow (with truncation).
pub fn strang_step(field: &Field, dt: f64, params: &PhysicsParams) -> Result<Field> {
    Ok(Stepper::new(Arc::clone(field.grid()), params, dt)?.step(field)?.field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExteriorMass {
    pub radius: f64,
    /// `∫_{|x| >= R} |u|²`.
    pub sharp: f64,
    /// `V_{ψ_R}(u)`.
    pub v_psi: f64,
}

fn sharp_exterior(field: &Field, radius: f64) -> f64 {
    let g = field.grid();
    field
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| g.radius(*i) >= radius)
        .map(|(_, u)| u.norm_sqr())
        .sum::<f64>()
        * g.cell_volume()
}

pub fn exterior_mass(field: &Field, radius: f64) -> Result<ExteriorMass> {
    let psi = psi_within_box(Arc::clone(field.grid()), radius)?;
    Ok(exterior_with(field, &psi))
}

fn exterior_with(field: &Field, psi: &Weight) -> ExteriorMass {
    ExteriorMass {
        radius: psi.radius(),
        sharp: sharp_exterior(field, psi.radius()),
        v_psi: v_action(field, psi),
    }
}

/// `η ∈ (0, 1)` with `1/(alpha+2) = η/2 + (1-η)/q`.
pub fn interpolation_eta(alpha: f64, q: f64) -> Result<f64> {
    let p = alpha + 2.0;
    if !(q > p) {
        return Err(FnlsError::domain(format!(
            "interpolation needs q > alpha + 2 = {p}, got {q}"
        )));
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok((1.0 / p - inv_q) / (0.5 - inv_q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialEstimateRecord {
    pub radius: f64,
    pub q_exponent: f64,
    pub eta: f64,
    /// `d/dt M_{φ_R}` from the identity.
    pub lhs: f64,
    pub sixteen_k: f64,
    /// `‖u‖²_{L²(|x| >= R)}`.
    pub exterior_l2_sq: f64,
    /// `R^-2 ‖u‖²_{L²(|x| >= R)}`.
    pub remainder_r2: f64,
    /// `‖u‖^{η(alpha+2)}_{L²(|x| >= R)}`.
    pub remainder_eta: f64,
    /// `lhs - 16K`: what the remainders have to cover.
    pub excess: f64,
    /// Smallest `C` making the estimate hold at this state (0 when `excess <= 0`).
    pub required_constant: f64,
}

impl VirialEstimateRecord {
    /// `16K + C (remainders) - lhs` for a given constant.
    pub fn slack(&self, c: f64) -> f64 {
        self.sixteen_k + c * (self.remainder_r2 + self.remainder_eta) - self.lhs
    }
}

pub fn virial_estimate_monitor(
    field: &Field,
    radius: f64,
    params: &PhysicsParams,
    quad: &MQuadrature,
    q_exponent: f64,
) -> Result<VirialEstimateRecord> {
    let eta = interpolation_eta(params.alpha, q_exponent)?;
    let phi = make_phi(Arc::clone(field.grid()), radius)?;
    let report = virial_actions(field, &phi, params, quad)?;
    let k = conserved_report(field, params).k;
    let ext = sharp_exterior(field, radius);
    let remainder_r2 = ext / (radius * radius);
    let remainder_eta = ext.powf(0.5 * eta * (params.alpha + 2.0));
    let excess = report.dm_dt_rhs - 16.0 * k;
    let rem = remainder_r2 + remainder_eta;
    let required_constant = if excess <= 0.0 {
        0.0
    } else if rem > 0.0 {
        excess / rem
    } else {
        f64::INFINITY
    };
    Ok(VirialEstimateRecord {
        radius,
        q_exponent,
        eta,
        lhs: report.dm_dt_rhs,
        sixteen_k: 16.0 * k,
        exterior_l2_sq: ext,
        remainder_r2,
        remainder_eta,
        excess,
        required_constant,
    })
}

/// Weights and settings evaluated along a trajectory.
#[derive(Debug, Clone)]
pub struct Monitors {
    exterior: Vec<Weight>,
    virial: Option<(Weight, MQuadrature)>,
    pub blowup_factor: f64,
    pub drift_limit: f64,
}

impl Monitors {
    pub fn none() -> Self {
        Monitors {
            exterior: Vec::new(),
            virial: None,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
            drift_limit: DEFAULT_DRIFT_LIMIT,
        }
    }

    /// Exterior masses at every radius; with a quadrature, the virial report for `φ_R`
    /// at the first radius.
    pub fn new(grid: &Arc<Grid>, radii: &[f64], quad: Option<MQuadrature>) -> Result<Self> {
        let exterior = radii
            .iter()
            .map(|&r| psi_within_box(Arc::clone(grid), r))
            .collect::<Result<Vec<_>>>()?;
        let virial = match (quad, radii.first()) {
            (Some(q), Some(&r)) => Some((make_phi(Arc::clone(grid), r)?, q)),
            (Some(_), None) => {
                return Err(FnlsError::domain("virial monitoring needs at least one radius"))
            }
            (None, _) => None,
        };
        Ok(Monitors {
            exterior,
            virial,
            ..Monitors::none()
        })
    }

    pub fn with_blowup_factor(mut self, factor: f64) -> Self {
        self.blowup_factor = factor;
        self
    }

    pub fn with_drift_limit(mut self, limit: f64) -> Self {
        self.drift_limit = limit;
        self
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        let weights = self.exterior.iter().chain(self.virial.iter().map(|(w, _)| w));
        for w in weights {
            if !w.grid().same_shape(grid) {
                return Err(FnlsError::structural("monitor weight lives on a different grid"));
            }
        }
        if !(self.blowup_factor > 1.0) {
            return Err(FnlsError::domain("blow-up factor must exceed 1"));
        }
        if !(self.drift_limit > 0.0) {
            return Err(FnlsError::domain("drift limit must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResolutionFlags {
    /// Truncation removed more than `ALIAS_FLAG_TOL` of the mass in some step since the last sample.
    pub aliasing: bool,
    /// The state is not negligible near the box faces.
    pub periodization: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub step: usize,
    pub conserved: ConservedReport,
    pub hs_norm: f64,
    pub exterior: Vec<ExteriorMass>,
    pub virial: Option<VirialReport>,
    pub mass_drift: f64,
    /// Largest per-step truncated fraction since the previous sample.
    pub alias_tail: f64,
    pub resolution_flags: ResolutionFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingReason {
    GradientGrowth,
    DriftBreach,
    TEndReached,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub triggered: bool,
    /// Interpolated time at which `hs_norm` crossed `threshold · hs_norm(0)`.
    pub t_star_estimate: Option<f64>,
    /// Largest `hs_norm(t)/hs_norm(0)` seen.
    pub growth_factor: f64,
    pub threshold: f64,
    pub fit_exponent: Option<f64>,
    pub stopping_reason: StoppingReason,
    pub t_final: f64,
    pub steps: usize,
    pub max_mass_drift: f64,
    pub max_alias_tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every this many steps (the initial and final states are always recorded).
    pub sample_every: usize,
    pub dealias: bool,
    pub nonlinear: bool,
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64, sample_every: usize) -> Self {
        EvolveOptions {
            dt,
            t_end,
            sample_every,
            dealias: true,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            bad.push(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            bad.push(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.sample_every == 0 {
            bad.push("sample_every must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(FnlsError::Domain(bad.join("; ")))
        }
    }

    fn steps(&self) -> usize {
        // tolerate round-off in t_end / dt
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub report: BlowupReport,
}

pub fn evolve(u0: &Field, params: &PhysicsParams, opts: &EvolveOptions, monitors: &Monitors) -> Result<Trajectory> {
    evolve_with(u0, params, opts, monitors, |_, _| {})
}

/// As [`evolve`], handing each recorded state to `observer`.
pub fn evolve_with(
    u0: &Field,
    params: &PhysicsParams,
    opts: &EvolveOptions,
    monitors: &Monitors,
    mut observer: impl FnMut(&TrajectoryRecord, &Field),
) -> Result<Trajectory> {
    opts.validate()?;
    monitors.check(u0.grid())?;
    if let Some((_, q)) = &monitors.virial {
        if (q.s() - params.s).abs() > 1e-15 {
            return Err(FnlsError::structural("monitor quadrature built for a different s"));
        }
    }
    let grid = Arc::clone(u0.grid());
    let mut stepper = if opts.nonlinear {
        Stepper::new(Arc::clone(&grid), params, opts.dt)?
    } else {
        Stepper::linear(Arc::clone(&grid), params, opts.dt)?
    };
    if !opts.dealias {
        stepper = stepper.without_truncation();
    }

    let record = |field: &Field, step: usize, mass_drift: f64, alias_tail: f64| -> Result<TrajectoryRecord> {
        let conserved = conserved_report(field, params);
        let virial = match &monitors.virial {
            Some((w, q)) => Some(virial_actions(field, w, params, q)?),
            None => None,
        };
        Ok(TrajectoryRecord {
            t: step as f64 * opts.dt,
            step,
            conserved,
            hs_norm: conserved.hs_norm,
            exterior: monitors.exterior.iter().map(|w| exterior_with(field, w)).collect(),
            virial,
            mass_drift,
            alias_tail,
            resolution_flags: ResolutionFlags {
                aliasing: alias_tail > ALIAS_FLAG_TOL,
                periodization: field.periodization_flag(),
            },
        })
    };

    let first = record(u0, 0, 0.0, 0.0)?;
    observer(&first, u0);
    let m0 = first.conserved.mass;
    let hs0 = first.hs_norm;
    let target = monitors.blowup_factor * hs0;
    let mut records = vec![first];

    let n_steps = opts.steps();
    let mut u = u0.clone();
    let mut hs_prev = hs0;
    let mut growth: f64 = 1.0;
    let mut max_drift: f64 = 0.0;
    let mut max_tail: f64 = 0.0;
    let mut tail_since_sample: f64 = 0.0;
    let mut reason = StoppingReason::TEndReached;
    let mut t_star = None;
    let mut last_step = 0;
    for k in 1..=n_steps {
        let out = stepper.step(&u).map_err(|e| match e {
            FnlsError::NonFinite { last_finite, .. } => FnlsError::NonFinite {
                t: (k - 1) as f64 * opts.dt,
                last_finite,
            },
            other => other,
        })?;
        u = out.field;
        last_step = k;
        let drift = if m0 > 0.0 { (out.mass - m0).abs() / m0 } else { 0.0 };
        max_drift = max_drift.max(drift);
        max_tail = max_tail.max(out.alias_tail);
        tail_since_sample = tail_since_sample.max(out.alias_tail);
        if hs0 > 0.0 {
            growth = growth.max(out.hs_norm / hs0);
        }
        let mut stop = false;
        if drift > monitors.drift_limit {
            reason = StoppingReason::DriftBreach;
            stop = true;
        } else if hs0 > 0.0 && out.hs_norm >= target {
            let frac = (target - hs_prev) / (out.hs_norm - hs_prev);
            t_star = Some((k as f64 - 1.0 + frac.clamp(0.0, 1.0)) * opts.dt);
            reason = StoppingReason::GradientGrowth;
            stop = true;
        }
        hs_prev = out.hs_norm;
        if stop || k % opts.sample_every == 0 || k == n_steps {
            let rec = record(&u, k, drift, tail_since_sample)?;
            observer(&rec, &u);
            records.push(rec);
            tail_since_sample = 0.0;
        }
        if stop {
            break;
        }
    }

    let triggered = reason == StoppingReason::GradientGrowth;
    let fit_exponent = if reason == StoppingReason::TEndReached && records.len() >= 20 {
        let t_mid = 0.5 * last_step as f64 * opts.dt;
        growth_exponent_fit(&records, (t_mid, f64::INFINITY)).ok()
    } else {
        None
    };
    Ok(Trajectory {
        records,
        report: BlowupReport {
            triggered,
            t_star_estimate: t_star,
            growth_factor: growth,
            threshold: monitors.blowup_factor,
            fit_exponent,
            stopping_reason: reason,
            t_final: last_step as f64 * opts.dt,
            steps: last_step,
            max_mass_drift: max_drift,
            max_alias_tail: max_tail,
        },
    })
}

/// Least-squares slope of `log hs` against `log t`.
pub fn fit_power_law(t: &[f64], hs: &[f64]) -> Result<f64> {
    if t.len() != hs.len() {
        return Err(FnlsError::structural("time and norm series differ in length"));
    }
    if t.len() < 10 {
        return Err(FnlsError::Rejected(format!("need >= 10 samples, got {}", t.len())));
    }
    if t.iter().any(|&v| !(v > 0.0)) || hs.iter().any(|&v| !(v > 0.0)) {
        return Err(FnlsError::Rejected("times and norms must be positive".into()));
    }
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    if !increasing(t) {
        return Err(FnlsError::Rejected("times must increase".into()));
    }
    if !increasing(hs) {
        return Err(FnlsError::Rejected("hs_norm is not increasing over the window".into()));
    }
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = hs.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Growth exponent of `hs_norm` over the records with `t` in `[window.0, window.1]`.
pub fn growth_exponent_fit(records: &[TrajectoryRecord], window: (f64, f64)) -> Result<f64> {
    let (t, hs): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1 && r.t > 0.0)
        .map(|r| (r.t, r.hs_norm))
        .unzip();
    fit_power_law(&t, &hs)
}

/// A detection run and its refinement with `dt/2` and `2n`.
#[derive(Debug, Clone, Serialize)]
pub struct RefinedDetection {
    pub coarse: BlowupReport,
    pub fine: BlowupReport,
    /// `|t*_fine - t*_coarse| / t*_fine` when both runs triggered.
    pub relative_change: Option<f64>,
    /// Both triggered and agree within `REFINEMENT_TOL`.
    pub resolved: bool,
}

/// Runs `initial` on `grid` and on the doubled grid with half the step; a blow-up is only
/// confirmed when both runs trigger at consistent times.
pub fn detect_with_refinement(
    initial: impl Fn(Arc<Grid>) -> Field,
    grid: &Arc<Grid>,
    params: &PhysicsParams,
    opts: &EvolveOptions,
    blowup_factor: f64,
) -> Result<RefinedDetection> {
    let fine_grid = Grid::new(grid.dim(), 2 * grid.points_per_dim(), grid.half_length())?;
    let monitors = Monitors {
        blowup_factor,
        ..Monitors::none()
    };
    let coarse = evolve(&initial(Arc::clone(grid)), params, opts, &monitors)?.report;
    let fine_opts = EvolveOptions {
        dt: opts.dt / 2.0,
        sample_every: opts.sample_every * 2,
        ..*opts
    };
    let fine = evolve(&initial(fine_grid), params, &fine_opts, &monitors)?.report;
    let relative_change = match (coarse.t_star_estimate, fine.t_star_estimate) {
        (Some(a), Some(b)) => Some((b - a).abs() / b),
        _ => None,
    };
    Ok(RefinedDetection {
        resolved: coarse.triggered
            && fine.triggered
            && relative_change.is_some_and(|c| c <= REFINEMENT_TOL),
        coarse,
        fine,
        relative_change,
    })
}
