//! Ground states `Q` of `(-Δ)^s Q + Q = |Q|^alpha Q`, the energy-critical profile `W`,
//! and the sharp constants and threshold functions derived from them.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FnlsError, Result};
use crate::field::{Field, Spectrum};
use crate::grid::Grid;
use crate::params::{Criticality, PhysicsParams};

/// Smallest half length accepted for the slowly decaying energy-critical profile.
pub const W_MIN_HALF_LENGTH: f64 = 40.0;
/// Relative tolerance for negative values in a computed profile.
const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    Q,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileNorms {
    pub l2: f64,
    /// `‖(-Δ)^(s/2) u‖`.
    pub hs: f64,
    /// `‖u‖_{L^p}` with `p = alpha + 2` (for `W` this is `s*`).
    pub lp: f64,
}

impl ProfileNorms {
    pub fn of(field: &Field, params: &PhysicsParams) -> Self {
        let p = params.alpha + 2.0;
        ProfileNorms {
            l2: field.mass().sqrt(),
            hs: field.to_spectral().hdot_sq(params.s).sqrt(),
            lp: field.lp_integral(p).powf(1.0 / p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateSolution {
    pub kind: ProfileKind,
    pub profile: Field,
    pub params: PhysicsParams,
    pub norms: ProfileNorms,
    /// For `Q`: the two Pohozaev residuals. For `W`: the norm identity residual and the
    /// relative residual of the elliptic equation.
    pub pohozaev_residuals: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    /// Relative update per iteration.
    pub trace: Vec<f64>,
    /// Share of `sum |c_k|^2` beyond 2/3 of the Nyquist frequency. Under-resolved grids can
    /// converge to spurious fixed points; a tail above about 1e-6 is a warning sign.
    pub spectral_tail: f64,
}

/// Both Pohozaev residuals for a candidate `Q`, relative to `‖(-Δ)^(s/2)Q‖²`.
pub fn pohozaev_residuals(norms: &ProfileNorms, params: &PhysicsParams) -> (f64, f64) {
    let (d, s, a) = (params.d(), params.s, params.alpha);
    let x = norms.hs * norms.hs;
    let y = norms.lp.powf(a + 2.0);
    let m = norms.l2 * norms.l2;
    let r1 = (x - d * a / (2.0 * s * (a + 2.0)) * y).abs() / x;
    let r2 = (x - d * a / (4.0 * s - (d - 2.0 * s) * a) * m).abs() / x;
    (r1, r2)
}

/// Petviashvili iteration from a unit-mass Gaussian.
pub fn solve_q(grid: Arc<Grid>, params: &PhysicsParams, tol: f64, max_iter: usize) -> Result<GroundStateSolution> {
    let dim = grid.dim() as f64;
    // unit L² mass: amplitude (2/π)^(d/4)
    let amp = (2.0 / std::f64::consts::PI).powf(dim / 4.0);
    let guess = Field::gaussian(grid, amp, 1.0, &[0.0; 3]);
    solve_q_from(guess, params, tol, max_iter)
}

pub fn solve_q_from(
    initial: Field,
    params: &PhysicsParams,
    tol: f64,
    max_iter: usize,
) -> Result<GroundStateSolution> {
    if !params.class().energy_subcritical() {
        return Err(FnlsError::domain(format!(
            "ground state Q needs an energy-subcritical power, got {:?}",
            params.class()
        )));
    }
    if initial.grid().dim() != params.dim {
        return Err(FnlsError::structural("grid dimension differs from params.dim"));
    }
    if !(tol >= 1e-12) {
        return Err(FnlsError::domain(format!("tolerance must be >= 1e-12, got {tol}")));
    }
    let grid = Arc::clone(initial.grid());
    let alpha = params.alpha;
    // optimal for the direction of Q itself: the linearised map along Q has multiplier
    // (alpha + 1) - kappa alpha
    let kappa = (alpha + 1.0) / alpha;
    let lin: Vec<f64> = grid.xi_sq().iter().map(|k2| k2.powf(params.s) + 1.0).collect();

    let mut q = initial.map(|v| Complex64::new(v.re, 0.0));
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let qh = q.to_spectral();
        let nonlin = q.map(|v| v * v.norm().powf(alpha));
        let nh = nonlin.to_spectral();
        let num: f64 = qh.coeffs().iter().zip(&lin).map(|(c, l)| l * c.norm_sqr()).sum();
        let den: f64 = qh.coeffs().iter().zip(nh.coeffs()).map(|(c, n)| (c.conj() * n).re).sum();
        if !(num > 0.0 && den > 0.0 && num.is_finite() && den.is_finite()) {
            return Err(FnlsError::Degenerate(format!(
                "stabilising factor undefined at iteration {it} (<LQ,Q> = {num:e}, <N(Q),Q> = {den:e})"
            )));
        }
        let factor = (num / den).powf(kappa);
        let coeffs = nh.coeffs().iter().zip(&lin).map(|(c, l)| c * (factor / l)).collect();
        let next = Spectrum::new(Arc::clone(&grid), coeffs)?.to_physical();
        let mut next = symmetrize(&next.map(|v| Complex64::new(v.re, 0.0)));

        let diff: f64 = next
            .values()
            .iter()
            .zip(q.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let size: f64 = next.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let update = diff / size;
        trace.push(update);
        std::mem::swap(&mut q, &mut next);
        if !update.is_finite() {
            return Err(FnlsError::Degenerate(format!("non-finite update at iteration {it}")));
        }
        if update < tol {
            return finish_q(q, params, it, trace);
        }
    }
    Err(FnlsError::NoConvergence {
        iterations: max_iter,
        last: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

fn finish_q(q: Field, params: &PhysicsParams, iterations: usize, trace: Vec<f64>) -> Result<GroundStateSolution> {
    check_positive(&q)?;
    let norms = ProfileNorms::of(&q, params);
    let spectral_tail = profile_tail(&q);
    Ok(GroundStateSolution {
        kind: ProfileKind::Q,
        pohozaev_residuals: pohozaev_residuals(&norms, params),
        profile: q,
        params: *params,
        norms,
        iterations,
        converged: true,
        trace,
        spectral_tail,
    })
}

fn profile_tail(profile: &Field) -> f64 {
    profile.to_spectral().tail_fraction(2.0 / 3.0 * profile.grid().nyquist())
}

fn check_positive(profile: &Field) -> Result<()> {
    let max = profile.values().iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    let min = profile.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if min < -POSITIVITY_TOL * max.abs().max(f64::MIN_POSITIVE) {
        return Err(FnlsError::NegativeProfile { min });
    }
    Ok(())
}

/// Averages over reflections of every axis and over axis exchanges.
fn symmetrize(field: &Field) -> Field {
    let grid = Arc::clone(field.grid());
    let dim = grid.dim();
    let mut vals = field.values().to_vec();
    for axis in 0..dim {
        vals = (0..vals.len())
            .map(|i| 0.5 * (vals[i] + vals[grid.reflect_axis(i, axis)]))
            .collect();
    }
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        if b < dim {
            vals = (0..vals.len())
                .map(|i| 0.5 * (vals[i] + vals[grid.swap_axes(i, a, b)]))
                .collect();
        }
    }
    Field::new(grid, vals).expect("same grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntercriticalThresholds {
    pub params: PhysicsParams,
    pub sigma: f64,
    /// `‖Q‖^(alpha+2)_{alpha+2} / (‖Q‖^((4s-(d-2s)alpha)/2s) ‖(-Δ)^(s/2)Q‖^(d alpha/2s))`.
    pub c_gn: f64,
    /// The same constant from `2s(alpha+2)/(d alpha) (‖(-Δ)^(s/2)Q‖ ‖Q‖^σ)^(-(d alpha - 4s)/2s)`.
    pub c_gn_relation: f64,
    /// Critical point of `f` from `C_GN`.
    pub x0: f64,
    /// `‖(-Δ)^(s/2)Q‖ ‖Q‖^σ`.
    pub x0_direct: f64,
    /// `E(Q) M(Q)^σ` from the profile.
    pub e_q_m_sigma: f64,
    /// `‖(-Δ)^(s/2)Q‖²`, `M(Q)`: inputs of the `δ` formula.
    pub hs_norm_sq: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCriticalThresholds {
    pub params: PhysicsParams,
    pub s_star: f64,
    /// `‖W‖_{s*} / ‖(-Δ)^(s/2)W‖`.
    pub c_se: f64,
    /// `‖(-Δ)^(s/2)W‖^(-2s/d)`, `‖W‖_{s*}^(-s* s/d)`, `(s/(d E(W)))^(s/d)`.
    pub c_se_chain: [f64; 3],
    pub y0: f64,
    /// `‖(-Δ)^(s/2)W‖`.
    pub y0_direct: f64,
    pub e_w: f64,
    pub hs_norm_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum ThresholdData {
    Intercritical(IntercriticalThresholds),
    EnergyCritical(EnergyCriticalThresholds),
}

/// Constants of the intercritical criterion from any profile's norms (they are scale invariant).
pub fn intercritical_from_profile(profile: &Field, params: &PhysicsParams) -> Result<IntercriticalThresholds> {
    if params.class() != Criticality::Intercritical {
        return Err(FnlsError::domain("intercritical thresholds need an intercritical power"));
    }
    let (d, s, a) = (params.d(), params.s, params.alpha);
    let sigma = params.sigma().expect("defined for intercritical powers");
    let n = ProfileNorms::of(profile, params);
    let gap = params.mass_gap();
    let c_gn = n.lp.powf(a + 2.0)
        / (n.l2.powf((4.0 * s - (d - 2.0 * s) * a) / (2.0 * s)) * n.hs.powf(d * a / (2.0 * s)));
    let x0_direct = n.hs * n.l2.powf(sigma);
    let c_gn_relation = 2.0 * s * (a + 2.0) / (d * a) / x0_direct.powf(gap / (2.0 * s));
    let x0 = (2.0 * s * (a + 2.0) / (d * a * c_gn)).powf(2.0 * s / gap);
    let mass = n.l2 * n.l2;
    let energy = 0.5 * n.hs * n.hs - n.lp.powf(a + 2.0) / (a + 2.0);
    Ok(IntercriticalThresholds {
        params: *params,
        sigma,
        c_gn,
        c_gn_relation,
        x0,
        x0_direct,
        e_q_m_sigma: energy * mass.powf(sigma),
        hs_norm_sq: n.hs * n.hs,
        mass,
    })
}

pub fn intercritical_thresholds(q: &GroundStateSolution) -> Result<ThresholdData> {
    if q.kind != ProfileKind::Q || !q.converged {
        return Err(FnlsError::Rejected("thresholds need a converged ground state Q".into()));
    }
    Ok(ThresholdData::Intercritical(intercritical_from_profile(&q.profile, &q.params)?))
}

/// `W = κ (1 + |x|²)^(-(d-2s)/2)` with `κ` chosen so `‖(-Δ)^(s/2)W‖² = ‖W‖^{s*}_{s*}` on the grid.
pub fn make_w(grid: Arc<Grid>, params: &PhysicsParams) -> Result<GroundStateSolution> {
    if params.class() != Criticality::EnergyCritical {
        return Err(FnlsError::domain(format!(
            "W needs the energy-critical power, got {:?}",
            params.class()
        )));
    }
    if params.dim < 2 || grid.dim() != params.dim {
        return Err(FnlsError::domain("W needs d >= 2 and a grid of matching dimension"));
    }
    if grid.half_length() < W_MIN_HALF_LENGTH {
        return Err(FnlsError::domain(format!(
            "W decays algebraically; half length must be >= {W_MIN_HALF_LENGTH}, got {}",
            grid.half_length()
        )));
    }
    let (d, s) = (params.d(), params.s);
    let s_star = params.sobolev_exponent().expect("d > 2s");
    let exponent = -(d - 2.0 * s) / 2.0;
    let unit = Field::from_fn(Arc::clone(&grid), |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new((1.0 + r2).powf(exponent), 0.0)
    });
    let a = unit.to_spectral().hdot_sq(s);
    let b = unit.lp_integral(s_star);
    let kappa = (a / b).powf(1.0 / (s_star - 2.0));
    let w = unit.scaled(kappa);

    let norms = ProfileNorms::of(&w, params);
    let x = norms.hs * norms.hs;
    let z = norms.lp.powf(s_star);
    let identity = (x - z).abs() / x;
    // (-Δ)^s W - W^(s*-1)
    let lhs = w.to_spectral().map_radial(|k2| k2.powf(s)).to_physical();
    let rhs = w.map(|v| v * v.norm().powf(s_star - 2.0));
    let res = lhs.combine(Complex64::new(1.0, 0.0), &rhs, Complex64::new(-1.0, 0.0))?;
    let elliptic = (res.mass() / rhs.mass()).sqrt();
    let spectral_tail = profile_tail(&w);
    Ok(GroundStateSolution {
        kind: ProfileKind::W,
        profile: w,
        params: *params,
        norms,
        pohozaev_residuals: (identity, elliptic),
        iterations: 0,
        converged: true,
        trace: Vec::new(),
        spectral_tail,
    })
}

pub fn energy_critical_thresholds(w: &GroundStateSolution) -> Result<ThresholdData> {
    if w.kind != ProfileKind::W {
        return Err(FnlsError::Rejected("energy-critical thresholds need W".into()));
    }
    let p = &w.params;
    let (d, s) = (p.d(), p.s);
    let s_star = p.sobolev_exponent().expect("d > 2s");
    let n = &w.norms;
    let x = n.hs * n.hs;
    let z = n.lp.powf(s_star);
    let e_w = 0.5 * x - z / s_star;
    let c_se = n.lp / n.hs;
    Ok(ThresholdData::EnergyCritical(EnergyCriticalThresholds {
        params: *p,
        s_star,
        c_se,
        c_se_chain: [
            n.hs.powf(-2.0 * s / d),
            n.lp.powf(-s_star * s / d),
            (s / (d * e_w)).powf(s / d),
        ],
        y0: (1.0 / c_se.powf(s_star)).powf((d - 2.0 * s) / (4.0 * s)),
        y0_direct: n.hs,
        e_w,
        hs_norm_sq: x,
    }))
}

impl ThresholdData {
    /// `E(Q)M(Q)^σ` or `E(W)`.
    pub fn energy_threshold(&self) -> f64 {
        match self {
            ThresholdData::Intercritical(t) => t.e_q_m_sigma,
            ThresholdData::EnergyCritical(t) => t.e_w,
        }
    }

    pub fn params(&self) -> &PhysicsParams {
        match self {
            ThresholdData::Intercritical(t) => &t.params,
            ThresholdData::EnergyCritical(t) => &t.params,
        }
    }

    /// `x0` or `y0`.
    pub fn gradient_threshold(&self) -> f64 {
        match self {
            ThresholdData::Intercritical(t) => t.x0,
            ThresholdData::EnergyCritical(t) => t.y0,
        }
    }
}

/// `f(x) = x²/2 - C_GN x^(d alpha/2s)/(alpha+2)` or `g(y) = y²/2 - C_SE^{s*} y^{s*}/s*`.
pub fn threshold_function(x: f64, data: &ThresholdData) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(FnlsError::domain(format!("threshold functions take x >= 0, got {x}")));
    }
    Ok(match data {
        ThresholdData::Intercritical(t) => {
            let (d, s, a) = (t.params.d(), t.params.s, t.params.alpha);
            0.5 * x * x - t.c_gn / (a + 2.0) * x.powf(d * a / (2.0 * s))
        }
        ThresholdData::EnergyCritical(t) => {
            0.5 * x * x - t.c_se.powf(t.s_star) / t.s_star * x.powf(t.s_star)
        }
    })
}
