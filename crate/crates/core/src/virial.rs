//! Auxiliary fields `u_m = c_s (-Δ+m)^(-1) u` and the localized virial identities built on them.
//!
//! Every `m`-integral is evaluated with an [`MQuadrature`]. The zero Fourier mode of `u_m`
//! is a constant `c_s c_0 / m`; its square multiplies `∫Δφ` or `∫Δ²φ`, which vanish for a
//! weight that is flat near the box edge, so that product is dropped instead of letting the
//! `m → 0` end of the rule amplify its round-off.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutoffs::Weight;
use crate::error::{FnlsError, Result};
use crate::field::{Field, Spectrum, Symbol};
use crate::params::PhysicsParams;
use crate::quadrature::{c_s, MQuadrature};

pub fn auxiliary_field(field: &Field, m: f64, s: f64) -> Result<Field> {
    if !(m > 0.0) {
        return Err(FnlsError::domain(format!("m must be positive, got {m}")));
    }
    Ok(field
        .to_spectral()
        .apply(Symbol::Resolvent { m })?
        .to_physical()
        .scaled(c_s(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `∫_0^∞ m^s ‖∇u_m‖² dm` against `s ‖(-Δ)^(s/2) u‖²`.
pub fn auxiliary_identity_check(
    field: &Field,
    params: &PhysicsParams,
    quad: &MQuadrature,
) -> Result<IdentityCheck> {
    check_quadrature(params, quad)?;
    let sp = field.to_spectral();
    let s = params.s;
    let cs2 = c_s(s).powi(2);
    let lhs = quad.integrate(|m| {
        // ‖∇u_m‖² by Plancherel
        m.powf(s) * cs2 * sp.map_radial(|k2| k2.sqrt() / (k2 + m)).l2_sq()
    });
    let rhs = s * sp.hdot_sq(s);
    let residual = if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE)
    };
    Ok(IdentityCheck { lhs, rhs, residual })
}

fn check_quadrature(params: &PhysicsParams, quad: &MQuadrature) -> Result<()> {
    if (params.s - quad.s()).abs() > 1e-15 {
        return Err(FnlsError::structural(format!(
            "quadrature built for s = {}, parameters have s = {}",
            quad.s(),
            params.s
        )));
    }
    Ok(())
}

fn check_weight(field: &Field, weight: &Weight, order: usize) -> Result<()> {
    if !field.grid().same_shape(weight.grid()) {
        return Err(FnlsError::structural("weight and field live on different grids"));
    }
    if weight.max_order() < order {
        return Err(FnlsError::structural(format!(
            "weight provides derivatives up to order {}, {order} required",
            weight.max_order()
        )));
    }
    Ok(())
}

/// The four `m`-integrals appearing in the virial identities and lemma bounds.
#[derive(Debug, Clone, Copy, Default)]
struct MIntegrals {
    /// `∫ m^s ∫ Δφ |u_m|²`
    laplacian: f64,
    /// `∫ m^s ∫ ū_m ∇φ·∇u_m`
    transport: Complex64,
    /// `∫ m^s ∫ Δ²φ |u_m|²`
    bilaplacian: f64,
    /// `Σ_jk ∫ m^s ∫ ∂²_jk φ ∂_j ū_m ∂_k u_m`
    hessian: f64,
}

fn m_integrals(field: &Field, weight: &Weight, quad: &MQuadrature, fourth: bool) -> MIntegrals {
    let grid = field.grid();
    let dim = grid.dim();
    let s = quad.s();
    let cs = c_s(s);
    let vol = grid.cell_volume();
    let sp = field.to_spectral();
    let c0 = sp.coeffs()[0];
    let mut zero_free = sp.coeffs().to_vec();
    zero_free[0] = Complex64::new(0.0, 0.0);
    let base = Spectrum::new(std::sync::Arc::clone(grid), zero_free).expect("same grid");
    let gradients: Vec<Spectrum> = (0..dim)
        .map(|a| base.apply(Symbol::Gradient { axis: a }).expect("axis in range"))
        .collect();
    let lap = weight.laplacian();
    let bilap = weight.bilaplacian();

    let per_node: Vec<MIntegrals> = quad
        .nodes()
        .par_iter()
        .map(|&(m, w)| {
            let resolve = |spec: &Spectrum| spec.map_radial(|k2| cs / (k2 + m)).to_physical();
            let um = resolve(&base);
            let grads: Vec<Field> = gradients.iter().map(resolve).collect();
            let z0 = c0 * (cs / m);
            let weight_m = w * m.powf(s);

            let mut lap_sum = 0.0;
            let mut bilap_sum = 0.0;
            let mut transport = Complex64::new(0.0, 0.0);
            let mut hess_sum = 0.0;
            for (i, &v) in um.values().iter().enumerate() {
                // |u_m|² without the constant |z0|² part
                let dens = v.norm_sqr() + 2.0 * (z0.conj() * v).re;
                lap_sum += lap[i] * dens;
                if fourth {
                    if let Some(b) = bilap {
                        bilap_sum += b[i] * dens;
                    }
                }
                let conj_u = (v + z0).conj();
                let mut flux = Complex64::new(0.0, 0.0);
                for (a, g) in grads.iter().enumerate() {
                    flux += weight.grad(a)[i] * g.values()[i];
                }
                transport += conj_u * flux;
                if fourth {
                    for j in 0..dim {
                        for k in 0..dim {
                            let gj = grads[j].values()[i];
                            let gk = grads[k].values()[i];
                            hess_sum += weight.hessian(j, k)[i] * (gj.conj() * gk).re;
                        }
                    }
                }
            }
            MIntegrals {
                laplacian: weight_m * lap_sum * vol,
                transport: transport * (weight_m * vol),
                bilaplacian: weight_m * bilap_sum * vol,
                hessian: weight_m * hess_sum * vol,
            }
        })
        .collect();

    // fixed node order keeps the reduction deterministic
    per_node.iter().fold(MIntegrals::default(), |acc, t| MIntegrals {
        laplacian: acc.laplacian + t.laplacian,
        transport: acc.transport + t.transport,
        bilaplacian: acc.bilaplacian + t.bilaplacian,
        hessian: acc.hessian + t.hessian,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialTerms {
    pub bilaplacian_term: f64,
    pub hessian_term: f64,
    pub nonlinear_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialReport {
    #[serde(rename = "V_value")]
    pub v_value: f64,
    #[serde(rename = "M_value")]
    pub m_value: f64,
    #[serde(rename = "dV_dt_rhs")]
    pub dv_dt_rhs: f64,
    /// Imaginary part of the assembled `dV/dt` expression, which should vanish.
    #[serde(rename = "dV_dt_imag")]
    pub dv_dt_imag: f64,
    #[serde(rename = "dM_dt_rhs")]
    pub dm_dt_rhs: f64,
    pub term_breakdown: VirialTerms,
}

/// `V_φ(u) = ∫ φ |u|²`.
pub fn v_action(field: &Field, weight: &Weight) -> f64 {
    field.weighted_mass(weight.value())
}

/// `M_φ(u) = 2 Im ∫ ū ∇φ·∇u`.
pub fn m_action(field: &Field, weight: &Weight) -> f64 {
    let sp = field.to_spectral();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..field.grid().dim() {
        let g = sp.apply(Symbol::Gradient { axis: a }).expect("axis in range").to_physical();
        for (i, (u, du)) in field.values().iter().zip(g.values()).enumerate() {
            acc += u.conj() * weight.grad(a)[i] * du;
        }
    }
    2.0 * acc.im * field.grid().cell_volume()
}

/// Right-hand side of the first localized virial identity, as `(real, imaginary)` parts.
pub fn dv_dt(field: &Field, weight: &Weight, quad: &MQuadrature) -> Result<(f64, f64)> {
    check_weight(field, weight, 2)?;
    let mi = m_integrals(field, weight, quad, false);
    let z = Complex64::new(0.0, -1.0) * mi.laplacian + Complex64::new(0.0, -2.0) * mi.transport;
    Ok((z.re, z.im))
}

pub fn virial_actions(
    field: &Field,
    weight: &Weight,
    params: &PhysicsParams,
    quad: &MQuadrature,
) -> Result<VirialReport> {
    check_quadrature(params, quad)?;
    check_weight(field, weight, 4)?;
    let mi = m_integrals(field, weight, quad, true);
    let dv = Complex64::new(0.0, -1.0) * mi.laplacian + Complex64::new(0.0, -2.0) * mi.transport;

    let p = params.alpha + 2.0;
    let nonlinear: f64 = field
        .values()
        .iter()
        .zip(weight.laplacian())
        .map(|(u, l)| l * u.norm().powf(p))
        .sum::<f64>()
        * field.grid().cell_volume();
    let terms = VirialTerms {
        bilaplacian_term: -mi.bilaplacian,
        hessian_term: 4.0 * mi.hessian,
        nonlinear_term: -2.0 * params.alpha / p * nonlinear,
    };
    Ok(VirialReport {
        v_value: v_action(field, weight),
        m_value: m_action(field, weight),
        dv_dt_rhs: dv.re,
        dv_dt_imag: dv.im,
        dm_dt_rhs: terms.bilaplacian_term + terms.hessian_term + terms.nonlinear_term,
        term_breakdown: terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl BoundRatio {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        BoundRatio { lhs, rhs, ratio }
    }
}

/// Left sides, norm products and their ratios for the four estimates and the `dV/dt` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaBounds {
    /// `|∫ ū ∇φ·∇u|` against `‖∇φ‖_{W^{1,∞}} (‖|∇|^½u‖² + ‖u‖ ‖|∇|^½u‖)`.
    pub transport: BoundRatio,
    /// `|∫ m^s ∫ Δφ|u_m|²|` against `‖Δφ‖^(2s-1) ‖∇φ‖^(2-2s) ‖u‖²`.
    pub laplacian: BoundRatio,
    /// `|∫ m^s ∫ ū_m ∇φ·∇u_m|` against `‖∇φ‖_{W^{1,∞}} ‖u‖²_{H^½}`.
    pub auxiliary_transport: BoundRatio,
    /// `|∫ m^s ∫ Δ²φ|u_m|²|` against `‖Δ²φ‖^s ‖Δφ‖^(1-s) ‖u‖²`.
    pub bilaplacian: BoundRatio,
    /// `|dV_φ/dt|` against `‖∇φ‖_{W^{1,∞}} ‖u‖²_{H^s}`.
    pub virial_rate: BoundRatio,
}

pub fn lemma_bound_report(
    field: &Field,
    weight: &Weight,
    params: &PhysicsParams,
    quad: &MQuadrature,
) -> Result<LemmaBounds> {
    check_quadrature(params, quad)?;
    check_weight(field, weight, 4)?;
    let s = params.s;
    let mi = m_integrals(field, weight, quad, true);
    let sp = field.to_spectral();
    let mass = sp.l2_sq();
    let half_sq = sp.hdot_sq(0.5);
    let h_half_sq = sp.h_sq(0.5);
    let hs_sq = sp.h_sq(s);

    let grad_inf = weight.sup_norm(1);
    let w1inf = weight.grad_w1inf();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let lap_inf = sup(weight.laplacian());
    let bilap_inf = sup(weight.bilaplacian().unwrap_or(&[]));

    let direct = {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..field.grid().dim() {
            let g = sp.apply(Symbol::Gradient { axis: a })?.to_physical();
            for (i, (u, du)) in field.values().iter().zip(g.values()).enumerate() {
                acc += u.conj() * weight.grad(a)[i] * du;
            }
        }
        acc * field.grid().cell_volume()
    };
    let dv = (Complex64::new(0.0, -1.0) * mi.laplacian + Complex64::new(0.0, -2.0) * mi.transport).re;

    Ok(LemmaBounds {
        transport: BoundRatio::new(
            direct.norm(),
            w1inf * (half_sq + mass.sqrt() * half_sq.sqrt()),
        ),
        laplacian: BoundRatio::new(
            mi.laplacian.abs(),
            lap_inf.powf(2.0 * s - 1.0) * grad_inf.powf(2.0 - 2.0 * s) * mass,
        ),
        auxiliary_transport: BoundRatio::new(mi.transport.norm(), w1inf * h_half_sq),
        bilaplacian: BoundRatio::new(
            mi.bilaplacian.abs(),
            bilap_inf.powf(s) * lap_inf.powf(1.0 - s) * mass,
        ),
        virial_rate: BoundRatio::new(dv.abs(), w1inf * hs_sq),
    })
}
