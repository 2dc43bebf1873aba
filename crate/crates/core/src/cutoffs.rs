//! Radial cutoffs `ψ_R` and `φ_R` with derivative fields up to fourth order.

use std::sync::Arc;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FnlsError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::jet::Jet;

/// Below this distance from 0 or 1 the bump blend equals its end value to double precision.
const STEP_FLAT: f64 = 1e-3;
const THETA_PANELS: usize = 8;
const THETA_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Psi,
    Phi,
    Constant,
}

/// Smooth monotone step: 0 for `t <= 0`, 1 for `t >= 1`, built from `exp(-1/t)`.
fn step(t: Jet) -> Jet {
    let t0 = t.value();
    if t0 <= STEP_FLAT {
        return Jet::constant(0.0);
    }
    if t0 >= 1.0 - STEP_FLAT {
        return Jet::constant(1.0);
    }
    let g = |x: Jet| (-x.recip()).exp();
    let a = g(t);
    let b = g(Jet::constant(1.0) - t);
    a / (a + b)
}

fn step_value(t: f64) -> f64 {
    step(Jet::constant(t)).value()
}

/// `θ(ρ)` of the `φ` profile for `ρ ∈ [1, 2]`: `1 + ∫_1^ρ 2t χ(t) dt` with `χ = 1 - step(t - 1)`.
fn theta_bridge(rho: f64, rule: &GaussLegendre) -> f64 {
    let width = (rho - 1.0) / THETA_PANELS as f64;
    let integral: f64 = (0..THETA_PANELS)
        .map(|p| {
            let a = 1.0 + width * p as f64;
            rule.integrate(a, a + width, |t| 2.0 * t * (1.0 - step_value(t - 1.0)))
        })
        .sum();
    1.0 + integral
}

#[derive(Debug, Clone, Copy)]
enum Profile {
    Psi { radius: f64 },
    Phi { radius: f64, terminal: f64 },
    Constant { value: f64 },
}

impl Profile {
    /// `[F, F', F'', F''', F'''']` at distance `r`; the value of `F` in the `φ` bridge
    /// is filled in separately because it needs a quadrature.
    fn derivatives(&self, r: f64) -> [f64; 5] {
        match *self {
            Profile::Constant { value } => [value, 0.0, 0.0, 0.0, 0.0],
            Profile::Psi { radius } => {
                let t = Jet::variable(r).scale(2.0 / radius) - Jet::constant(1.0);
                step(t).derivatives()
            }
            Profile::Phi { radius, terminal } => {
                if r <= radius {
                    [r * r, 2.0 * r, 2.0, 0.0, 0.0]
                } else if r >= 2.0 * radius {
                    [radius * radius * terminal, 0.0, 0.0, 0.0, 0.0]
                } else {
                    // jet of F'(r) = R θ'(r/R) = 2 r χ(r/R)
                    let rj = Jet::variable(r);
                    let rho = rj.scale(1.0 / radius);
                    let chi = Jet::constant(1.0) - step(rho - Jet::constant(1.0));
                    let d1 = (rj * chi).scale(2.0).derivatives();
                    [f64::NAN, d1[0], d1[1], d1[2], d1[3]]
                }
            }
        }
    }

    /// Region where the derivatives are not given by a closed form.
    fn in_transition(&self, r: f64) -> bool {
        match *self {
            Profile::Constant { .. } => false,
            Profile::Psi { radius } => r > radius / 2.0 && r < radius,
            Profile::Phi { radius, .. } => r > radius && r < 2.0 * radius,
        }
    }
}

/// A real weight sampled on a grid with its derivatives.
#[derive(Debug, Clone)]
pub struct Weight {
    grid: Arc<Grid>,
    radius: f64,
    kind: WeightKind,
    profile: Profile,
    value: Vec<f64>,
    grad: Vec<Vec<f64>>,
    laplacian: Vec<f64>,
    hessian: Vec<Vec<f64>>,
    bilaplacian: Option<Vec<f64>>,
    /// Pointwise Frobenius norms of `∇^k` for `k = 0..=4`.
    tensor_norms: Vec<[f64; 5]>,
    profile_terminal: f64,
}

/// Index of `(j, k)`, `j <= k`, in the packed upper triangle.
pub fn packed_index(dim: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    j * dim - j * (j + 1) / 2 + k
}

impl Weight {
    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        Weight::build(grid, 0.0, WeightKind::Constant, Profile::Constant { value }, value)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn grad(&self, axis: usize) -> &[f64] {
        &self.grad[axis]
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn hessian(&self, j: usize, k: usize) -> &[f64] {
        &self.hessian[packed_index(self.grid.dim(), j, k)]
    }

    pub fn bilaplacian(&self) -> Option<&[f64]> {
        self.bilaplacian.as_deref()
    }

    /// Highest derivative order available (2 or 4).
    pub fn max_order(&self) -> usize {
        if self.bilaplacian.is_some() {
            4
        } else {
            2
        }
    }

    /// Copy without the fourth-order data, for callers that only need `V`-side quantities.
    pub fn truncated(&self) -> Weight {
        Weight {
            bilaplacian: None,
            ..self.clone()
        }
    }

    /// Plateau value of the radial profile in units of `R^2` (`θ(2)` for `φ_R`, 1 for `ψ_R`).
    pub fn profile_terminal(&self) -> f64 {
        self.profile_terminal
    }

    /// `sup |∇^k w|` over the grid (Frobenius norm of the tensor), `k = 0..=4`.
    pub fn sup_norm(&self, k: usize) -> f64 {
        self.tensor_norms.iter().map(|t| t[k]).fold(0.0, f64::max)
    }

    /// `‖∇w‖_{W^{1,∞}} = ‖∇w‖_∞ + ‖∇²w‖_∞`.
    pub fn grad_w1inf(&self) -> f64 {
        self.sup_norm(1) + self.sup_norm(2)
    }

    pub fn pointwise_norms(&self) -> &[[f64; 5]] {
        &self.tensor_norms
    }

    /// Radial derivatives `[F, F', F'', F''', F'''']` of the profile at distance `r`.
    pub fn radial_derivatives(&self, r: f64) -> [f64; 5] {
        let mut d = self.profile.derivatives(r);
        if d[0].is_nan() {
            let rule = GaussLegendre::new(THETA_NODES).expect("valid Gauss-Legendre degree");
            d[0] = self.radius * self.radius * theta_bridge(r / self.radius, &rule);
        }
        d
    }

    pub fn value_field(&self) -> Field {
        let values = self.value.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Field::new(Arc::clone(&self.grid), values).expect("weight lives on its grid")
    }

    fn build(grid: Arc<Grid>, radius: f64, kind: WeightKind, profile: Profile, terminal: f64) -> Self {
        let dim = grid.dim();
        let len = grid.len();
        let npack = dim * (dim + 1) / 2;
        let rule = GaussLegendre::new(THETA_NODES).expect("valid Gauss-Legendre degree");
        let mut value = vec![0.0; len];
        let mut grad = vec![vec![0.0; len]; dim];
        let mut laplacian = vec![0.0; len];
        let mut hessian = vec![vec![0.0; len]; npack];
        let mut bilaplacian = vec![0.0; len];
        let mut tensor_norms = vec![[0.0; 5]; len];

        for flat in 0..len {
            let x = grid.position(flat);
            let r = grid.radius(flat);
            let d = profile.derivatives(r);
            let f0 = if d[0].is_nan() {
                radius * radius * theta_bridge(r / radius, &rule)
            } else {
                d[0]
            };
            let (a, b, c, e) = radial_coefficients(&profile, r, &d);
            let t = RadialTensors::new(dim, &x, a, b, c, e);

            value[flat] = f0;
            for j in 0..dim {
                grad[j][flat] = t.first(j);
                for k in j..dim {
                    hessian[packed_index(dim, j, k)][flat] = t.second(j, k);
                }
            }
            laplacian[flat] = (0..dim).map(|j| t.second(j, j)).sum();
            bilaplacian[flat] = (0..dim)
                .flat_map(|j| (0..dim).map(move |k| (j, k)))
                .map(|(j, k)| t.fourth(j, j, k, k))
                .sum();
            tensor_norms[flat] = t.frobenius(f0);
        }

        Weight {
            grid,
            radius,
            kind,
            profile,
            value,
            grad,
            laplacian,
            hessian,
            bilaplacian: Some(bilaplacian),
            tensor_norms,
            profile_terminal: terminal,
        }
    }
}

/// `a = F'/r`, `b = a'/r`, `c = b'/r`, `e = c'/r`, so that `∂_j w = a x_j` and so on.
fn radial_coefficients(profile: &Profile, r: f64, d: &[f64; 5]) -> (f64, f64, f64, f64) {
    match *profile {
        Profile::Phi { radius, .. } if r <= radius => return (2.0, 0.0, 0.0, 0.0),
        _ => {}
    }
    if !profile.in_transition(r) {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let (f1, f2, f3, f4) = (d[1], d[2], d[3], d[4]);
    let a = f1 / r;
    let b = (f2 - a) / (r * r);
    let c = (f3 - 3.0 * f2 / r + 3.0 * f1 / (r * r)) / r.powi(3);
    let e = (f4 - 6.0 * f3 / r + 15.0 * f2 / (r * r) - 15.0 * f1 / r.powi(3)) / r.powi(4);
    (a, b, c, e)
}

struct RadialTensors {
    dim: usize,
    x: [f64; 3],
    a: f64,
    b: f64,
    c: f64,
    e: f64,
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl RadialTensors {
    fn new(dim: usize, x: &[f64; 3], a: f64, b: f64, c: f64, e: f64) -> Self {
        RadialTensors { dim, x: *x, a, b, c, e }
    }

    fn first(&self, j: usize) -> f64 {
        self.a * self.x[j]
    }

    fn second(&self, j: usize, k: usize) -> f64 {
        self.b * self.x[j] * self.x[k] + self.a * delta(j, k)
    }

    fn third(&self, j: usize, k: usize, l: usize) -> f64 {
        let x = &self.x;
        self.c * x[j] * x[k] * x[l]
            + self.b * (delta(j, k) * x[l] + delta(j, l) * x[k] + delta(k, l) * x[j])
    }

    fn fourth(&self, j: usize, k: usize, l: usize, m: usize) -> f64 {
        let x = &self.x;
        self.e * x[j] * x[k] * x[l] * x[m]
            + self.c
                * (delta(j, k) * x[l] * x[m]
                    + delta(j, l) * x[k] * x[m]
                    + delta(j, m) * x[k] * x[l]
                    + delta(k, l) * x[j] * x[m]
                    + delta(k, m) * x[j] * x[l]
                    + delta(l, m) * x[j] * x[k])
            + self.b * (delta(j, k) * delta(l, m) + delta(j, l) * delta(k, m) + delta(j, m) * delta(k, l))
    }

    fn frobenius(&self, value: f64) -> [f64; 5] {
        let n = self.dim;
        let mut s = [value * value, 0.0, 0.0, 0.0, 0.0];
        for j in 0..n {
            s[1] += self.first(j).powi(2);
            for k in 0..n {
                s[2] += self.second(j, k).powi(2);
                for l in 0..n {
                    s[3] += self.third(j, k, l).powi(2);
                    for m in 0..n {
                        s[4] += self.fourth(j, k, l, m).powi(2);
                    }
                }
            }
        }
        s.map(f64::sqrt)
    }
}

fn check_radius(grid: &Grid, radius: f64) -> Result<()> {
    if !(radius > 1.0) {
        return Err(FnlsError::domain(format!("cutoff radius must exceed 1, got {radius}")));
    }
    if !(2.0 * radius < grid.half_length()) {
        return Err(FnlsError::domain(format!(
            "2R = {} must stay below the half length {} to avoid wrap-around",
            2.0 * radius,
            grid.half_length()
        )));
    }
    Ok(())
}

/// `ψ_R(x) = ϑ(|x|/R)` with `ϑ = 0` on `[0, 1/2]` and `ϑ = 1` on `[1, ∞)`.
pub fn make_psi(grid: Arc<Grid>, radius: f64) -> Result<Weight> {
    check_radius(&grid, radius)?;
    Ok(Weight::build(grid, radius, WeightKind::Psi, Profile::Psi { radius }, 1.0))
}

/// `ψ_R` for the exterior-mass comparison only, where `R < L` suffices: `ψ_R = 1` near the
/// box faces, so the periodic extension stays smooth.
pub(crate) fn psi_within_box(grid: Arc<Grid>, radius: f64) -> Result<Weight> {
    if !(radius > 0.0 && radius < grid.half_length()) {
        return Err(FnlsError::domain(format!(
            "exterior radius must lie in (0, {}), got {radius}",
            grid.half_length()
        )));
    }
    Ok(Weight::build(grid, radius, WeightKind::Psi, Profile::Psi { radius }, 1.0))
}

/// `φ_R(x) = R² θ(|x|/R)` with `θ' = 2ρχ(ρ)`, so `θ = ρ²` on `[0, 1]` and constant beyond 2.
pub fn make_phi(grid: Arc<Grid>, radius: f64) -> Result<Weight> {
    check_radius(&grid, radius)?;
    let rule = GaussLegendre::new(THETA_NODES).expect("valid Gauss-Legendre degree");
    let terminal = theta_bridge(2.0, &rule);
    Ok(Weight::build(
        grid,
        radius,
        WeightKind::Phi,
        Profile::Phi { radius, terminal },
        terminal,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightPropertyReport {
    pub radius: f64,
    /// `min (2 - θ''(r/R))` over the grid.
    pub min_theta_second: f64,
    /// `min (2 - φ_R'(r)/r)`.
    pub min_radial_slope: f64,
    /// `min (2d - Δφ_R)`.
    pub min_laplacian: f64,
    /// `max |∇φ_R|` and `max |∇²φ_R|` over `|x| >= 2R`.
    pub grad_outside: f64,
    pub hessian_outside: f64,
    /// `max |∇³φ_R|` over `|x| < R`.
    pub third_inside: f64,
    /// `‖∇^k φ_R‖_∞ R^(k-2)` for `k = 0..=4`.
    pub scaled_norms: [f64; 5],
    /// Largest deviation of the stored Hessian from its radial decomposition (away from 0).
    pub hessian_radial_residual: f64,
    pub profile_terminal: f64,
}

pub fn verify_weight_properties(weight: &Weight) -> Result<WeightPropertyReport> {
    if weight.kind != WeightKind::Phi {
        return Err(FnlsError::domain("weight property report is defined for φ_R only"));
    }
    let grid = &weight.grid;
    let dim = grid.dim();
    let r_big = weight.radius;
    let mut rep = WeightPropertyReport {
        radius: r_big,
        min_theta_second: f64::INFINITY,
        min_radial_slope: f64::INFINITY,
        min_laplacian: f64::INFINITY,
        grad_outside: 0.0,
        hessian_outside: 0.0,
        third_inside: 0.0,
        scaled_norms: [0.0; 5],
        hessian_radial_residual: 0.0,
        profile_terminal: weight.profile_terminal,
    };
    for flat in 0..grid.len() {
        let r = grid.radius(flat);
        let d = weight.profile.derivatives(r);
        let norms = weight.tensor_norms[flat];
        rep.min_theta_second = rep.min_theta_second.min(2.0 - d[2]);
        let slope = if r > 0.0 { d[1] / r } else { 2.0 };
        rep.min_radial_slope = rep.min_radial_slope.min(2.0 - slope);
        rep.min_laplacian = rep.min_laplacian.min(2.0 * dim as f64 - weight.laplacian[flat]);
        if r >= 2.0 * r_big {
            rep.grad_outside = rep.grad_outside.max(norms[1]);
            rep.hessian_outside = rep.hessian_outside.max(norms[2]);
        }
        if r < r_big {
            rep.third_inside = rep.third_inside.max(norms[3]);
        }
        if r > 1e-8 {
            let x = grid.position(flat);
            for j in 0..dim {
                for k in j..dim {
                    let xx = x[j] * x[k] / (r * r);
                    let expect = (delta(j, k) - xx) * d[1] / r + xx * d[2];
                    let got = weight.hessian(j, k)[flat];
                    rep.hessian_radial_residual = rep.hessian_radial_residual.max((got - expect).abs());
                }
            }
        }
    }
    for (k, v) in rep.scaled_norms.iter_mut().enumerate() {
        *v = weight.sup_norm(k) * r_big.powi(k as i32 - 2);
    }
    Ok(rep)
}
