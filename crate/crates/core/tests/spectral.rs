use std::f64::consts::PI;
use std::sync::Arc;

use fnls_core::field::{rescale, Field, NormKind, Symbol};
use fnls_core::invariants::{classify_criticality, conserved_report, lwp_exponents, LwpMode};
use fnls_core::quadrature::MQuadrature;
use fnls_core::{Criticality, Grid, PhysicsParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn random_field(grid: &Arc<Grid>, raw: &[(f64, f64)]) -> Field {
    Field::new(Arc::clone(grid), raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_abs(a: &Field) -> f64 {
    a.values().iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn values_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

#[test]
fn random_round_trip() {
    let g = Grid::new(2, 32, 3.0).unwrap();
    let raw: Vec<(f64, f64)> = (0..g.len()).map(|i| ((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect();
    let u = random_field(&g, &raw);
    let back = u.to_spectral().to_physical();
    assert!(max_abs_diff(&u, &back) <= 1e-12 * max_abs(&u));
}

#[test]
fn zero_field_norms_vanish() {
    let u = Field::zeros(Grid::new(1, 32, 5.0).unwrap());
    for kind in [NormKind::Lp(2.0), NormKind::Lp(4.5), NormKind::Hdot(0.7), NormKind::H(1.0)] {
        assert_eq!(u.norm(kind).unwrap(), 0.0);
    }
}

#[test]
fn rescale_examples() {
    let p = PhysicsParams::new(1, 0.6, 3.0).unwrap();
    let g = Grid::new(1, 512, 20.0).unwrap();
    let u = Field::gaussian(Arc::clone(&g), 1.0, 1.0, &[0.0]);

    let same = rescale(&u, 1.0, &p).unwrap();
    assert_eq!(same.field.values(), u.values());

    let r = rescale(&u, 2.0, &p).unwrap();
    let ratio = r.field.norm(NormKind::Lp(2.0)).unwrap() / u.norm(NormKind::Lp(2.0)).unwrap();
    assert!(rel_diff(ratio, 2f64.powf(2.0 * p.s / p.alpha - 0.5)) <= 1e-10);

    // s_c invariance; the carrier keeps the spectrum away from ξ = 0
    let v = Field::from_fn(g, |x| Complex64::from_polar((-x[0] * x[0]).exp(), 6.0 * x[0]));
    let sc = p.critical_exponent();
    let rv = rescale(&v, 2.0, &p).unwrap().field;
    assert!(rel_diff(rv.norm(NormKind::Hdot(sc)).unwrap(), v.norm(NormKind::Hdot(sc)).unwrap()) <= 1e-8);
}

#[test]
fn mass_critical_k_is_s_times_energy() {
    let p = PhysicsParams::new(1, 0.7, 2.8).unwrap();
    let u = Field::gaussian(Grid::new(1, 256, 15.0).unwrap(), 1.7, 1.3, &[0.4]);
    let rep = conserved_report(&u, &p);
    assert!(rel_diff(rep.k, p.s * rep.energy) <= 1e-12);
}

#[test]
fn energy_critical_class_has_zero_sigma() {
    let p = PhysicsParams::new(2, 0.75, 6.0).unwrap();
    let c = classify_criticality(&p);
    assert_eq!(c.class, Criticality::EnergyCritical);
    assert_eq!(c.sigma, Some(0.0));
    let mc = classify_criticality(&PhysicsParams::new(1, 0.7, 2.8).unwrap());
    assert_eq!(mc.sigma, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plancherel(raw in values_strategy(128)) {
        let g = Grid::new(1, 128, 7.0).unwrap();
        let u = random_field(&g, &raw);
        prop_assert!(rel_diff(u.mass(), u.to_spectral().l2_sq()) <= 1e-12);
    }

    #[test]
    fn multiplier_linearity(
        raw_u in values_strategy(64),
        raw_v in values_strategy(64),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
        beta in 0.0..1.5f64,
        m in 0.1..5.0f64,
    ) {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let (u, v) = (random_field(&g, &raw_u), random_field(&g, &raw_v));
        let (ca, cb) = (Complex64::new(a, 0.3 * b), Complex64::new(b, -0.2 * a));
        for sym in [Symbol::FracLaplacian { beta }, Symbol::Resolvent { m }, Symbol::Gradient { axis: 0 }] {
            let lhs = u.combine(ca, &v, cb).unwrap().apply_multiplier(sym).unwrap();
            let rhs = u.apply_multiplier(sym).unwrap().combine(ca, &v.apply_multiplier(sym).unwrap(), cb).unwrap();
            let scale = max_abs(&lhs).max(1.0);
            prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * scale);
        }
    }

    #[test]
    fn fractional_laplacian_composes(raw in values_strategy(64), s in 0.5..1.0f64) {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let u = random_field(&g, &raw);
        let twice = u
            .apply_multiplier(Symbol::FracLaplacian { beta: s })
            .unwrap()
            .apply_multiplier(Symbol::FracLaplacian { beta: s })
            .unwrap();
        let once = u.apply_multiplier(Symbol::FracLaplacian { beta: 2.0 * s }).unwrap();
        prop_assert!(max_abs_diff(&twice, &once) <= 1e-12 * max_abs(&once));
    }

    #[test]
    fn half_laplacian_is_self_adjoint(raw_u in values_strategy(256), raw_v in values_strategy(256), s in 0.5..1.0f64) {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let (u, v) = (random_field(&g, &raw_u), random_field(&g, &raw_v));
        let sym = Symbol::FracLaplacian { beta: s / 2.0 };
        let left = u.apply_multiplier(sym).unwrap().inner(&v).unwrap();
        let right = u.inner(&v.apply_multiplier(sym).unwrap()).unwrap();
        prop_assert!((left - right).norm() <= 1e-12 * left.norm().max(1.0));
    }

    #[test]
    fn scaling_law(
        s in 0.55..0.95f64,
        alpha_over in 1.0..2.0f64,
        amplitude in 0.5..2.0f64,
        carrier in 5.5..7.0f64,
        which in 0usize..4,
    ) {
        let p = PhysicsParams::new(1, s, 4.0 * s * alpha_over).unwrap();
        let g = Grid::new(1, 512, 20.0).unwrap();
        let u = Field::from_fn(g, |x| Complex64::from_polar(amplitude * (-x[0] * x[0]).exp(), carrier * x[0]));
        let nu = [0.0, 0.5, p.critical_exponent(), s][which];
        let r = rescale(&u, 2.0, &p).unwrap();
        prop_assert!(!r.accuracy_warning);
        let ratio = r.field.norm(NormKind::Hdot(nu)).unwrap() / u.norm(NormKind::Hdot(nu)).unwrap();
        prop_assert!(rel_diff(ratio, 2f64.powf(nu + 2.0 * s / p.alpha - 0.5)) <= 1e-8);
    }

    #[test]
    fn k_identity(raw in values_strategy(128), s in 0.55..0.95f64, alpha in 0.5..6.0f64) {
        let p = PhysicsParams::new(1, s, alpha).unwrap();
        let u = random_field(&Grid::new(1, 128, 6.0).unwrap(), &raw);
        prop_assert!(conserved_report(&u, &p).k_identity_residual(&p) <= 1e-12);
    }

    #[test]
    fn lwp_pairs_are_fractional_admissible(s in 0.55..0.95f64, alpha_over in 1.05..3.0f64, gamma_frac in 0.05..0.95f64) {
        let d = 2usize;
        let p = PhysicsParams::new(d, s, 4.0 * s / d as f64 * alpha_over).unwrap();
        if let Ok((pp, q)) = lwp_exponents(&p, gamma_frac * d as f64 / 2.0, LwpMode::RadialSubcritical) {
            prop_assert!((2.0 * s / pp + d as f64 / q - d as f64 / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sigma_sign_matches_class(d in 1usize..=3, s in 0.55..0.95f64, alpha in 0.2..12.0f64) {
        let p = PhysicsParams::new(d, s, alpha).unwrap();
        let c = classify_criticality(&p);
        match c.sigma {
            Some(sigma) if sigma > 0.0 => prop_assert_eq!(c.class, Criticality::Intercritical),
            Some(0.0) => prop_assert_eq!(c.class, Criticality::EnergyCritical),
            _ => prop_assert!(!matches!(c.class, Criticality::Intercritical | Criticality::EnergyCritical)),
        }
    }

    #[test]
    fn symbol_oracle(s in prop::sample::select(vec![0.55, 0.7, 0.9]), log_x in -2.0..2.0f64) {
        let q = MQuadrature::build(s, 256).unwrap();
        let x = 10f64.powf(log_x);
        prop_assert!(rel_diff(q.symbol(x), x.powf(s)) <= 1e-8);
    }
}

#[test]
fn gradient_symbol_on_plane_wave() {
    let g = Grid::new(1, 32, PI).unwrap();
    let u = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, 3.0 * x[0]));
    let du = u.apply_multiplier(Symbol::Gradient { axis: 0 }).unwrap();
    let expect = u.map(|v| Complex64::new(0.0, 3.0) * v);
    assert!(max_abs_diff(&du, &expect) <= 1e-12);
}
