use approx::assert_relative_eq;
use gauss_quad::GaussLegendre;
use hypbq_core::geometry::*;
use hypbq_core::semigroup::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn radial_bump(g: &Grid, c: f64, w: f64) -> ScalarField {
    ScalarField::from_fn(g, |t, _| (-((t - c) / w).powi(2)).exp())
}

fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).lp_norm(2.0).unwrap() / b.lp_norm(2.0).unwrap()
}

#[test]
fn h3_kernel_mass() {
    let gl = GaussLegendre::new(40.try_into().unwrap());
    for t in [0.1, 1.0] {
        let edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0];
        let mass: f64 = edges
            .windows(2)
            .map(|w| gl.integrate(w[0], w[1], |r| 4.0 * PI * r.sinh().powi(2) * heat_kernel_closed(3, t, r).unwrap()))
            .sum();
        assert!((mass - 1.0).abs() < 1e-6, "t = {t}: {mass}");
    }
}

#[test]
fn h2_kernel_mass() {
    let gl = GaussLegendre::new(30.try_into().unwrap());
    let edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 20.0];
    let mass: f64 = edges
        .windows(2)
        .map(|w| gl.integrate(w[0], w[1], |r| 2.0 * PI * r.sinh() * heat_kernel_closed(2, 1.0, r).unwrap()))
        .sum();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

#[test]
fn cn_matches_kernel_h3() {
    let g = build_grid(3, 6.0, 64, 1).unwrap();
    let cfg = SemigroupConfig::for_dim(3);
    let f = radial_bump(&g, 1.0, 0.6);
    let k = scalar_semigroup_kernel_apply(&f, 0.5).unwrap();
    let c = semigroup_cn_apply_scalar(&f, 0.5, &cfg).unwrap();
    let e = rel_l2(&c, &k);
    assert!(e <= 1e-3, "relative L2 difference {e:.3e}");
}

#[test]
fn cn_matches_kernel_h2() {
    let g = build_grid(2, 6.0, 64, 8).unwrap();
    let cfg = SemigroupConfig::for_dim(2);
    let f = radial_bump(&g, 1.0, 0.6);
    let k = scalar_semigroup_kernel_apply(&f, 0.5).unwrap();
    let c = semigroup_cn_apply_scalar(&f, 0.5, &cfg).unwrap();
    let e = rel_l2(&c, &k);
    assert!(e <= 2e-3, "relative L2 difference {e:.3e}");
}

#[test]
fn kernel_apply_properties() {
    let g = build_grid(3, 6.0, 64, 1).unwrap();
    let f = radial_bump(&g, 1.5, 0.4);
    let out = scalar_semigroup_kernel_apply(&f, 0.5).unwrap();
    assert!(out.values().iter().all(|v| *v >= 0.0));
    assert_relative_eq!(out.integral(), f.integral(), max_relative = 1e-2);
    let smooth = radial_bump(&g, 1.5, 0.8);
    let near = scalar_semigroup_kernel_apply(&smooth, 1e-3).unwrap();
    assert!(rel_l2(&near, &smooth) <= 0.05);

    let g2 = build_grid(2, 6.0, 64, 8).unwrap();
    let f2 = radial_bump(&g2, 1.5, 0.4);
    let out2 = scalar_semigroup_kernel_apply(&f2, 0.5).unwrap();
    assert!(out2.values().iter().all(|v| *v >= 0.0));
    assert_relative_eq!(out2.integral(), f2.integral(), max_relative = 1e-2);
    let s2 = radial_bump(&g2, 1.5, 0.8);
    assert!(rel_l2(&scalar_semigroup_kernel_apply(&s2, 1e-3).unwrap(), &s2) <= 0.05);

    let nonradial = ScalarField::from_fn(&g2, |t, p| (-t * t).exp() * p.cos());
    assert!(scalar_semigroup_kernel_apply(&nonradial, 0.5).is_err());
    assert!(scalar_semigroup_kernel_apply(&f, 0.0).is_err());
}

#[test]
fn identity_and_block_structure() {
    let g = build_grid(2, 6.0, 32, 8).unwrap();
    let cfg = SemigroupConfig::for_dim(2);
    let sg = Semigroup::new(&g, cfg).unwrap();
    let f = radial_bump(&g, 1.0, 0.5);
    assert_eq!(sg.apply_scalar(&f, 0.0).unwrap().values(), f.values());
    let u = VectorField::from_fn(&g, |t, p| ((-t * t).exp() * p.sin(), (-t * t).exp()));
    let s = sg.apply_state(&State::new(u.clone(), ScalarField::zeros(&g), 0.0).unwrap(), 0.3).unwrap();
    assert_eq!(s.theta.sup_norm(), 0.0);
    let s = sg.apply_state(&State::new(VectorField::zeros(&g), f, 0.0).unwrap(), 0.3).unwrap();
    assert_eq!(s.u.sup_norm(), 0.0);
    assert!(sg.apply_scalar(&s.theta, -1.0).is_err());
}

#[test]
fn ricci_factor_is_exact() {
    for d in [2usize, 3] {
        let g = if d == 2 { build_grid(2, 6.0, 32, 8) } else { build_grid(3, 6.0, 32, 1) }.unwrap();
        let sg = Semigroup::new(&g, SemigroupConfig::for_dim(d)).unwrap();
        let u = VectorField::from_fn(&g, |t, p| ((-t * t).exp() * (1.0 + p.sin()), t * (-t * t).exp()));
        let t = 0.7;
        let with = sg.apply_vector_with(Generator::EbinMarsden, &u, t).unwrap();
        let without = sg.apply_vector_with(Generator::Bochner, &u, t).unwrap();
        let f = (-((d - 1) as f64) * t).exp();
        let diff = with.sub(&without.scaled(f));
        assert!(diff.sup_norm() <= 1e-10 * with.sup_norm(), "d = {d}");
    }
}

#[test]
fn semigroup_property() {
    let g = build_grid(2, 6.0, 64, 32).unwrap();
    let sg = Semigroup::new(&g, SemigroupConfig::for_dim(2)).unwrap();
    let th = ScalarField::from_fn(&g, |t, p| (-(t - 1.0).powi(2)).exp() * (1.0 + 0.5 * p.cos()));
    let u = VectorField::from_fn(&g, |t, p| ((-t * t).exp() * p.sin(), (-(t - 1.0).powi(2)).exp()));
    let s = State::new(u, th, 0.0).unwrap();
    let twice = sg.apply_state(&sg.apply_state(&s, 0.25).unwrap(), 0.25).unwrap();
    let once = sg.apply_state(&s, 0.5).unwrap();
    let e = twice.sub(&once).product_norm(2.0).unwrap() / once.product_norm(2.0).unwrap();
    assert!(e <= 1e-6, "{e:.3e}");
}

#[test]
fn positivity_and_contractivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = build_grid(2, 6.0, 64, 16).unwrap();
    let sg = Semigroup::new(&g, SemigroupConfig::for_dim(2)).unwrap();
    for _ in 0..5 {
        let (c, w) = (rng.gen_range(0.5..3.0), rng.gen_range(0.3..1.0));
        let ph = rng.gen_range(0.0..6.0);
        let f = ScalarField::from_fn(&g, |t, p| (-((t - c) / w).powi(2)).exp() * (1.0 + 0.9 * (p - ph).cos()));
        for t in [0.1, 1.0] {
            let out = sg.apply_scalar(&f, t).unwrap();
            let min = out.values().iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-12 * f.sup_norm(), "undershoot {min:.3e}");
            assert!(out.lp_norm(2.0).unwrap() <= f.lp_norm(2.0).unwrap());
        }
        let v =
            VectorField::from_fn(&g, |t, p| ((-((t - c) / w).powi(2)).exp() * p.cos(), (-((t - c) / w).powi(2)).exp()));
        for t in [0.1, 1.0] {
            let out = sg.apply_vector(&v, t).unwrap();
            assert!(out.lp_norm(2.0).unwrap() <= (-t).exp() * v.lp_norm(2.0).unwrap() * (1.0 + 1e-8));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dispersive_bound_decreasing(p in 1.0f64..4.0, dq in 0.0f64..4.0, t in 1.0f64..20.0) {
        let cfg = SemigroupConfig::for_dim(2);
        let q = p + dq;
        let a = dispersive_bound(p, q, t, &cfg, 2).unwrap();
        let b = dispersive_bound(p, q, t + 0.5, &cfg, 2).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn scalar_contractive(seed in any::<u64>(), t in 0.01f64..2.0) {
        let g = build_grid(3, 6.0, 32, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = rng.gen_range(0.5..3.0);
        let f = ScalarField::from_fn(&g, |x, _| (-(x - c).powi(2)).exp());
        let out = semigroup_cn_apply_scalar(&f, t, &SemigroupConfig::for_dim(3)).unwrap();
        prop_assert!(out.lp_norm(2.0).unwrap() <= f.lp_norm(2.0).unwrap() * (1.0 + 1e-12));
    }
}

#[test]
fn estimate_verifier() {
    for (d, no) in [(2usize, 32usize), (3, 1)] {
        let g = build_grid(d, 6.0, 64, no).unwrap();
        let cfg = SemigroupConfig::for_dim(d);
        let r = verify::verify_semigroup(&g, &cfg, &VerifyOptions::default()).unwrap();
        println!(
            "d {d} slope {:.4} K {:.4} Kk {:.4} worst {:.4} sc {:.4} scr {:.4}",
            r.slope,
            r.fitted_constant,
            r.kernel_constant,
            r.worst_ratio.iter().cloned().fold(0.0, f64::max),
            r.smoothing_constant,
            r.smoothing_constant_with_ricci
        );
        assert!(r.passed());
        assert!(r.smoothing_constant.is_finite() && r.smoothing_constant_with_ricci >= r.smoothing_constant);
    }
}
