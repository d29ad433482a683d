use hypbq_core::constants::{Exponents, TheoremConstants};
use hypbq_core::duhamel::*;
use hypbq_core::geometry::*;
use hypbq_core::picard::*;
use hypbq_core::samples::{random_forcing, random_state};
use hypbq_core::semigroup::SemigroupConfig;
use hypbq_core::stability::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const E24: Exponents = Exponents { theta: 0.5, theta_tilde: 0.75 };

fn cone(rho: f64, h_norm: f64, gamma: f64, delta: f64) -> ConeParams {
    ConeParams { gamma, delta, rho, c_tilde: 1.0, h_norm, exps: E24 }
}

#[test]
fn delta_bound_examples() {
    assert_eq!(delta_bound(1.0, 0.0, 1.0, E24, 0.0).unwrap(), 0.5);
    assert!(delta_bound(1.0, 0.2, 1.0, E24, 0.0).is_err());
    assert!(delta_bound(1.0, 0.0, 1.0, E24, 0.6).is_err());
    // denominators positive but the rate terms negative
    assert!(delta_bound(1.0, 0.1, 1.0, E24, 0.45).is_err());
    let k = TheoremConstants::new(2, 4.0, 1.0, 1.0).unwrap();
    assert_eq!(k.stability_gamma, 0.5);
    assert_eq!(k.stability_exponents, E24);
}

#[test]
fn cone_norm_examples() {
    assert_eq!(cone_operator_norm(ConeKind::A, &cone(0.0, 0.0, 1.0, 0.0)).unwrap(), 0.0);
    let v = cone_operator_norm(ConeKind::A, &cone(0.1, 0.0, 1.0, 0.0)).unwrap();
    // Γ(1/4) = 3.6256099082219083
    assert!((v - 0.2 * (3.6256099082219083 + 1.0)).abs() < 1e-12, "{v}");
    assert!((v - 0.9251).abs() < 1e-4);
    let bad = ConeParams { exps: Exponents { theta: 1.0, theta_tilde: 0.5 }, ..cone(0.1, 0.0, 1.0, 0.0) };
    assert!(cone_operator_norm(ConeKind::A, &bad).is_err());
    assert!(cone_operator_norm(ConeKind::D, &cone(0.01, 0.0, 0.5, 0.5)).is_err());
}

fn suite_data(g: &Grid, seed: u64, amp: f64) -> ProblemData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ProblemData { x0: random_state(g, &mut rng, amp), forcing: random_forcing(g, &mut rng, [amp; 3], None) }
}

#[test]
fn cone_norm_below_one_for_picard_suite() {
    let cfg = SolverConfig { t_max: 2.0, dt: 1.0 / 32.0, ..SolverConfig::default() };
    for d in [2, 3] {
        let g = build_grid(d, 6.0, 32, if d == 2 { 16 } else { 1 }).unwrap();
        let data = suite_data(&g, 4, 1e-2);
        let times: Vec<f64> = (0..cfg.n_nodes()).map(|i| i as f64 * cfg.dt).collect();
        let h = data.forcing.h_norm(&g, cfg.p, &times).unwrap();
        let sg = SemigroupConfig::for_dim(d);
        let k = TheoremConstants::new(d, cfg.p, sg.delta_d, sg.c).unwrap();
        let q = ConeParams {
            gamma: k.stability_gamma,
            delta: 0.0,
            rho: cfg.rho,
            c_tilde: k.c_tilde,
            h_norm: h,
            exps: k.stability_exponents,
        };
        let a = cone_operator_norm(ConeKind::A, &q).unwrap();
        println!("d {d}: |h| {h:.3e} |A| {a:.4}");
        assert!(a < 1.0);
    }
}

#[test]
fn volterra_zero_kernel_and_resolvent() {
    let z: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 2.0).collect();
    let psi = volterra_solve(&Kernel::exponential(0.0, 1.0), 0.1, &z).unwrap();
    assert_eq!(psi, z);

    let (lam, gam, h) = (0.5, 1.0, 1e-2);
    let n = 501;
    let z: Vec<f64> = (0..n).map(|i| (-gam * i as f64 * h).exp()).collect();
    let psi = volterra_solve(&Kernel::exponential(lam, gam), h, &z).unwrap();
    let err = psi.iter().enumerate().map(|(i, p)| (p - (-(gam - lam) * i as f64 * h).exp()).abs()).fold(0.0, f64::max);
    println!("resolvent error {err:.3e}");
    assert!(err <= 1e-4);

    assert!(matches!(volterra_solve(&Kernel::exponential(1.5, 1.0), h, &z), Err(hypbq_core::Error::NoContraction(_))));
}

#[test]
fn cone_kernel_contracts_and_is_positive() {
    let q = cone(0.01, 0.02, 0.5, 0.0);
    let op = VolterraOperator::new(Kernel::cone(ConeKind::A, &q), 1e-2, 1001).unwrap();
    let bound = cone_operator_norm(ConeKind::A, &q).unwrap();
    assert!(op.row_sum_norm() < bound, "{} {}", op.row_sum_norm(), bound);
    let z: Vec<f64> = (0..1001).map(|i| (-0.5 * i as f64 * 1e-2).exp()).collect();
    let psi = op.solve(&z).unwrap();
    assert!(psi.iter().zip(&z).all(|(p, z)| *p >= *z));
}

fn perturbed_setup() -> (Grid, Duhamel, SolverConfig, ProblemData, ConstantSet) {
    let dt = 1.0 / 32.0;
    let g = build_grid(2, 6.0, 32, 16).unwrap();
    let sg = SemigroupConfig::for_dim(2);
    let duh = Duhamel::new(&g, sg, dt).unwrap();
    let cfg = SolverConfig { t_max: 6.0, dt, picard_tol: 1e-15, ..SolverConfig::default() };
    let k = ConstantSet::theory(&TheoremConstants::new(2, cfg.p, sg.delta_d, sg.c).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let data = ProblemData {
        x0: random_state(&g, &mut rng, 2e-3),
        forcing: random_forcing(&g, &mut rng, [1e-2, 1e-5, 1e-5], None),
    };
    (g, duh, cfg, data, k)
}

#[test]
fn perturbation_decays_exponentially() {
    let (g, duh, cfg, data, k) = perturbed_setup();
    let zero = perturbation_experiment(&duh, &data, &State::zeros(&g), &cfg, &k).unwrap();
    assert!(zero.trivially_stable && zero.passes() && zero.fit.is_none());

    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let dx = random_state(&g, &mut rng, 1e-3);
    let full = perturbation_experiment(&duh, &data, &dx, &cfg, &k).unwrap();
    let half = perturbation_experiment(&duh, &data, &dx.clone().scaled(0.5), &cfg, &k).unwrap();
    let fit = full.fit.unwrap();
    println!(
        "delta {:.4} R2 {:.5} C_fit {:.3e} |dx| {:.3e} bound {:?} err {:?} iters {}",
        fit.delta,
        fit.r_squared,
        full.c_fit.unwrap(),
        full.perturbation_norm,
        full.delta_bound,
        full.delta_bound_error,
        full.perturbed.iterations
    );
    assert!(full.passes());
    assert!(fit.delta > 0.0 && fit.r_squared >= 0.98);
    assert!(full.envelope_holds && full.monotone_after_transient);
    assert!(full.phi.iter().all(|p| *p >= 0.0));
    let defect = full.scaling_defect(&half, 0.5).unwrap();
    println!("halving defect {defect:.3e}");
    assert!(defect <= 0.1);
}

#[test]
fn large_perturbation_is_refused() {
    let (g, duh, cfg, data, k) = perturbed_setup();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let dx = random_state(&g, &mut rng, 1.0);
    assert!(matches!(perturbation_experiment(&duh, &data, &dx, &cfg, &k), Err(hypbq_core::Error::Hypothesis(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_bound_degenerates_to_half_gamma(gamma in 1e-3f64..10.0, theta in 0.05f64..0.95, tt in 0.05f64..0.95) {
        let e = Exponents { theta, theta_tilde: tt };
        prop_assert_eq!(delta_bound(gamma, 0.0, 1.0, e, 0.0).unwrap(), gamma / 2.0);
    }

    #[test]
    fn cone_norm_monotone(rho in 0.0f64..0.1, h in 0.0f64..0.1, dr in 1e-4f64..0.05, dh in 1e-4f64..0.05) {
        let base = cone_operator_norm(ConeKind::A, &cone(rho, h, 0.5, 0.0)).unwrap();
        prop_assert!(cone_operator_norm(ConeKind::A, &cone(rho + dr, h, 0.5, 0.0)).unwrap() > base);
        prop_assert!(cone_operator_norm(ConeKind::A, &cone(rho, h + dh, 0.5, 0.0)).unwrap() > base);
    }

    #[test]
    fn d_norm_at_most_one_when_admissible(rho in 0.0f64..0.02, h in 0.0f64..0.05, frac in 0.01f64..0.99) {
        let q = cone(rho, h, 0.5, 0.0);
        if let Ok(b) = delta_bound(q.gamma, rho, 1.0, E24, h) {
            let dn = cone_operator_norm(ConeKind::D, &ConeParams { delta: frac * b, ..q }).unwrap();
            prop_assert!(dn <= 1.0, "{}", dn);
        }
    }

    #[test]
    fn comparison_principle(seed in 0u64..1000, lam in 0.0f64..0.3, expo in 0.0f64..0.9, slack in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let k = Kernel { terms: vec![KernelTerm { lambda: lam, exponent: expo }, KernelTerm { lambda: 0.1, exponent: 0.0 }], gamma: 1.0 };
        let op = VolterraOperator::new(k, 0.02, 200).unwrap();
        prop_assume!(op.row_sum_norm() < 1.0);
        let z: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: Vec<f64> = (0..200).map(|_| slack * rng.gen_range(0.0..1.0)).collect();
        // φ = solution with a smaller source, so φ ≤ Aφ + z
        let zm: Vec<f64> = z.iter().zip(&s).map(|(a, b)| a - b).collect();
        let phi = op.solve(&zm).unwrap();
        let aphi = op.apply(&phi).unwrap();
        for i in 0..200 {
            prop_assert!(phi[i] <= aphi[i] + z[i] + 1e-12);
        }
        let psi = op.solve(&z).unwrap();
        for i in 0..200 {
            prop_assert!(psi[i] - phi[i] >= -1e-10);
        }
        prop_assert!(psi.iter().all(|x| *x >= 0.0));
    }
}
