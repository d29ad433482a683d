use hypbq_core::duhamel::*;
use hypbq_core::geometry::*;
use hypbq_core::periodic::*;
use hypbq_core::picard::*;
use hypbq_core::samples::random_state;
use hypbq_core::semigroup::SemigroupConfig;
use hypbq_core::stability::perturbation_experiment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1.0 / 32.0;

fn grid() -> Grid {
    build_grid(2, 6.0, 32, 16).unwrap()
}

fn synthetic(g: &Grid, r: f64, n: usize) -> (State, Vec<State>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let limit = random_state(g, &mut rng, 1.0);
    let c = random_state(g, &mut rng, 0.3);
    let snaps = (0..n)
        .map(|k| {
            let mut x = limit.clone();
            x.axpy(r.powi(k as i32), &c);
            x
        })
        .collect();
    (limit, snaps)
}

#[test]
fn cauchy_on_synthetic_sequences() {
    let g = grid();
    let (limit, snaps) = synthetic(&g, 0.5, 8);
    let (x, rep) = cauchy_diagnostics(&snaps, 4.0).unwrap();
    let r = rep.ratio.unwrap();
    assert!((r - 0.5).abs() <= 0.005, "{r}");
    assert!(rep.contracting);
    let err = x.sub(&limit).product_norm(4.0).unwrap();
    assert!(err <= 1e-8, "{err:.3e}");
    assert_eq!(rep.pairwise.len(), 8);
    assert_eq!(rep.pairwise[2][5], rep.pairwise[5][2]);

    let (_, snaps) = synthetic(&g, 1.1, 6);
    let (_, rep) = cauchy_diagnostics(&snaps, 4.0).unwrap();
    assert!(!rep.contracting && rep.ratio.unwrap() > 1.0);

    let same = vec![limit.clone(); 4];
    let (x, rep) = cauchy_diagnostics(&same, 4.0).unwrap();
    assert!(rep.ratio.is_none() && rep.contracting);
    assert_eq!(x.sub(&limit).product_norm(4.0).unwrap(), 0.0);

    assert!(matches!(cauchy_diagnostics(&same[..2], 4.0), Err(hypbq_core::Error::TooFewSnapshots { need: 3, got: 2 })));
}

fn periodic_forcing(amp: f64) -> ForcingSet {
    let p =
        Profile::new(1.5, 0.6, amp).with_angle(2, 0.5).with_modulation(Modulation::Cosine { period: 1.0, phase: 0.3 });
    ForcingSet { f: vec![p], period: Some(1.0), ..ForcingSet::zero() }
}

fn setup() -> (Grid, Duhamel, SolverConfig, PeriodicConfig) {
    let g = grid();
    let duh = Duhamel::new(&g, SemigroupConfig::for_dim(2), DT).unwrap();
    let cfg = SolverConfig { dt: DT, rho: 0.1, picard_tol: 1e-13, ..SolverConfig::default() };
    (g, duh, cfg, PeriodicConfig::default())
}

#[test]
fn zero_forcing_gives_zero_orbit() {
    let (g, duh, cfg, pc) = setup();
    let k = ConstantSet { c: 1.0, m: 1.0, n: 1.0 };
    let (orbit, rep) = periodic_solve(&duh, &ProblemData::zero(&g), &cfg, &pc, &k).unwrap();
    assert_eq!(rep.periods, 1);
    assert_eq!(rep.defect, 0.0);
    assert_eq!(orbit.sup_norm(cfg.p).unwrap(), 0.0);
}

#[test]
fn periodic_orbit_from_time_t_map() {
    let (g, duh, cfg, pc) = setup();
    let data = ProblemData { x0: State::zeros(&g), forcing: periodic_forcing(1e-2) };
    let fit = fit_constants(&duh, &data, &SolverConfig { t_max: pc.period, ..cfg }, 6, 31, &[]).unwrap();
    let k = fit.as_set();
    let (orbit, rep) = periodic_solve(&duh, &data, &cfg, &pc, &k).unwrap();
    println!(
        "periods {} d_n {:?} ratios {:?} defect {:.3e} rel {:.3e} residual {:.3e}",
        rep.periods, rep.d_n, rep.ratios, rep.defect, rep.relative_defect, rep.residual
    );
    assert!(rep.converged);
    assert!(rep.relative_defect <= 1e-4);
    assert!(rep.residual < cfg.picard_tol);
    for n in 2..rep.d_n.len() {
        assert!(rep.d_n[n] < rep.d_n[n - 1]);
    }

    // decay rate of perturbations around the same forcing
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let dx = random_state(&g, &mut rng, 1e-3);
    let scfg = SolverConfig { t_max: 6.0, ..cfg };
    let decay = perturbation_experiment(&duh, &data, &dx, &scfg, &k).unwrap();
    let delta = decay.delta_measured.unwrap();
    let cap = (-delta * pc.period).exp() * 1.2;
    println!("delta {delta:.4} cap {cap:.4}");
    for n in 2..rep.ratios.len() {
        assert!(rep.ratios[n] <= cap, "ratio {n}: {:.4}", rep.ratios[n]);
    }

    // a nearby start lands on the same orbit
    let near = ProblemData { x0: dx.clone().scaled(1e-3 / dx.product_norm(cfg.p).unwrap()), ..data.clone() };
    let (orbit2, rep2) = periodic_solve(&duh, &near, &cfg, &pc, &k).unwrap();
    let gap = orbit.sub(&orbit2).unwrap().sup_norm(cfg.p).unwrap();
    println!("uniqueness gap {gap:.3e} periods {}", rep2.periods);
    assert!(gap < 10.0 * pc.periodic_tol);
}

#[test]
fn invalid_periods_rejected() {
    let (g, duh, cfg, _) = setup();
    let k = ConstantSet { c: 1.0, m: 1.0, n: 1.0 };
    let data = ProblemData { x0: State::zeros(&g), forcing: periodic_forcing(1e-2) };
    // modulation period 1 does not divide 1.5
    let pc = PeriodicConfig { period: 1.5, ..PeriodicConfig::default() };
    assert!(periodic_solve(&duh, &data, &cfg, &pc, &k).is_err());
    let pc = PeriodicConfig { period: 0.01, ..PeriodicConfig::default() };
    assert!(periodic_solve(&duh, &data, &cfg, &pc, &k).is_err());
    let big = ProblemData { x0: State::zeros(&g), forcing: periodic_forcing(10.0) };
    assert!(matches!(
        periodic_solve(&duh, &big, &cfg, &PeriodicConfig::default(), &k),
        Err(hypbq_core::Error::Hypothesis(_))
    ));
}
