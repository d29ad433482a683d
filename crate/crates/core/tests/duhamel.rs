use hypbq_core::duhamel::*;
use hypbq_core::geometry::*;
use hypbq_core::projection::leray_project;
use hypbq_core::samples::{random_eta, random_forcing, random_state};
use hypbq_core::semigroup::{matrix_semigroup_apply, SemigroupConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1.0 / 64.0;

fn setup(d: usize) -> (Grid, Duhamel) {
    let g = if d == 2 { build_grid(2, 6.0, 64, 32) } else { build_grid(3, 6.0, 64, 1) }.unwrap();
    let duh = Duhamel::new(&g, SemigroupConfig::for_dim(d), DT).unwrap();
    (g, duh)
}

fn rel(a: &State, b: &State) -> f64 {
    let n = b.product_norm(2.0).unwrap();
    a.sub(b).product_norm(2.0).unwrap() / n
}

fn max_rel(a: &Trajectory, b: &Trajectory) -> f64 {
    let scale = b.sup_norm(2.0).unwrap();
    a.sub(b).unwrap().sup_norm(2.0).unwrap() / scale
}

/// Smooth nonlinear-looking trajectory: linear solution from random data.
fn smooth_traj(duh: &Duhamel, rng: &mut ChaCha8Rng, n: usize) -> Trajectory {
    let g = duh.grid();
    let x0 = random_state(g, rng, 1.0);
    let eta = random_eta(g, rng, 1.0, DT, n).unwrap();
    let fs = random_forcing(g, rng, [1.0, 1.0, 1.0], None);
    duh.linear_trajectory(&x0, &eta, &fs).unwrap()
}

#[test]
fn zero_inputs_give_zero() {
    let (g, duh) = setup(2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = smooth_traj(&duh, &mut rng, 17);
    let z = Trajectory::zeros(&g, DT, 17, 0.0).unwrap();
    assert_eq!(duh.op_b_traj(&z, &v).unwrap().sup_norm(2.0).unwrap(), 0.0);
    assert_eq!(duh.op_b_traj(&v, &z).unwrap().sup_norm(2.0).unwrap(), 0.0);
    let fs = random_forcing(&g, &mut rng, [1.0, 1.0, 1.0], None);
    assert_eq!(duh.op_th_traj(&z, &fs).unwrap().sup_norm(2.0).unwrap(), 0.0);
    assert_eq!(duh.op_th_traj(&v, &ForcingSet::zero()).unwrap().sup_norm(2.0).unwrap(), 0.0);
    assert_eq!(duh.op_t_forcing_traj(&ForcingSet::zero(), 0.0, 17).unwrap().sup_norm(2.0).unwrap(), 0.0);
    assert!(duh.op_b_traj(&v, &v.truncated(5)).is_err());
}

#[test]
fn bilinear_homogeneity_and_refinement() {
    let (_, duh) = setup(2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 65;
    let v = smooth_traj(&duh, &mut rng, n);
    let w = smooth_traj(&duh, &mut rng, n);
    let b = duh.op_b_traj(&v, &w).unwrap();
    let lam = -2.7;
    let bl = duh.op_b_traj(&v.scaled(lam), &w).unwrap();
    let e = max_rel(&bl, &b.scaled(lam));
    assert!(e <= 1e-12, "homogeneity {e:.3e}");

    let fine = duh.refined(2).unwrap();
    let b2 = fine.op_b_traj(&v.refined(2), &w.refined(2)).unwrap().subsampled(2);
    let e = rel(b2.last(), b.last());
    println!("op_B refinement {e:.3e}");
    assert!(e <= 1e-4, "refinement {e:.3e}");
    assert!(rel(&duh.op_b(&v, &w, n - 1).unwrap(), b.last()) <= 1e-14);
}

#[test]
fn coupling_small_time_taylor() {
    let g = build_grid(2, 6.0, 64, 32).unwrap();
    let t = 0.01;
    let duh = Duhamel::new(&g, SemigroupConfig::for_dim(2), t / 8.0).unwrap();
    let eta0 = ScalarField::from_fn(&g, |x, p| (-(x - 1.5).powi(2)).exp() * (1.0 + 0.5 * (2.0 * p).cos()));
    let eta = Trajectory::new(
        (0..9).map(|k| State { theta: eta0.clone(), ..State { t: k as f64 * t / 8.0, ..State::zeros(&g) } }).collect(),
        t / 8.0,
    )
    .unwrap();
    let fs = ForcingSet { h: vec![Profile::new(1.2, 0.6, 1.0).with_angle(1, 0.5)], ..ForcingSet::zero() };
    let out = duh.op_th(&eta, &fs, 8).unwrap();
    assert_eq!(out.theta.sup_norm(), 0.0);
    let want = leray_project(&fs.h_at(&g, 0.0).mul_scalar(&eta0)).unwrap().scaled(t);
    let e = out.u.sub(&want).lp_norm(2.0).unwrap() / want.lp_norm(2.0).unwrap();
    println!("T_h Taylor {e:.3e}");
    assert!(e <= 0.05, "{e:.3e}");
}

#[test]
fn forcing_theta_matches_cn() {
    for d in [2usize, 3] {
        let (g, duh) = setup(d);
        let fs = ForcingSet { f: vec![Profile::new(1.5, 0.5, 1.0).with_angle(2, 0.5)], ..ForcingSet::zero() };
        let n = duh.n_nodes(1.0);
        let tr = duh.op_t_forcing_traj(&fs, 0.0, n).unwrap();
        assert_eq!(tr.last().u.sup_norm(), 0.0);
        let z = Trajectory::zeros(&g, DT, n, 0.0).unwrap();
        let cn = duh.cn_linear_solve(&State::zeros(&g), &z, &fs, 16).unwrap();
        let e = tr.last().theta.sub(&cn.last().theta).lp_norm(2.0).unwrap() / cn.last().theta.lp_norm(2.0).unwrap();
        println!("d {d} forcing vs CN {e:.3e}");
        assert!(e <= 1e-3, "d = {d}: {e:.3e}");
        let lin = duh.linear_trajectory(&State::zeros(&g), &z, &fs).unwrap();
        assert!(max_rel(&lin, &tr) <= 1e-14);
    }
}

#[test]
fn full_linear_matches_cn() {
    for d in [2usize, 3] {
        let (g, duh) = setup(d);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = duh.n_nodes(1.0);
        let x0 = random_state(&g, &mut rng, 1.0);
        let eta = random_eta(&g, &mut rng, 1.0, DT, n).unwrap();
        let fs = random_forcing(&g, &mut rng, [1.0, 1.0, 1.0], Some(4.0));
        let tr = duh.linear_trajectory(&x0, &eta, &fs).unwrap();
        let cn = duh.cn_linear_solve(&x0, &eta, &fs, 16).unwrap();
        let e = rel(tr.last(), cn.last());
        println!("d {d} full vs CN {e:.3e}");
        assert!(e <= 2e-3, "d = {d}: {e:.3e}");
    }
}

#[test]
fn unforced_is_semigroup() {
    let (g, duh) = setup(2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x0 = random_state(&g, &mut rng, 1.0);
    let n = 33;
    let z = Trajectory::zeros(&g, DT, n, 0.0).unwrap();
    let tr = duh.linear_trajectory(&x0, &z, &ForcingSet::zero()).unwrap();
    let mut cur = x0.clone();
    let cfg = SemigroupConfig::for_dim(2);
    for k in 1..n {
        cur = matrix_semigroup_apply(&cur, DT, &cfg).unwrap();
        let e = rel(tr.state(k), &cur);
        assert!(e <= 1e-12, "node {k}: {e:.3e}");
    }
    let free = duh.free_evolution(&x0, n).unwrap();
    assert!(max_rel(&free, &tr) <= 1e-14);
}

#[test]
fn superposition_and_divergence() {
    let (g, duh) = setup(2);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 33;
    for _ in 0..3 {
        let (xa, xb) = (random_state(&g, &mut rng, 1.0), random_state(&g, &mut rng, 1.0));
        let (ea, eb) = (random_eta(&g, &mut rng, 1.0, DT, n).unwrap(), random_eta(&g, &mut rng, 1.0, DT, n).unwrap());
        let fs = random_forcing(&g, &mut rng, [1.0, 1.0, 1.0], None);
        let (a, b) = (0.7, -1.3);
        let mut x = xa.clone().scaled(a);
        x.axpy(b, &xb);
        let mut e = ea.scaled(a);
        e.axpy(b, &eb).unwrap();
        let fz = fs.scaled(1.0, 0.0, 0.0);
        // h-part is linear in η, (F, f)-part enters once
        let whole = duh.linear_trajectory(&x, &e, &fs).unwrap();
        let mut parts = duh.linear_trajectory(&xa, &ea, &fz).unwrap().scaled(a);
        parts.axpy(b, &duh.linear_trajectory(&xb, &eb, &fz).unwrap()).unwrap();
        parts.axpy(1.0, &duh.op_t_forcing_traj(&fs, 0.0, n).unwrap()).unwrap();
        let err = max_rel(&whole, &parts);
        assert!(err <= 1e-10, "superposition {err:.3e}");
        let lin = duh.op_t_forcing_traj(&fs.scaled(1.0, 2.0, 2.0), 0.0, n).unwrap();
        let twice = duh.op_t_forcing_traj(&fs, 0.0, n).unwrap().scaled(2.0);
        assert!(max_rel(&lin, &twice) <= 1e-12);
        let div = whole.max_divergence_ratio().unwrap();
        assert!(div <= 1e-6, "div {div:.3e}");
        let v = whole.truncated(9);
        assert!(duh.op_b_traj(&v, &v).unwrap().max_divergence_ratio().unwrap() <= 1e-6);
    }
}

#[test]
fn quadrature_order() {
    let g = build_grid(2, 6.0, 32, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x0 = random_state(&g, &mut rng, 1.0);
    let fs = random_forcing(&g, &mut rng, [1.0, 1.0, 1.0], Some(0.5));
    let eta_at =
        |t: f64| ScalarField::from_fn(&g, |x, p| (-(x - 1.5).powi(2)).exp() * (1.0 + 0.5 * p.cos()) * (3.0 * t).sin());
    let last = |dt: f64| {
        let duh = Duhamel::new(&g, SemigroupConfig::for_dim(2), dt).unwrap();
        let n = duh.n_nodes(1.0);
        let eta = Trajectory::new(
            (0..n)
                .map(|k| State { theta: eta_at(k as f64 * dt), ..State { t: k as f64 * dt, ..State::zeros(&g) } })
                .collect(),
            dt,
        )
        .unwrap();
        duh.linear_trajectory(&x0, &eta, &fs).unwrap().last().clone()
    };
    let (a, b, c) = (last(1.0 / 16.0), last(1.0 / 32.0), last(1.0 / 64.0));
    let order = (a.sub(&b).product_norm(2.0).unwrap() / b.sub(&c).product_norm(2.0).unwrap()).log2();
    println!("observed order {order:.3}");
    assert!(order >= 1.7, "{order:.3}");
}

#[test]
fn linear_bound_and_fit() {
    let (g, duh) = setup(2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 65;
    let samples: Vec<LinearSample> = (0..6)
        .map(|_| LinearSample {
            x0: random_state(&g, &mut rng, 1.0),
            eta: random_eta(&g, &mut rng, 1.0, DT, n).unwrap(),
            forcing: random_forcing(&g, &mut rng, [1.0, 1.0, 1.0], None),
        })
        .collect();
    let s = &samples[0];
    let (_, b) = duh.linear_mild_solution(&s.x0, &s.eta, &s.forcing, 4.0).unwrap();
    println!("theory bound {:.3e} <= {:.3e}", b.solution, b.rhs);
    assert!(b.holds);
    let fit = duh.fit_linear_constants(&samples, 4.0).unwrap();
    println!("fit C {:.4} N {:.4} M {:.4}", fit.c, fit.n, fit.m);
    assert!(fit.all_hold);
    assert!(fit.c <= 1.0 + 1e-9 && fit.n > 0.0 && fit.m > 0.0);
    assert!(duh.linear_mild_solution(&s.x0, &s.eta, &s.forcing, 2.5).is_err());
}

#[test]
fn forcing_validation() {
    let mut fs = ForcingSet {
        h: vec![Profile::new(1.0, 0.5, 1.0).with_modulation(Modulation::Cosine { period: 0.3, phase: 0.0 })],
        period: Some(1.0),
        ..ForcingSet::zero()
    };
    assert!(fs.validate().is_err());
    fs.period = Some(0.9);
    assert!(fs.validate().is_ok());
    let g = build_grid(2, 6.0, 32, 8).unwrap();
    let a = fs.h_at(&g, 0.2);
    let b = fs.h_at(&g, 1.1);
    assert!(a.sub(&b).sup_norm() <= 1e-12);
    let toml_like: ForcingSet = serde_json::from_str(
        r#"{"F": [{"center_tau": 1.0, "width": 0.5, "amplitude": 0.1, "modulation": {"kind": "cosine", "period": 2.0, "phase": 0.0}}]}"#,
    )
    .unwrap();
    assert_eq!(toml_like.big_f.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coupling_never_writes_theta(seed in any::<u64>()) {
        let g = build_grid(2, 6.0, 32, 8).unwrap();
        let duh = Duhamel::new(&g, SemigroupConfig::for_dim(2), DT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = random_eta(&g, &mut rng, 1.0, DT, 9).unwrap();
        let fs = random_forcing(&g, &mut rng, [1.0, 0.0, 0.0], None);
        let out = duh.op_th_traj(&eta, &fs).unwrap();
        prop_assert!(out.states().iter().all(|s| s.theta.sup_norm() == 0.0));
    }
}
