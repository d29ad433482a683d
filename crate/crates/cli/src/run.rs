use crate::config::{ConstantsSource, ExperimentConfig};
use crate::output::{Check, Outcome, Series};
use anyhow::{Context, Result};
use hypbq_core::constants::TheoremConstants;
use hypbq_core::duhamel::{Duhamel, Trajectory};
use hypbq_core::periodic::periodic_solve;
use hypbq_core::picard::{
    fit_constants, picard_solve, smallness_check, ConstantSet, DataNorms, ProblemData, SolverConfig,
};
use hypbq_core::samples::random_state;
use hypbq_core::semigroup::verify_semigroup;
use hypbq_core::stability::{
    cone_operator_norm, delta_bound, perturbation_experiment, ConeKind, ConeParams, DELTA_FRACTION,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

fn norms_series(name: &'static str, v: &Trajectory, p: f64) -> Result<Series> {
    let mut s = Series::new(name, &["t", "u_norm", "theta_norm", "product_norm"]);
    for st in v.states() {
        let (a, b) = (st.u.lp_norm(p)?, st.theta.lp_norm(p)?);
        s.push(vec![st.t, a, b, a.max(b)]);
    }
    Ok(s)
}

fn theory(cfg: &ExperimentConfig) -> Result<TheoremConstants> {
    let sg = cfg.semigroup_config();
    TheoremConstants::new(cfg.manifold.d, cfg.solver.p, sg.delta_d, sg.c).context("closed-form constants")
}

fn smallness_constants(
    cfg: &ExperimentConfig,
    duh: &Duhamel,
    data: &ProblemData,
    solver: &SolverConfig,
) -> Result<ConstantSet> {
    Ok(match cfg.smallness.constants {
        ConstantsSource::Theory => ConstantSet::theory(&theory(cfg)?),
        ConstantsSource::Fitted => {
            fit_constants(duh, data, solver, cfg.smallness.fit_samples, cfg.experiment.seed, &[])?.as_set()
        }
    })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid()?;
    let duh = cfg.duhamel(&g)?;
    let data = cfg.problem(&g);
    let s = &cfg.solver;
    let (v, rep) = picard_solve(&duh, &data, s, None)?;
    let norms = DataNorms::measure(&data, s.p, &v.time_nodes())?;
    let k = theory(cfg)?;
    let small = smallness_check(&norms, &ConstantSet::theory(&k), s.rho);
    let div = v.max_divergence_ratio()?;
    let checks = vec![
        Check::flag("converged", rep.converged),
        Check::flag("contracting", rep.contracting),
        Check::lt("contraction ratio", rep.contraction_ratio, 1.0),
        Check::le("fixed-point residual", rep.residual, s.picard_tol.max(1e-6)),
        Check::le("divergence ratio", div, 1e-6),
    ];
    let mut iters = Series::new("iterations", &["iteration", "sup_norm", "diff"]);
    for (i, (a, b)) in rep.sup_norms.iter().zip(&rep.diffs).enumerate() {
        iters.push(vec![(i + 1) as f64, *a, *b]);
    }
    let result = json!({
        "iteration": rep,
        "solution_sup_norm": v.sup_norm(s.p)?,
        "final_norm": v.last().product_norm(s.p)?,
        "divergence_ratio": div,
        "data_norms": norms,
        "smallness_closed_form": small,
    });
    Ok(Outcome { checks, result, series: vec![norms_series("norms", &v, s.p)?, iters] })
}

pub fn verify_semigroup_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid()?;
    let rep = verify_semigroup(&g, &cfg.semigroup_config(), &cfg.verify)?;
    let tol = cfg.verify.slope_tol;
    let checks = vec![
        Check::le("dispersive slope relative error", ((rep.slope - rep.slope_target) / rep.slope_target).abs(), tol),
        Check::flag("domination by fitted constant", rep.domination_ok),
    ];
    let mut slope = Series::new("slope", &["t", "ratio"]);
    for (t, r) in rep.slope_times.iter().zip(&rep.slope_ratios) {
        slope.push(vec![*t, *r]);
    }
    let mut disp = Series::new("dispersive", &["t", "bound", "worst_ratio"]);
    for ((t, b), w) in rep.times.iter().zip(&rep.bound).zip(&rep.worst_ratio) {
        disp.push(vec![*t, *b, *w]);
    }
    let mut sm = Series::new("smoothing", &["t", "measured", "bound", "bound_with_ricci"]);
    for r in &rep.smoothing {
        sm.push(vec![r.t, r.measured, r.bound, r.bound_with_ricci]);
    }
    Ok(Outcome { checks, result: serde_json::to_value(&rep)?, series: vec![slope, disp, sm] })
}

pub fn stability(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid()?;
    let duh = cfg.duhamel(&g)?;
    let data = cfg.problem(&g);
    let s = &cfg.solver;
    let k = smallness_constants(cfg, &duh, &data, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
    let dx = random_state(&g, &mut rng, cfg.stability.perturbation_amplitude);
    let full = perturbation_experiment(&duh, &data, &dx, s, &k)?;
    let half = if cfg.stability.halving {
        Some(perturbation_experiment(&duh, &data, &dx.clone().scaled(0.5), s, &k)?)
    } else {
        None
    };
    let mut checks = vec![Check::flag("perturbation stable", full.passes())];
    if !full.trivially_stable {
        let fit = full.fit.as_ref();
        checks.push(Check::gt("delta_measured", full.delta_measured.unwrap_or(f64::NAN), 0.0));
        checks.push(Check::ge("log-linear R^2", fit.map_or(f64::NAN, |f| f.r_squared), 0.98));
        checks.push(Check::flag("exponential envelope", full.envelope_holds));
        if let Some(h) = &half {
            checks.push(Check::le("halving defect", full.scaling_defect(h, 0.5)?, 0.1));
        }
    }
    let mut decay = Series::new("decay", &["t", "phi", "phi_half", "envelope"]);
    for (i, (t, p)) in full.times.iter().zip(&full.phi).enumerate() {
        let ph = half.as_ref().map_or(f64::NAN, |h| h.phi[i]);
        let env = match (full.c_fit, full.delta_measured) {
            (Some(c), Some(d)) => c * (-d * t).exp(),
            _ => f64::NAN,
        };
        decay.push(vec![*t, *p, ph, env]);
    }
    let result = json!({ "constants": k, "decay": full, "half": half });
    Ok(Outcome { checks, result, series: vec![decay] })
}

pub fn periodic(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid()?;
    let duh = cfg.duhamel(&g)?;
    let data = cfg.problem(&g);
    let pc = &cfg.periodic;
    let window = SolverConfig { t_max: pc.period, ..cfg.solver };
    let k = smallness_constants(cfg, &duh, &data, &window)?;
    let (orbit, rep) = periodic_solve(&duh, &data, &cfg.solver, pc, &k)?;
    let decreasing = rep.d_n.windows(2).skip(1).all(|w| w[1] < w[0]);
    let checks = vec![
        Check::flag("converged", rep.converged),
        Check::le("relative periodicity defect", rep.relative_defect, 1e-4),
        Check::flag("d_n strictly decreasing for n >= 2", decreasing),
        Check::le("orbit mild residual", rep.residual, cfg.solver.picard_tol),
    ];
    let mut cauchy = Series::new("cauchy", &["n", "d_n"]);
    for (n, d) in rep.d_n.iter().enumerate() {
        cauchy.push(vec![n as f64, *d]);
    }
    let result = json!({ "constants": k, "periodic": rep });
    Ok(Outcome { checks, result, series: vec![norms_series("orbit", &orbit, cfg.solver.p)?, cauchy] })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsInput {
    pub d: usize,
    pub p: f64,
    pub delta_d: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub rho: f64,
    pub h_norm: f64,
}

pub fn constants(inp: &ConstantsInput) -> Result<Outcome> {
    let k = TheoremConstants::new(inp.d, inp.p, inp.delta_d, inp.c)?;
    let e = k.stability_exponents;
    let q = ConeParams {
        gamma: k.stability_gamma,
        delta: 0.0,
        rho: inp.rho,
        c_tilde: k.c_tilde,
        h_norm: inp.h_norm,
        exps: e,
    };
    let cone_a = cone_operator_norm(ConeKind::A, &q)?;
    let (db, db_err) = match delta_bound(k.stability_gamma, inp.rho, k.c_tilde, e, inp.h_norm) {
        Ok(b) => (Some(b), None),
        Err(err) => (None, Some(err.to_string())),
    };
    let cd = |pref: f64| {
        db.and_then(|b| {
            hypbq_core::constants::c_delta(
                pref,
                inp.rho,
                k.c_tilde,
                k.stability_gamma,
                DELTA_FRACTION * b,
                inp.h_norm,
                e,
            )
            .ok()
        })
    };
    let mut result = serde_json::to_value(&k)?;
    let extra = json!({
        "rho": inp.rho,
        "h_norm": inp.h_norm,
        "cone_A_norm": cone_a,
        "delta_bound": db,
        "delta_bound_error": db_err,
        "C_delta_M": cd(k.m_bilinear),
        "C_delta_C": cd(k.c),
    });
    if let (Some(r), serde_json::Value::Object(x)) = (result.as_object_mut(), extra) {
        r.extend(x);
    }
    let finite = [k.n, k.m, k.c_tilde, k.stability_gamma].iter().all(|v| v.is_finite() && *v > 0.0);
    let checks = vec![Check::flag("constants finite and positive", finite)];
    let mut table = Series::new("constants", &["d", "p", "delta_d", "C", "N", "M", "gamma", "C_tilde"]);
    table.push(vec![inp.d as f64, inp.p, inp.delta_d, inp.c, k.n, k.m, k.stability_gamma, k.c_tilde]);
    Ok(Outcome { checks, result, series: vec![table] })
}
