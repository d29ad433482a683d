//! Periodic mild solutions under time-periodic forcing, via iteration of the
//! time-T map.

use crate::band::Banded;
use crate::duhamel::{Duhamel, Trajectory};
use crate::error::{param, Error, Result};
use crate::geometry::State;
use crate::picard::{
    picard_solve, smallness_check, Condition, ConstantSet, DataNorms, IterationReport, ProblemData, SmallnessReport,
    SolverConfig,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicConfig {
    /// T
    pub period: f64,
    pub periodic_tol: f64,
    pub max_periods: usize,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig { period: 1.0, periodic_tol: 1e-5, max_periods: 200 }
    }
}

impl PeriodicConfig {
    pub fn validate(&self, dt: f64) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(param("period", "must be positive"));
        }
        let k = self.period / dt;
        if (k - k.round()).abs() > 1e-9 * k || k.round() < 1.0 {
            return Err(param("period", format!("must be a multiple of dt = {dt}")));
        }
        if !(self.periodic_tol > 0.0) {
            return Err(param("periodic_tol", "must be positive"));
        }
        if self.max_periods < 3 {
            return Err(param("max_periods", "need at least 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    /// `‖x_n - x_m‖`
    pub pairwise: Vec<Vec<f64>>,
    /// `‖x_{n+1} - x_n‖`
    pub successive: Vec<f64>,
    /// least-squares geometric ratio of the successive differences
    pub ratio: Option<f64>,
    /// `successive[n+1] / successive[n]`
    pub step_ratios: Vec<f64>,
    pub contracting: bool,
    /// norm of the extrapolation step added to the last snapshot
    pub extrapolation_step: f64,
}

/// Pairwise distances, fitted ratio and extrapolated limit of snapshots
/// `x_n`.
///
/// The limit is a reduced-rank extrapolation over the last
/// [`RRE_DEPTH`] + 1 differences, exact for `x_n = x* + Σ c_j r_jⁿ` with up
/// to that many modes. When its weights blow up it falls back to
/// `x_N + r/(1-r) (x_N - x_{N-1})` with `r` the last step ratio.
pub fn cauchy_diagnostics(snapshots: &[State], p: f64) -> Result<(State, CauchyReport)> {
    if snapshots.len() < 3 {
        return Err(Error::TooFewSnapshots { need: 3, got: snapshots.len() });
    }
    let n = snapshots.len();
    let mut pairwise = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = snapshots[j].sub(&snapshots[i]).product_norm(p)?;
            pairwise[i][j] = v;
            pairwise[j][i] = v;
        }
    }
    let successive: Vec<f64> = (0..n - 1).map(|i| pairwise[i][i + 1]).collect();
    let step_ratios: Vec<f64> = successive.windows(2).map(|w| w[1] / w[0]).collect();
    let pts: Vec<(f64, f64)> =
        successive.iter().enumerate().filter(|(_, &d)| d > 0.0).map(|(i, d)| (i as f64, d.ln())).collect();
    let ratio = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        (sxy / sxx).exp()
    });
    let last = snapshots[n - 1].clone();
    let (d_prev, d_last) = (successive[n - 3], successive[n - 2]);
    let contracting = match ratio {
        Some(r) => r < 1.0,
        None => true,
    };
    let mut limit = last.clone();
    if d_prev > 0.0 && d_last > 0.0 && contracting {
        if let Some(x) = rre(snapshots)? {
            limit = x;
        } else {
            let r = d_last / d_prev;
            if r < 1.0 {
                let step = snapshots[n - 1].sub(&snapshots[n - 2]);
                limit.axpy(r / (1.0 - r), &step);
            }
        }
    }
    let extrapolation_step = limit.sub(&last).product_norm(p)?;
    Ok((limit, CauchyReport { pairwise, successive, ratio, step_ratios, contracting, extrapolation_step }))
}

/// Number of geometric modes removed by the extrapolation.
pub const RRE_DEPTH: usize = 3;

fn state_inner(a: &State, b: &State) -> Result<f64> {
    Ok(a.u.inner(&b.u)? + a.theta.inner(&b.theta)?)
}

/// `Σ γ_i x_i` with `Σ γ_i = 1` minimising `‖Σ γ_i (x_{i+1} - x_i)‖₂`.
fn rre(snapshots: &[State]) -> Result<Option<State>> {
    let n = snapshots.len();
    let k = (RRE_DEPTH + 1).min(n - 1);
    let xs = &snapshots[n - 1 - k..n - 1];
    let us: Vec<State> = (n - 1 - k..n - 1).map(|i| snapshots[i + 1].sub(&snapshots[i])).collect();
    let scale = state_inner(&us[k - 1], &us[k - 1])?;
    if !(scale > 0.0) {
        return Ok(None);
    }
    let mut gram = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = state_inner(&us[i], &us[j])? / scale;
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    let ridge = 1e-13 * (0..k).map(|i| gram[i][i]).sum::<f64>();
    let mut m = Banded::zeros(k, k - 1, k - 1);
    for (i, row) in gram.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m.set(i, j, C64::new(v + if i == j { ridge } else { 0.0 }, 0.0));
        }
    }
    let mut y = vec![C64::new(1.0, 0.0); k];
    match m.factor() {
        Ok(lu) => lu.solve_in_place(&mut y),
        Err(_) => return Ok(None),
    }
    let total: f64 = y.iter().map(|c| c.re).sum();
    let g: Vec<f64> = y.iter().map(|c| c.re / total).collect();
    if !g.iter().all(|v| v.is_finite()) || g.iter().map(|v| v.abs()).sum::<f64>() > 1e3 {
        return Ok(None);
    }
    // Σ γ_i x_{i+1} = Σ γ_i x_i + Σ γ_i u_i, same limit with a smaller residual
    let mut x = State::zeros(snapshots[0].grid());
    for (i, gi) in g.iter().enumerate() {
        x.axpy(*gi, &xs[i]);
        x.axpy(*gi, &us[i]);
    }
    Ok(Some(x))
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicReport {
    pub period: f64,
    pub periods: usize,
    /// `d_n = ‖x((n+1)T) - x(nT)‖`
    pub d_n: Vec<f64>,
    /// `d_{n+1} / d_n`
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub cauchy: CauchyReport,
    /// `‖x(T) - x(0)‖` on the re-solved orbit
    pub defect: f64,
    /// defect over the orbit's sup norm
    pub relative_defect: f64,
    pub orbit_sup: f64,
    /// mild-equation residual of the re-solved orbit
    pub residual: f64,
    pub smallness: SmallnessReport,
    pub orbit_solve: IterationReport,
}

fn solve_window(
    duh: &Duhamel,
    x0: &State,
    data: &ProblemData,
    cfg: &SolverConfig,
) -> Result<(Trajectory, IterationReport)> {
    let d = ProblemData { x0: x0.clone(), forcing: data.forcing.clone() };
    let (v, r) = picard_solve(duh, &d, cfg, None)?;
    if !r.converged {
        return Err(Error::NoConvergence {
            iters: r.iterations,
            last_diff: r.diffs.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok((v, r))
}

/// Iterates the time-T map from `data.x0` (zero in the standard setting)
/// until successive snapshots agree to `periodic_tol`, then re-solves one
/// period from the extrapolated limit.
pub fn periodic_solve(
    duh: &Duhamel,
    data: &ProblemData,
    solver: &SolverConfig,
    pc: &PeriodicConfig,
    k: &ConstantSet,
) -> Result<(Trajectory, PeriodicReport)> {
    pc.validate(solver.dt)?;
    let mut forcing = data.forcing.clone();
    forcing.period = Some(pc.period);
    forcing.validate()?;
    let data = ProblemData { x0: data.x0.clone(), forcing };
    let cfg = SolverConfig { t_max: pc.period, ..*solver };
    cfg.validate(duh.grid().d())?;

    let times: Vec<f64> = (0..cfg.n_nodes()).map(|i| i as f64 * cfg.dt).collect();
    let norms = DataNorms { initial: data.x0.product_norm(cfg.p)?, ..DataNorms::measure(&data, cfg.p, &times)? };
    let mut smallness = smallness_check(&norms, k, cfg.rho);
    let rhs = cfg.rho / (3.0 * k.c * k.c);
    let lhs = norms.initial;
    let pass = lhs < rhs || (lhs == 0.0 && rhs == 0.0);
    smallness.conditions.push(Condition { name: "|(u0, theta0)| <= rho/(3C^2)", lhs, rhs, margin: rhs - lhs, pass });
    smallness.all_pass &= pass;
    if !smallness.all_pass {
        let failed: Vec<&str> = smallness.conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        return Err(Error::Hypothesis(format!("periodic data not small: {}", failed.join("; "))));
    }

    let mut snaps = vec![data.x0.clone()];
    let mut d_n = Vec::new();
    let mut converged = false;
    while d_n.len() < pc.max_periods {
        let (v, _) = solve_window(duh, snaps.last().unwrap(), &data, &cfg)?;
        let mut next = v.last().clone();
        next.t = 0.0;
        let d = next.sub(snaps.last().unwrap()).product_norm(cfg.p)?;
        snaps.push(next);
        d_n.push(d);
        let n = d_n.len();
        if n >= 4 && d >= d_n[n - 2] && d >= pc.periodic_tol {
            return Err(Error::Hypothesis(format!(
                "time-T map not contracting: d_{} = {:.3e} >= d_{} = {:.3e}",
                n - 1,
                d,
                n - 2,
                d_n[n - 2]
            )));
        }
        if d < pc.periodic_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iters: d_n.len(), last_diff: *d_n.last().unwrap_or(&f64::NAN) });
    }
    let (limit, cauchy) = if snaps.len() >= 3 {
        cauchy_diagnostics(&snaps, cfg.p)?
    } else {
        let last = snaps.last().unwrap().clone();
        let rep = CauchyReport {
            pairwise: vec![vec![0.0, d_n[0]], vec![d_n[0], 0.0]],
            successive: d_n.clone(),
            ratio: None,
            step_ratios: Vec::new(),
            contracting: true,
            extrapolation_step: 0.0,
        };
        (last, rep)
    };
    let (orbit, orbit_solve) = solve_window(duh, &limit, &data, &cfg)?;
    let defect = orbit.last().sub(orbit.state(0)).product_norm(cfg.p)?;
    let orbit_sup = orbit.sup_norm(cfg.p)?;
    let relative_defect = if orbit_sup > 0.0 { defect / orbit_sup } else { defect };
    let ratios = d_n.windows(2).map(|w| w[1] / w[0]).collect();
    let report = PeriodicReport {
        period: pc.period,
        periods: d_n.len(),
        d_n,
        ratios,
        converged,
        cauchy,
        defect,
        relative_defect,
        orbit_sup,
        residual: orbit_solve.residual,
        smallness,
        orbit_solve,
    };
    Ok((orbit, report))
}
