//! Picard iteration of the mild-solution map on a small ball.

use crate::constants::TheoremConstants;
use crate::duhamel::{Duhamel, ForcingSet, Trajectory, DEFAULT_DT};
use crate::error::{param, Result};
use crate::geometry::{Grid, State};
use crate::samples::{random_eta, random_forcing, random_state};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Lebesgue exponent, `p > d`
    pub p: f64,
    /// ball radius ρ
    pub rho: f64,
    pub picard_tol: f64,
    pub max_iters: usize,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { p: 4.0, rho: 0.02, picard_tol: 1e-10, max_iters: 40, t_max: 10.0, dt: DEFAULT_DT }
    }
}

impl SolverConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.p > d as f64) {
            return Err(param("p", format!("need p > d = {d}, got {}", self.p)));
        }
        if !(self.rho > 0.0) {
            return Err(param("rho", format!("must be positive, got {}", self.rho)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(param("picard_tol", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(param("max_iters", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.t_max >= self.dt) {
            return Err(param("t_max", "need 0 < dt <= t_max"));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        (self.t_max / self.dt).round() as usize + 1
    }
}

/// Initial state and forcing.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub x0: State,
    pub forcing: ForcingSet,
}

impl ProblemData {
    pub fn zero(grid: &Grid) -> Self {
        ProblemData { x0: State::zeros(grid), forcing: ForcingSet::zero() }
    }
}

/// `Φ(v) = e^{-tA}x0 + B(v, v) + T_h(θ_v) + 𝕋(F; f)`.
pub fn phi_map(duh: &Duhamel, v: &Trajectory, data: &ProblemData) -> Result<Trajectory> {
    data.forcing.validate()?;
    crate::geometry::same_grid(duh.grid(), v.grid())?;
    duh.integrate(Some(&data.x0), v.t0(), v.len(), |k, t| {
        let s = v.state(k);
        let (mut bu, mut bt) = duh.bilinear_integrand(s, s)?;
        let (fu, ft) = duh.forcing_integrand(&data.forcing, t);
        if let Some(x) = fu {
            bu.axpy(1.0, &x);
        }
        if let Some(c) = duh.coupling_integrand(&s.theta, &data.forcing, t) {
            bu.axpy(1.0, &c);
        }
        if let Some(x) = ft {
            bt.axpy(1.0, &x);
        }
        Ok((Some(bu), Some(bt)))
    })
}

/// `δ' = B(δ, v) + B(w, δ) + T_h(θ_δ)`, the exact change `Φ(v) - Φ(w)`
/// for `δ = v - w`.
pub fn phi_difference(
    duh: &Duhamel,
    delta: &Trajectory,
    v: &Trajectory,
    w: &Trajectory,
    forcing: &ForcingSet,
) -> Result<Trajectory> {
    delta.check_compatible(v)?;
    delta.check_compatible(w)?;
    duh.integrate(None, v.t0(), v.len(), |k, t| {
        let (d, a, b) = (delta.state(k), v.state(k), w.state(k));
        let (mut bu, mut bt) = duh.bilinear_integrand(d, a)?;
        let (cu, ct) = duh.bilinear_integrand(b, d)?;
        bu.axpy(1.0, &cu);
        bt.axpy(1.0, &ct);
        if let Some(c) = duh.coupling_integrand(&d.theta, forcing, t) {
            bu.axpy(1.0, &c);
        }
        Ok((Some(bu), Some(bt)))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    /// `sup_t ‖v_k‖` for k = 1, 2, ...
    pub sup_norms: Vec<f64>,
    /// `sup_t ‖v_k - v_{k-1}‖`
    pub diffs: Vec<f64>,
    /// `diffs[k+1] / diffs[k]`
    pub ratios: Vec<f64>,
    /// `sqrt(diffs[k+1] / diffs[k-1])`
    pub two_step_ratios: Vec<f64>,
    /// median two-step ratio after the burn-in
    pub contraction_ratio: f64,
    /// largest relative deviation of the post-burn-in two-step ratios from
    /// the median
    pub ratio_spread: f64,
    pub contracting: bool,
    pub converged: bool,
    pub iterations: usize,
    /// `sup_t ‖Φ(v*) - v*‖` of the returned iterate (for an unconverged run,
    /// the last difference)
    pub residual: f64,
    /// some iterate left the ball of radius ρ
    pub left_ball: bool,
}

/// Two-step ratios skipped before the contraction ratio is read off.
pub const BURN_IN: usize = 2;

fn ratio_stats(diffs: &[f64]) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    let two: Vec<f64> = diffs.windows(3).map(|w| (w[2] / w[0]).sqrt()).collect();
    let usable: Vec<f64> = if two.len() > BURN_IN {
        two[BURN_IN..].to_vec()
    } else if !two.is_empty() {
        two.clone()
    } else {
        ratios.clone()
    };
    if usable.is_empty() {
        return (ratios, two, 0.0, 0.0);
    }
    let mut s = usable.clone();
    s.sort_by(f64::total_cmp);
    let med = s[s.len() / 2];
    let spread = usable.iter().map(|r| (r / med - 1.0).abs()).fold(0.0, f64::max);
    (ratios, two, med, spread)
}

/// Iterate `v_{k+1} = Φ(v_k)` from `start` (zero by default). After the
/// first step the increments are propagated in difference form, which keeps
/// their relative accuracy below the rounding level of `v`.
pub fn picard_solve(
    duh: &Duhamel,
    data: &ProblemData,
    cfg: &SolverConfig,
    start: Option<&Trajectory>,
) -> Result<(Trajectory, IterationReport)> {
    let g = duh.grid();
    cfg.validate(g.d())?;
    data.forcing.validate()?;
    if (cfg.dt - duh.dt()).abs() > 1e-12 * cfg.dt {
        return Err(param("dt", "solver step differs from the Duhamel step"));
    }
    let n = cfg.n_nodes();
    let mut prev = match start {
        Some(s) => {
            if s.len() != n {
                return Err(param("start", format!("need {n} nodes, got {}", s.len())));
            }
            s.clone()
        }
        None => Trajectory::zeros(g, cfg.dt, n, 0.0)?,
    };
    let mut v = phi_map(duh, &prev, data)?;
    let mut delta = v.sub(&prev)?;
    let (mut sup_norms, mut diffs) = (vec![v.sup_norm(cfg.p)?], vec![delta.sup_norm(cfg.p)?]);
    let mut left_ball = sup_norms[0] > cfg.rho;
    let mut converged = diffs[0] < cfg.picard_tol;
    while !converged && diffs.len() < cfg.max_iters {
        delta = phi_difference(duh, &delta, &v, &prev, &data.forcing)?;
        prev = v.clone();
        v.axpy(1.0, &delta)?;
        let diff = delta.sup_norm(cfg.p)?;
        let norm = v.sup_norm(cfg.p)?;
        sup_norms.push(norm);
        diffs.push(diff);
        left_ball |= norm > cfg.rho;
        converged = diff < cfg.picard_tol;
        if !diff.is_finite() || diff > 1e6 * diffs[0].max(1.0) {
            break;
        }
    }
    // Φ(v) - v = Φ(v_k) - Φ(v_{k-1})
    let residual = if diffs.len() == 1 && start.is_none() {
        phi_map(duh, &v, data)?.sub(&v)?.sup_norm(cfg.p)?
    } else if converged {
        phi_difference(duh, &delta, &v, &prev, &data.forcing)?.sup_norm(cfg.p)?
    } else {
        *diffs.last().unwrap_or(&0.0)
    };
    let (ratios, two_step_ratios, contraction_ratio, ratio_spread) = ratio_stats(&diffs);
    let contracting = if diffs.len() < 3 { converged } else { contraction_ratio < 1.0 };
    let report = IterationReport {
        iterations: diffs.len(),
        sup_norms,
        diffs,
        ratios,
        two_step_ratios,
        contraction_ratio,
        ratio_spread,
        contracting,
        converged,
        residual,
        left_ball,
    };
    Ok((v, report))
}

/// One inequality of the smallness hypotheses.
#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub margin: f64,
    pub pass: bool,
}

fn cond(name: &'static str, lhs: f64, rhs: f64) -> Condition {
    // a vanishing datum meets a vanishing bound
    let pass = lhs < rhs || (lhs == 0.0 && rhs == 0.0);
    Condition { name, lhs, rhs, margin: rhs - lhs, pass }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DataNorms {
    /// `‖(u_0, θ_0)‖_p`
    pub initial: f64,
    /// `‖h‖_{∞, L^{p/2}}`
    pub h: f64,
    /// `‖(F, f)‖_{∞, L^{p/2}}`
    pub forcing: f64,
}

impl DataNorms {
    pub fn measure(data: &ProblemData, p: f64, times: &[f64]) -> Result<Self> {
        let g = data.x0.grid();
        Ok(DataNorms {
            initial: data.x0.product_norm(p)?,
            h: data.forcing.h_norm(g, p, times)?,
            forcing: data.forcing.forcing_norm(g, p, times)?,
        })
    }
}

/// `C`, `M`, `N` of the fixed-point argument.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantSet {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

impl ConstantSet {
    /// Closed-form constants.
    pub fn theory(k: &TheoremConstants) -> Self {
        ConstantSet { c: k.c, m: k.m_bilinear.max(k.m_forcing), n: k.n }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallnessReport {
    pub rho: f64,
    pub constants: ConstantSet,
    pub conditions: Vec<Condition>,
    pub all_pass: bool,
}

pub fn smallness_check(norms: &DataNorms, k: &ConstantSet, rho: f64) -> SmallnessReport {
    let conditions = vec![
        cond("2 M rho + N |h| < 1", 2.0 * k.m * rho + k.n * norms.h, 1.0),
        cond("rho < 1/(4M)", rho, 1.0 / (4.0 * k.m)),
        cond("|(u0, theta0)| < rho/(3C)", norms.initial, rho / (3.0 * k.c)),
        cond("|h| < 1/(3N)", norms.h, 1.0 / (3.0 * k.n)),
        cond("|(F, f)| < rho/(3M) - rho^2", norms.forcing, rho / (3.0 * k.m) - rho * rho),
    ];
    let all_pass = conditions.iter().all(|c| c.pass);
    SmallnessReport { rho, constants: *k, conditions, all_pass }
}

/// Measured discrete operator norms in `‖·‖_{∞, L^p}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FittedConstants {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "M_bilinear")]
    pub m_bilinear: f64,
    #[serde(rename = "M_forcing")]
    pub m_forcing: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub samples: usize,
}

impl FittedConstants {
    /// Single `M` covering both the bilinear and the forcing operator.
    pub fn as_set(&self) -> ConstantSet {
        ConstantSet { c: self.c, m: self.m_bilinear.max(self.m_forcing), n: self.n }
    }

    /// `M` of the bilinear operator alone, which is what the Lipschitz
    /// constant of Φ involves.
    pub fn bilinear_set(&self) -> ConstantSet {
        ConstantSet { c: self.c, m: self.m_bilinear, n: self.n }
    }
}

/// Fit `C`, `M`, `N` over `samples` random inputs on `[0, t_max]`; the
/// problem's own `x0`, `h` and `(F, f)` are included.
/// `extra` pairs `(x, y)` join the bilinear suite in both orders.
pub fn fit_constants(
    duh: &Duhamel,
    data: &ProblemData,
    cfg: &SolverConfig,
    samples: usize,
    seed: u64,
    extra: &[(&Trajectory, &Trajectory)],
) -> Result<FittedConstants> {
    let g = duh.grid();
    let p = cfg.p;
    let n = cfg.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let (mut c, mut mb, mut mf, mut nn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let times: Vec<f64> = (0..n).map(|k| k as f64 * cfg.dt).collect();
    let per = |x: &Trajectory| x.sup_norm(p);
    for i in 0..samples.max(1) {
        let x0 =
            if i == 0 && data.x0.product_norm(p)? > 0.0 { data.x0.clone() } else { random_state(g, &mut rng, 1.0) };
        let mut fs = random_forcing(g, &mut rng, [1.0, 1.0, 1.0], data.forcing.period);
        if i == 0 && !data.forcing.is_zero() {
            fs = data.forcing.clone();
        }
        let eta = random_eta(g, &mut rng, 1.0, cfg.dt, n)?;

        let free = duh.free_evolution(&x0, n)?;
        c = c.max(ratio(per(&free)?, x0.product_norm(p)?));
        let tf = duh.op_t_forcing_traj(&fs, 0.0, n)?;
        mf = mf.max(ratio(per(&tf)?, fs.forcing_norm(g, p, &times)?));
        if !fs.h.is_empty() {
            let th = duh.op_th_traj(&eta, &fs)?;
            nn = nn.max(ratio(per(&th)?, fs.h_norm(g, p, &times)? * eta.theta_sup_norm(p)?));
        }
        // smooth trajectories in the solution class
        let a = duh.linear_trajectory(&x0, &eta, &fs)?;
        let y0 = random_state(g, &mut rng, 1.0);
        let b = duh.free_evolution(&y0, n)?;
        let bil = duh.op_b_traj(&a, &b)?;
        mb = mb.max(ratio(per(&bil)?, per(&a)? * per(&b)?));
        let bil = duh.op_b_traj(&b, &a)?;
        mb = mb.max(ratio(per(&bil)?, per(&a)? * per(&b)?));
    }
    for (a, b) in extra {
        let (na, nb) = (per(a)?, per(b)?);
        mb = mb.max(ratio(per(&duh.op_b_traj(a, b)?)?, na * nb));
        mb = mb.max(ratio(per(&duh.op_b_traj(b, a)?)?, na * nb));
        if !data.forcing.h.is_empty() {
            for x in [a, b] {
                let th = duh.op_th_traj(x, &data.forcing)?;
                nn = nn.max(ratio(per(&th)?, data.forcing.h_norm(g, p, &times)? * x.theta_sup_norm(p)?));
            }
        }
    }
    Ok(FittedConstants { c, m_bilinear: mb, m_forcing: mf, n: nn, samples: samples.max(1) + extra.len() })
}

/// `C‖x0‖ + M(ρ² + ‖(F, f)‖) + Nρ‖h‖`, the bound on `sup_t ‖Φ(v)‖` over
/// the ball of radius ρ.
pub fn phi_bound(k: &ConstantSet, norms: &DataNorms, rho: f64) -> f64 {
    k.c * norms.initial + k.m * (rho * rho + norms.forcing) + k.n * rho * norms.h
}

/// `2Mρ + N‖h‖`, the Lipschitz constant of Φ on the ball.
pub fn contraction_bound(k: &ConstantSet, norms: &DataNorms, rho: f64) -> f64 {
    2.0 * k.m * rho + k.n * norms.h
}
