//! Exponential stability of small mild solutions: the explicit decay rate,
//! the cone operators as a discrete Volterra system, and perturbation
//! experiments.

use crate::constants::{c_delta, d_norm, gamma_fn, gamma_moment, Exponents, TheoremConstants};
use crate::duhamel::{Duhamel, Trajectory};
use crate::error::{param, Error, Result};
use crate::geometry::State;
use crate::picard::{
    picard_solve, smallness_check, ConstantSet, DataNorms, IterationReport, ProblemData, SolverConfig,
};
use serde::{Deserialize, Serialize};

/// Start of the log-linear fit window.
pub const FIT_START: f64 = 1.0;

/// Fraction of the admissible δ at which C_δ is reported.
pub const DELTA_FRACTION: f64 = 0.5;

/// Supremum of admissible decay rates,
/// `min{γ/2, γ - (4ρC̃γΓ(1-θ̃)/(γ-8ρC̃))^{1-θ̃}, γ - (γC̃|h|Γ(1-θ)/(γ-2C̃|h|))^{1-θ}}`.
pub fn delta_bound(gamma: f64, rho: f64, c_tilde: f64, e: Exponents, h_norm: f64) -> Result<f64> {
    e.validate()?;
    if !(gamma > 0.0) {
        return Err(param("gamma", "must be positive"));
    }
    if !(rho >= 0.0 && h_norm >= 0.0 && c_tilde > 0.0) {
        return Err(param("rho", "rho, |h| must be >= 0 and C_tilde > 0"));
    }
    let den_a = gamma - 8.0 * rho * c_tilde;
    let den_h = gamma - 2.0 * c_tilde * h_norm;
    if !(den_a > 0.0) {
        return Err(Error::Hypothesis(format!("gamma - 8 rho C_tilde = {den_a:.4e} <= 0")));
    }
    if !(den_h > 0.0) {
        return Err(Error::Hypothesis(format!("gamma - 2 C_tilde |h| = {den_h:.4e} <= 0")));
    }
    let ta = 4.0 * rho * c_tilde * gamma * gamma_fn(1.0 - e.theta_tilde)? / den_a;
    let th = gamma * c_tilde * h_norm * gamma_fn(1.0 - e.theta)? / den_h;
    let b = (0.5 * gamma).min(gamma - ta.powf(1.0 - e.theta_tilde)).min(gamma - th.powf(1.0 - e.theta));
    if !(b > 0.0) {
        return Err(Error::Hypothesis(format!("no admissible decay rate (bound {b:.4e})")));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// kernel rate γ
    A,
    /// kernel rate γ - δ
    D,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConeParams {
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    pub c_tilde: f64,
    pub h_norm: f64,
    pub exps: Exponents,
}

/// Closed-form operator-norm bound of the cone operator on L^∞(0, ∞).
///
/// For `D` with an admissible δ the bound must not exceed 1; a violation is
/// reported as an error.
pub fn cone_operator_norm(kind: ConeKind, q: &ConeParams) -> Result<f64> {
    q.exps.validate()?;
    if !(q.gamma > 0.0) {
        return Err(param("gamma", "must be positive"));
    }
    match kind {
        ConeKind::A => {
            let g = q.gamma;
            let e = q.exps;
            Ok(2.0 * q.rho * q.c_tilde * (g.powf(e.theta_tilde - 1.0) * gamma_fn(1.0 - e.theta_tilde)? + 1.0 / g)
                + q.c_tilde * q.h_norm * (g.powf(e.theta - 1.0) * gamma_fn(1.0 - e.theta)? + 1.0 / g))
        }
        ConeKind::D => {
            if !(q.delta >= 0.0) {
                return Err(param("delta", "must be >= 0"));
            }
            let v = d_norm(q.rho, q.c_tilde, q.gamma, q.delta, q.h_norm, q.exps)?;
            if let Ok(b) = delta_bound(q.gamma, q.rho, q.c_tilde, q.exps, q.h_norm) {
                if q.delta > 0.0 && q.delta < b && v > 1.0 {
                    return Err(Error::Hypothesis(format!("|D| = {v:.6} > 1 for admissible delta = {}", q.delta)));
                }
            }
            Ok(v)
        }
    }
}

/// `λ τ^{-exponent}`, exponent in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub lambda: f64,
    pub exponent: f64,
}

/// Convolution kernel `k(τ) = Σ λ_i τ^{-α_i} e^{-γτ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub terms: Vec<KernelTerm>,
    pub gamma: f64,
}

impl Kernel {
    pub fn exponential(lambda: f64, gamma: f64) -> Self {
        Kernel { terms: vec![KernelTerm { lambda, exponent: 0.0 }], gamma }
    }

    /// `(2ρC̃(1 + τ^{-θ̃}) + C̃|h|(1 + τ^{-θ})) e^{-rτ}`, with r = γ for `A`
    /// and γ - δ for `D`.
    pub fn cone(kind: ConeKind, q: &ConeParams) -> Self {
        let a = 2.0 * q.rho * q.c_tilde;
        let b = q.c_tilde * q.h_norm;
        let rate = match kind {
            ConeKind::A => q.gamma,
            ConeKind::D => q.gamma - q.delta,
        };
        let t = |lambda, exponent| KernelTerm { lambda, exponent };
        Kernel { terms: vec![t(a, 0.0), t(a, q.exps.theta_tilde), t(b, 0.0), t(b, q.exps.theta)], gamma: rate }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return Err(param("gamma", "kernel rate must be >= 0"));
        }
        for t in &self.terms {
            if !(t.lambda >= 0.0 && t.lambda.is_finite()) {
                return Err(param("lambda", format!("must be finite and >= 0, got {}", t.lambda)));
            }
            if !(0.0..1.0).contains(&t.exponent) {
                return Err(param("exponent", format!("must lie in [0, 1), got {}", t.exponent)));
            }
        }
        Ok(())
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let e = (-self.gamma * tau).exp();
        self.terms.iter().map(|t| t.lambda * tau.powf(-t.exponent) * e).sum()
    }

    /// `(∫_a^b k, ∫_a^b τ k)`
    fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        let mut m = (0.0, 0.0);
        for t in self.terms.iter().filter(|t| t.lambda != 0.0) {
            let s = 1.0 - t.exponent;
            m.0 += t.lambda * (gamma_moment(s, self.gamma, b) - gamma_moment(s, self.gamma, a));
            m.1 += t.lambda * (gamma_moment(s + 1.0, self.gamma, b) - gamma_moment(s + 1.0, self.gamma, a));
        }
        m
    }
}

/// Product-trapezoidal discretisation of `(Aψ)(t) = ∫_0^t k(t-s) ψ(s) ds`
/// on the nodes `t_i = i h`, i < n.
#[derive(Debug, Clone)]
pub struct VolterraOperator {
    kernel: Kernel,
    h: f64,
    /// weight of ψ_j, 0 < j ≤ i, indexed by i - j
    interior: Vec<f64>,
    /// weight of ψ_0 in row i
    start: Vec<f64>,
}

impl VolterraOperator {
    pub fn new(kernel: Kernel, h: f64, n: usize) -> Result<Self> {
        kernel.validate()?;
        if !(h > 0.0) || n == 0 {
            return Err(param("h", "need h > 0 and at least one node"));
        }
        let mut interior = vec![0.0; n];
        let mut start = vec![0.0; n];
        for m in 0..n {
            let mf = m as f64;
            let (r0, r1) = kernel.moments(mf * h, (mf + 1.0) * h);
            let right = ((mf + 1.0) * h * r0 - r1) / h;
            let left = if m == 0 {
                0.0
            } else {
                let (l0, l1) = kernel.moments((mf - 1.0) * h, mf * h);
                (l1 - (mf - 1.0) * h * l0) / h
            };
            interior[m] = right + left;
            start[m] = left;
        }
        Ok(VolterraOperator { kernel, h, interior, start })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// Max row sum of the (nonnegative) quadrature matrix.
    pub fn row_sum_norm(&self) -> f64 {
        let mut acc = 0.0;
        let mut best: f64 = 0.0;
        for i in 1..self.len() {
            acc += self.interior[i - 1];
            best = best.max(acc + self.start[i]);
        }
        best
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(param("z", format!("need {} samples, got {}", self.len(), x.len())));
        }
        Ok(())
    }

    fn row(&self, i: usize, x: &[f64]) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let mut s = self.start[i] * x[0];
        for j in 1..i {
            s += self.interior[i - j] * x[j];
        }
        s
    }

    /// Full row `i` including the diagonal.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok((0..self.len()).map(|i| self.row(i, x) + if i > 0 { self.interior[0] * x[i] } else { 0.0 }).collect())
    }

    /// Solves `ψ = Aψ + z` by forward substitution.
    pub fn solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        let norm = self.row_sum_norm();
        if !(norm < 1.0) {
            return Err(Error::NoContraction(norm));
        }
        let diag = 1.0 - self.interior[0];
        let mut psi = vec![0.0; z.len()];
        psi[0] = z[0];
        for i in 1..z.len() {
            psi[i] = (z[i] + self.row(i, &psi)) / diag;
        }
        Ok(psi)
    }
}

/// Solves the discrete `ψ = Aψ + z` for the given kernel on `z.len()` nodes.
pub fn volterra_solve(kernel: &Kernel, h: f64, z: &[f64]) -> Result<Vec<f64>> {
    VolterraOperator::new(kernel.clone(), h, z.len())?.solve(z)
}

/// Log-linear least-squares fit `ln φ ≈ a - δ t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpFit {
    pub delta: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_exponential(t: &[f64], phi: &[f64]) -> Option<ExpFit> {
    let pts: Vec<(f64, f64)> = t.iter().zip(phi).filter(|(_, &p)| p > 0.0).map(|(&t, &p)| (t, p.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let r2 = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some(ExpFit { delta: -slope, log_prefactor: my - slope * mt, r_squared: r2, points: pts.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    /// product norm of the difference per node
    pub phi: Vec<f64>,
    pub perturbation_norm: f64,
    /// differences at or below this are rounding noise
    pub noise_floor: f64,
    pub fit: Option<ExpFit>,
    pub delta_measured: Option<f64>,
    /// smallest C with φ(t) ≤ C e^{-δ_fit t} at every node
    pub c_fit: Option<f64>,
    pub envelope_holds: bool,
    /// φ nonincreasing on the fit window
    pub monotone_after_transient: bool,
    pub trivially_stable: bool,
    pub gamma: f64,
    pub c_tilde: f64,
    pub h_norm: f64,
    pub delta_bound: Option<f64>,
    pub delta_bound_error: Option<String>,
    /// C_δ at δ = DELTA_FRACTION · δ_bound with the bilinear M as prefactor
    pub c_delta_m: Option<f64>,
    /// the same with the semigroup constant C as prefactor
    pub c_delta_c: Option<f64>,
    pub base: IterationReport,
    pub perturbed: IterationReport,
}

impl DecayReport {
    pub fn passes(&self) -> bool {
        self.trivially_stable
            || (self.delta_measured.is_some_and(|d| d > 0.0)
                && self.envelope_holds
                && self.c_fit.is_some_and(f64::is_finite))
    }

    /// `max |φ_other / φ_self - s| / s` over the nodes above both noise floors.
    pub fn scaling_defect(&self, other: &DecayReport, s: f64) -> Result<f64> {
        if self.phi.len() != other.phi.len() {
            return Err(param("other", "reports have different lengths"));
        }
        let floor = self.noise_floor.max(other.noise_floor / s);
        let worst = self
            .phi
            .iter()
            .zip(&other.phi)
            .filter(|(&a, _)| a > floor)
            .map(|(a, b)| (b / a - s).abs() / s)
            .fold(0.0, f64::max);
        Ok(worst)
    }
}

fn converged(r: (Trajectory, IterationReport)) -> Result<(Trajectory, IterationReport)> {
    if !r.1.converged {
        return Err(Error::NoConvergence {
            iters: r.1.iterations,
            last_diff: r.1.diffs.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(r)
}

/// Solves the base and perturbed problems and fits the decay of their
/// difference. `k` are the constants used for the smallness check.
pub fn perturbation_experiment(
    duh: &Duhamel,
    base: &ProblemData,
    perturbation: &State,
    cfg: &SolverConfig,
    k: &ConstantSet,
) -> Result<DecayReport> {
    let g = duh.grid();
    cfg.validate(g.d())?;
    let mut x0 = base.x0.clone();
    x0.axpy(1.0, perturbation);
    let pert = ProblemData { x0, forcing: base.forcing.clone() };
    let nodes: Vec<f64> = (0..cfg.n_nodes()).map(|i| i as f64 * cfg.dt).collect();
    let norms = DataNorms::measure(base, cfg.p, &nodes)?;
    for (name, d) in [("base", base), ("perturbed", &pert)] {
        let n = DataNorms { initial: d.x0.product_norm(cfg.p)?, ..norms };
        let s = smallness_check(&n, k, cfg.rho);
        if !s.all_pass {
            let failed: Vec<&str> = s.conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect();
            return Err(Error::Hypothesis(format!("{name} data not small: {}", failed.join("; "))));
        }
    }
    let (a, b) = g.exec().join(|| picard_solve(duh, base, cfg, None), || picard_solve(duh, &pert, cfg, None));
    let (va, ra) = converged(a?)?;
    let (vb, rb) = converged(b?)?;

    let times = va.time_nodes();
    let phi = vb.sub(&va)?.norms(cfg.p)?;
    let scale = va.sup_norm(cfg.p)?.max(vb.sup_norm(cfg.p)?);
    let noise_floor = 100.0 * f64::EPSILON * scale;
    let perturbation_norm = perturbation.product_norm(cfg.p)?;
    let trivially_stable = phi.iter().all(|&x| x == 0.0);

    let window: Vec<usize> =
        (0..times.len()).filter(|&i| times[i] >= FIT_START - 1e-12 && phi[i] > noise_floor).collect();
    let fit = if trivially_stable {
        None
    } else {
        let tw: Vec<f64> = window.iter().map(|&i| times[i]).collect();
        let pw: Vec<f64> = window.iter().map(|&i| phi[i]).collect();
        fit_exponential(&tw, &pw)
    };
    let delta_measured = fit.map(|f| f.delta);
    let c_fit = delta_measured.map(|d| times.iter().zip(&phi).map(|(t, p)| p * (d * t).exp()).fold(0.0, f64::max));
    let envelope_holds = match (delta_measured, c_fit) {
        (Some(d), Some(c)) => {
            c.is_finite() && times.iter().zip(&phi).all(|(t, p)| *p <= c * (-d * t).exp() * (1.0 + 1e-12))
        }
        _ => trivially_stable,
    };
    let monotone_after_transient = window.windows(2).all(|w| phi[w[1]] <= phi[w[0]]);

    let sg = duh.config();
    let tk = TheoremConstants::new(g.d(), cfg.p, sg.delta_d, sg.c)?;
    let e = tk.stability_exponents;
    let (delta_bound, delta_bound_error) = match delta_bound(tk.stability_gamma, cfg.rho, tk.c_tilde, e, norms.h) {
        Ok(b) => (Some(b), None),
        Err(err) => (None, Some(err.to_string())),
    };
    let cd = |pref: f64| {
        delta_bound
            .and_then(|b| c_delta(pref, cfg.rho, tk.c_tilde, tk.stability_gamma, DELTA_FRACTION * b, norms.h, e).ok())
    };
    Ok(DecayReport {
        times,
        phi,
        perturbation_norm,
        noise_floor,
        fit,
        delta_measured,
        c_fit,
        envelope_holds,
        monotone_after_transient,
        trivially_stable,
        gamma: tk.stability_gamma,
        c_tilde: tk.c_tilde,
        h_norm: norms.h,
        delta_bound,
        delta_bound_error,
        c_delta_m: cd(tk.m_bilinear),
        c_delta_c: cd(tk.c),
        base: ra,
        perturbed: rb,
    })
}
