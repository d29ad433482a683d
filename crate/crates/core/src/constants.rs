//! Closed-form constants of the existence, uniqueness and stability bounds.
//!
//! Everything downstream (Picard smallness checks, the stability bound,
//! the periodic solver) reads its constants from here.

use crate::error::{param, Error, Result};
use crate::semigroup::gamma_pq;
use serde::Serialize;

/// Distance `p - d` below which `bound_M` is flagged as near-critical.
pub const NEAR_CRITICAL_GAP: f64 = 0.05;

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(param("x", format!("gamma_fn needs x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// ∫₀^x τ^{s-1} e^{-rate·τ} dτ for s > 0, rate ≥ 0, x ≥ 0.
pub fn gamma_moment(s: f64, rate: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0 && rate >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if rate == 0.0 {
        return x.powf(s) / s;
    }
    let z = rate * x;
    // tiny z: the series start is more accurate than the library's
    // regularised form
    if z < 1e-8 {
        return x.powf(s) * (1.0 / s - z / (s + 1.0));
    }
    rate.powf(-s) * statrs::function::gamma::gamma_li(s, z)
}

fn check_pd(p: f64, d: usize) -> Result<()> {
    if d != 2 && d != 3 {
        return Err(Error::Dimension(d));
    }
    if !(p > d as f64) {
        return Err(Error::Hypothesis(format!("need p > d, got p = {p}, d = {d}")));
    }
    Ok(())
}

/// `C^{2/p} (β^{θ-1} Γ(1-θ) + 1/β)` with θ = d/p.
pub fn bound_n(c: f64, p: f64, beta: f64, d: usize) -> Result<f64> {
    check_pd(p, d)?;
    if !(beta > 0.0) {
        return Err(param("beta", "must be positive"));
    }
    let theta = d as f64 / p;
    Ok(c.powf(2.0 / p) * (beta.powf(theta - 1.0) * gamma_fn(1.0 - theta)? + 1.0 / beta))
}

/// `C^{1/p+1/d} (β̃^{θ̃-1} Γ(1-θ̃) + 1/β̃)` with θ̃ = (d/2)(1/p + 1/d).
pub fn bound_m(c: f64, p: f64, d: usize, beta_tilde: f64) -> Result<f64> {
    check_pd(p, d)?;
    if !(beta_tilde > 0.0) {
        return Err(param("beta_tilde", "must be positive"));
    }
    let df = d as f64;
    let tt = 0.5 * df * (1.0 / p + 1.0 / df);
    Ok(c.powf(1.0 / p + 1.0 / df) * (beta_tilde.powf(tt - 1.0) * gamma_fn(1.0 - tt)? + 1.0 / beta_tilde))
}

/// Singular exponents (θ, θ̃) used by the stability argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub theta: f64,
    pub theta_tilde: f64,
}

impl Exponents {
    /// θ = 2/p, θ̃ = 1/p + 1/d.
    pub fn stability(p: f64, d: usize) -> Self {
        Exponents { theta: 2.0 / p, theta_tilde: 1.0 / p + 1.0 / d as f64 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("theta_tilde", self.theta_tilde)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(param(name, format!("exponent must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// Denominator of C_δ. Shared with the `D` cone-operator bound.
pub(crate) fn d_norm(rho: f64, c_tilde: f64, gamma: f64, delta: f64, h_norm: f64, e: Exponents) -> Result<f64> {
    e.validate()?;
    if !(delta < gamma) {
        return Err(Error::Hypothesis(format!("need delta < gamma ({delta} >= {gamma})")));
    }
    let g = gamma - delta;
    Ok(2.0 * rho * c_tilde * (g.powf(e.theta_tilde - 1.0) * gamma_fn(1.0 - e.theta_tilde)? + 2.0 / gamma)
        + c_tilde * h_norm * (g.powf(e.theta - 1.0) * gamma_fn(1.0 - e.theta)? + 2.0 / gamma))
}

/// `C_δ = M / (1 - ‖D‖)`.
pub fn c_delta(m_pref: f64, rho: f64, c_tilde: f64, gamma: f64, delta: f64, h_norm: f64, e: Exponents) -> Result<f64> {
    let den = 1.0 - d_norm(rho, c_tilde, gamma, delta, h_norm, e)?;
    if !(den > 0.0) {
        return Err(Error::Hypothesis(format!("C_delta denominator {den:.4e} <= 0")));
    }
    Ok(m_pref / den)
}

/// `C̃ = max{C^{2/p}, C^{1/p+1/d}}`.
pub fn c_tilde(c: f64, p: f64, d: usize) -> f64 {
    c.powf(2.0 / p).max(c.powf(1.0 / p + 1.0 / d as f64))
}

/// All constants for one (d, p, δ_d, C).
#[derive(Debug, Clone, Serialize)]
pub struct TheoremConstants {
    pub d: usize,
    pub p: f64,
    pub delta_d: f64,
    pub c: f64,
    pub gamma_pp: f64,
    pub gamma_p3_p: f64,
    pub gamma_p2_p: f64,
    /// β = γ_{p/3,p}
    pub beta: f64,
    pub theta: f64,
    #[serde(rename = "N")]
    pub n: f64,
    /// β̃ = (γ_{p,p} + γ_{p/2,p}) / 2
    pub beta_tilde: f64,
    pub theta_tilde: f64,
    /// Bilinear bound. The forcing operator shares its formula.
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "M_bilinear")]
    pub m_bilinear: f64,
    #[serde(rename = "M_forcing")]
    pub m_forcing: f64,
    pub near_critical: bool,
    /// min{γ_{p,p}, γ_{p/3,p}, β̃}
    pub stability_gamma: f64,
    pub c_tilde: f64,
    pub stability_exponents: Exponents,
}

impl TheoremConstants {
    pub fn new(d: usize, p: f64, delta_d: f64, c: f64) -> Result<Self> {
        check_pd(p, d)?;
        if !(delta_d > 0.0) {
            return Err(param("delta_d", "must be positive"));
        }
        if !(c >= 1.0) {
            return Err(param("C", format!("must be >= 1, got {c}")));
        }
        if p < 3.0 {
            return Err(Error::Hypothesis(format!("Hölder exponent p/3 must be >= 1, got p = {p}")));
        }
        let gamma_pp = gamma_pq(p, p, delta_d)?;
        let gamma_p3_p = gamma_pq(p / 3.0, p, delta_d)?;
        let gamma_p2_p = gamma_pq(p / 2.0, p, delta_d)?;
        let beta = gamma_p3_p;
        let beta_tilde = 0.5 * (gamma_pp + gamma_p2_p);
        let n = bound_n(c, p, beta, d)?;
        let m = bound_m(c, p, d, beta_tilde)?;
        let df = d as f64;
        Ok(TheoremConstants {
            d,
            p,
            delta_d,
            c,
            gamma_pp,
            gamma_p3_p,
            gamma_p2_p,
            beta,
            theta: df / p,
            n,
            beta_tilde,
            theta_tilde: 0.5 * df * (1.0 / p + 1.0 / df),
            m,
            m_bilinear: m,
            m_forcing: m,
            near_critical: p - df < NEAR_CRITICAL_GAP,
            stability_gamma: gamma_pp.min(gamma_p3_p).min(beta_tilde),
            c_tilde: c_tilde(c, p, d),
            stability_exponents: Exponents::stability(p, d),
        })
    }
}
