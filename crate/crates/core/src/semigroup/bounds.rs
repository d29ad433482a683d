use crate::error::{param, Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the heat semigroups and their bound functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupConfig {
    /// dispersive prefactor C ≥ 1
    #[serde(rename = "C")]
    pub c: f64,
    /// spectral constant δ_d > 0
    pub delta_d: f64,
    pub cn_steps_per_unit_time: f64,
    /// 1/2 is Crank–Nicolson, 1 is backward Euler
    pub theta_scheme: f64,
}

impl SemigroupConfig {
    /// C = 1, δ_d = (d-1)²/4, 64 steps per unit time, Crank–Nicolson.
    pub fn for_dim(d: usize) -> Self {
        let dm1 = d as f64 - 1.0;
        SemigroupConfig { c: 1.0, delta_d: 0.25 * dm1 * dm1, cn_steps_per_unit_time: 64.0, theta_scheme: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0) {
            return Err(param("C", format!("must be >= 1, got {}", self.c)));
        }
        if !(self.delta_d > 0.0) {
            return Err(param("delta_d", format!("must be > 0, got {}", self.delta_d)));
        }
        if !(self.cn_steps_per_unit_time >= 16.0) {
            return Err(param("cn_steps_per_unit_time", format!("must be >= 16, got {}", self.cn_steps_per_unit_time)));
        }
        if !(0.5..=1.0).contains(&self.theta_scheme) {
            return Err(param("theta_scheme", format!("must lie in [0.5, 1], got {}", self.theta_scheme)));
        }
        Ok(())
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(param("t", format!("time must be positive, got {t}")))
    }
}

fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0) || !(q >= p) {
        return Err(Error::Hypothesis(format!("need 1 <= p <= q <= inf, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// `C max(t^{-d/2}, 1)`
pub fn h_d(t: f64, cfg: &SemigroupConfig, d: usize) -> Result<f64> {
    check_t(t)?;
    Ok(cfg.c * t.powf(-0.5 * d as f64).max(1.0))
}

/// `(δ_d/2)[(1/p - 1/q) + (8/q)(1 - 1/p)]`
pub fn gamma_pq(p: f64, q: f64, delta_d: f64) -> Result<f64> {
    check_pq(p, q)?;
    let (ip, iq) = (recip(p), recip(q));
    Ok(0.5 * delta_d * ((ip - iq) + 8.0 * iq * (1.0 - ip)))
}

/// `h_d(t)^{1/p-1/q} e^{-t γ_{p,q}}`
pub fn dispersive_bound(p: f64, q: f64, t: f64, cfg: &SemigroupConfig, d: usize) -> Result<f64> {
    let g = gamma_pq(p, q, cfg.delta_d)?;
    Ok(h_d(t, cfg, d)?.powf(recip(p) - recip(q)) * (-t * g).exp())
}

/// Semigroup-after-divergence bound: `h_d(t)^{1/p-1/q+1/d} e^{-t γ_{p,q}}`.
/// With `keep_ricci` the vector semigroup's extra `e^{-(d-1)t}` is kept.
pub fn smoothing_bound(p: f64, q: f64, t: f64, cfg: &SemigroupConfig, d: usize, keep_ricci: bool) -> Result<f64> {
    let g = gamma_pq(p, q, cfg.delta_d)?;
    let extra = if keep_ricci { d as f64 - 1.0 } else { 0.0 };
    Ok(h_d(t, cfg, d)?.powf(recip(p) - recip(q) + 1.0 / d as f64) * (-t * (g + extra)).exp())
}
