//! Analytic forcing profiles `h`, `F`, `f`.

use crate::error::{param, Result};
use crate::geometry::{Grid, TensorField, VectorField};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Time factor of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulation {
    #[default]
    Constant,
    /// `cos(2π t / period + phase)`
    Cosine { period: f64, phase: f64 },
}

impl Modulation {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Cosine { period, phase } => (TAU * t / period + phase).cos(),
        }
    }
}

/// Gaussian shell `a exp(-((τ-c)/w)²) (1 + b cos(kφ)) m(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub center_tau: f64,
    pub width: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub angular_mode: u32,
    #[serde(default)]
    pub angular_amplitude: f64,
    #[serde(default)]
    pub modulation: Modulation,
}

impl Profile {
    pub fn new(center_tau: f64, width: f64, amplitude: f64) -> Self {
        Profile {
            center_tau,
            width,
            amplitude,
            angular_mode: 0,
            angular_amplitude: 0.0,
            modulation: Modulation::Constant,
        }
    }

    pub fn with_angle(mut self, mode: u32, amplitude: f64) -> Self {
        self.angular_mode = mode;
        self.angular_amplitude = amplitude;
        self
    }

    pub fn with_modulation(mut self, m: Modulation) -> Self {
        self.modulation = m;
        self
    }

    pub fn value(&self, tau: f64, phi: f64, t: f64) -> f64 {
        let r = (tau - self.center_tau) / self.width;
        let ang = 1.0 + self.angular_amplitude * (self.angular_mode as f64 * phi).cos();
        self.amplitude * (-r * r).exp() * ang * self.modulation.at(t)
    }

    fn validate(&self, what: &'static str) -> Result<()> {
        if !(self.width > 0.0) || !self.center_tau.is_finite() || !self.amplitude.is_finite() {
            return Err(param(what, "profile needs width > 0 and finite centre and amplitude"));
        }
        if let Modulation::Cosine { period, phase } = self.modulation {
            if !(period > 0.0) || !phase.is_finite() {
                return Err(param(what, format!("modulation period must be positive, got {period}")));
            }
        }
        Ok(())
    }
}

fn sum(ps: &[Profile], tau: f64, phi: f64, t: f64) -> f64 {
    ps.iter().map(|p| p.value(tau, phi, t)).sum()
}

/// Buoyancy direction `h`, external stress `F` and reference heat flux `f`.
///
/// `h` and `f` point along ∂_τ. `F` is the symmetric shear `tp = pt` in 2-d
/// and the radial-radial entry `tt` on the radial 3-d grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingSet {
    pub h: Vec<Profile>,
    #[serde(rename = "F")]
    pub big_f: Vec<Profile>,
    pub f: Vec<Profile>,
    pub period: Option<f64>,
}

impl ForcingSet {
    pub fn zero() -> Self {
        ForcingSet::default()
    }

    /// Every cosine modulation must divide `period` when it is set.
    pub fn validate(&self) -> Result<()> {
        for (name, ps) in [("h", &self.h), ("F", &self.big_f), ("f", &self.f)] {
            for p in ps.iter() {
                p.validate(match name {
                    "h" => "forcing.h",
                    "F" => "forcing.F",
                    _ => "forcing.f",
                })?;
            }
        }
        if let Some(t) = self.period {
            if !(t > 0.0) {
                return Err(param("forcing.period", format!("must be positive, got {t}")));
            }
            for p in self.h.iter().chain(&self.big_f).chain(&self.f) {
                if let Modulation::Cosine { period, .. } = p.modulation {
                    let k = t / period;
                    if (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() < 1.0 {
                        return Err(param("forcing.period", format!("modulation period {period} does not divide {t}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.h.is_empty() && self.big_f.is_empty() && self.f.is_empty()
    }

    /// Multiply the amplitudes of `(h, F, f)`.
    pub fn scaled(&self, sh: f64, s_big_f: f64, sf: f64) -> Self {
        let sc = |ps: &[Profile], s: f64| ps.iter().map(|p| Profile { amplitude: p.amplitude * s, ..*p }).collect();
        ForcingSet { h: sc(&self.h, sh), big_f: sc(&self.big_f, s_big_f), f: sc(&self.f, sf), period: self.period }
    }

    pub fn h_at(&self, g: &Grid, t: f64) -> VectorField {
        radial_vector(g, &self.h, t)
    }

    pub fn f_at(&self, g: &Grid, t: f64) -> VectorField {
        radial_vector(g, &self.f, t)
    }

    pub fn big_f_at(&self, g: &Grid, t: f64) -> TensorField {
        let ps = &self.big_f;
        if g.d() == 2 {
            TensorField::from_fn(g, |tau, phi| {
                let s = sum(ps, tau, phi, t);
                [0.0, s, s, 0.0]
            })
        } else {
            TensorField::from_fn(g, |tau, phi| [sum(ps, tau, phi, t), 0.0, 0.0, 0.0])
        }
    }

    /// `sup_t ‖h(t)‖_{p/2}` over `times`.
    pub fn h_norm(&self, g: &Grid, p: f64, times: &[f64]) -> Result<f64> {
        times.iter().try_fold(0.0f64, |m, &t| Ok(m.max(self.h_at(g, t).lp_norm(p / 2.0)?)))
    }

    /// `sup_t max{‖F(t)‖_{p/2}, ‖f(t)‖_{p/2}}` over `times`.
    pub fn forcing_norm(&self, g: &Grid, p: f64, times: &[f64]) -> Result<f64> {
        times.iter().try_fold(0.0f64, |m, &t| {
            Ok(m.max(self.big_f_at(g, t).lp_norm(p / 2.0)?).max(self.f_at(g, t).lp_norm(p / 2.0)?))
        })
    }
}

fn radial_vector(g: &Grid, ps: &[Profile], t: f64) -> VectorField {
    if ps.is_empty() {
        return VectorField::zeros(g);
    }
    VectorField::from_fn(g, |tau, phi| (sum(ps, tau, phi, t), 0.0))
}
