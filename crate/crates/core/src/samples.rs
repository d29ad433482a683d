//! Seeded random smooth data for the fitting and acceptance suites.

use crate::duhamel::{ForcingSet, Modulation, Profile, Trajectory};
use crate::error::Result;
use crate::geometry::{curl_adjoint, Grid, ScalarField, State};
use rand::Rng;

fn bump<R: Rng>(rng: &mut R) -> (f64, f64, f64, f64) {
    (
        rng.gen_range(0.8..3.0),
        rng.gen_range(0.3..0.8),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

/// Gaussian shell with one angular harmonic, sup-amplitude about `amp`.
pub fn random_scalar<R: Rng>(g: &Grid, rng: &mut R, amp: f64) -> ScalarField {
    let (c, w, s, ph) = bump(rng);
    let k = if g.d() == 2 { rng.gen_range(1..4) as f64 } else { 0.0 };
    let b = if g.d() == 2 { rng.gen_range(0.2..0.8) } else { 0.0 };
    let a = amp * if s < 0.0 { -1.0 } else { 1.0 } * (0.5 + 0.5 * s.abs());
    ScalarField::from_fn(g, move |t, p| a * (-((t - c) / w).powi(2)).exp() * (1.0 + b * (k * p + ph).cos()))
}

/// `(u, θ)` with `u` exactly divergence-free (zero on the radial 3-d grid).
pub fn random_state<R: Rng>(g: &Grid, rng: &mut R, amp: f64) -> State {
    let psi = random_scalar(g, rng, 1.0);
    let mut u = curl_adjoint(&psi);
    let s = u.sup_norm();
    if s > 0.0 {
        u.scale(amp / s);
    }
    State { u, theta: random_scalar(g, rng, amp), t: 0.0 }
}

fn random_profile<R: Rng>(g: &Grid, rng: &mut R, amp: f64, period: Option<f64>) -> Profile {
    let (c, w, s, ph) = bump(rng);
    let mut p = Profile::new(c, w, amp * (0.5 + 0.5 * s.abs()));
    if g.d() == 2 {
        p = p.with_angle(rng.gen_range(1..4), rng.gen_range(0.3..0.9));
    }
    if let Some(t) = period {
        p = p.with_modulation(Modulation::Cosine { period: t / rng.gen_range(1..3) as f64, phase: ph });
    }
    p
}

/// One profile each for `h`, `F`, `f`, with amplitudes `(ah, a_big_f, af)`.
/// With `period` set every profile is modulated by a divisor of it.
pub fn random_forcing<R: Rng>(g: &Grid, rng: &mut R, amps: [f64; 3], period: Option<f64>) -> ForcingSet {
    let one = |rng: &mut R, a: f64| if a == 0.0 { Vec::new() } else { vec![random_profile(g, rng, a, period)] };
    let h = one(rng, amps[0]);
    let big_f = one(rng, amps[1]);
    let f = one(rng, amps[2]);
    ForcingSet { h, big_f, f, period }
}

/// Smooth time-varying θ-trajectory `η(t) = (1 + t/2)^{-1} η_0 + t e^{-t} η_1`.
pub fn random_eta<R: Rng>(g: &Grid, rng: &mut R, amp: f64, dt: f64, n_nodes: usize) -> Result<Trajectory> {
    let (a, b) = (random_scalar(g, rng, amp), random_scalar(g, rng, amp));
    let states = (0..n_nodes)
        .map(|k| {
            let t = k as f64 * dt;
            let mut th = a.clone().scaled(1.0 / (1.0 + 0.5 * t));
            th.axpy(t * (-t).exp(), &b);
            State { theta: th, ..State { t, ..State::zeros(g) } }
        })
        .collect();
    Trajectory::new(states, dt)
}
