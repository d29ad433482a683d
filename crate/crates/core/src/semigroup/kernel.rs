//! Closed-form heat kernels of H^2 and H^3 and radial convolution.

use crate::error::{param, Error, Result};
use crate::geometry::ScalarField;
use gauss_quad::GaussLegendre;
use std::f64::consts::{PI, SQRT_2};

/// ln of the smallest kernel value kept before treating it as zero.
const LOG_CUTOFF: f64 = -740.0;

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(param("t", format!("time must be positive, got {t}")))
    }
}

/// Heat kernel `p_t(r)` of H^d at geodesic distance r.
pub fn heat_kernel_closed(d: usize, t: f64, r: f64) -> Result<f64> {
    check_t(t)?;
    if !(r >= 0.0) {
        return Err(param("r", "distance must be nonnegative"));
    }
    match d {
        3 => Ok(kernel3(t, r)),
        2 => Ok(kernel2(t, r)),
        _ => Err(Error::Dimension(d)),
    }
}

fn kernel3(t: f64, r: f64) -> f64 {
    let ratio = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r / r.sinh() };
    (4.0 * PI * t).powf(-1.5) * (-t - r * r / (4.0 * t)).exp() * ratio
}

/// `√2 e^{-t/4} (4πt)^{-3/2} ∫_r^∞ s e^{-s²/4t} / √(cosh s - cosh r) ds`,
/// evaluated after the substitution `s = r + w²`.
fn kernel2(t: f64, r: f64) -> f64 {
    let smax = (-LOG_CUTOFF * 4.0 * t).sqrt();
    if r >= smax {
        return 0.0;
    }
    let integrand = |w: f64| {
        let q = 0.5 * w * w;
        let s = r + w * w;
        if s == 0.0 {
            return 0.0;
        }
        let ratio = if q < 1e-10 { 1.0 } else { q / q.sinh() };
        2.0 * s * (-s * s / (4.0 * t)).exp() * ratio.sqrt() / (r + q).sinh().sqrt()
    };
    let wmax = (smax - r).sqrt();
    let rough = quadrature::integrate(integrand, 0.0, wmax, 1e-6).integral;
    let fine = quadrature::integrate(integrand, 0.0, wmax, 1e-13 * rough.abs().max(1e-300));
    SQRT_2 * (-t / 4.0).exp() * (4.0 * PI * t).powf(-1.5) * fine.integral
}

/// Geodesic distance between (τ, 0) and (τ', θ), cancellation free.
fn distance(tau: f64, tau2: f64, theta: f64) -> f64 {
    let a = (0.5 * (tau - tau2)).sinh();
    let b = (0.5 * theta).sin();
    2.0 * (a * a + tau.sinh() * tau2.sinh() * b * b).sqrt().asinh()
}

/// `p_t` tabulated in ρ, interpolated in ln p.
struct Table2 {
    step: f64,
    logp: Vec<f64>,
}

impl Table2 {
    fn new(t: f64, step: f64, rmax: f64) -> Self {
        let smax = (-LOG_CUTOFF * 4.0 * t).sqrt().min(rmax);
        let n = (smax / step).ceil() as usize + 4;
        let logp = (0..n)
            .map(|i| {
                let v = kernel2(t, i as f64 * step);
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        Table2 { step, logp }
    }

    fn eval(&self, r: f64) -> f64 {
        let x = r / self.step;
        let i = x.floor() as usize;
        let n = self.logp.len();
        if i + 2 >= n {
            return 0.0;
        }
        let i0 = i.saturating_sub(1).min(n - 4);
        let y = &self.logp[i0..i0 + 4];
        if y.iter().any(|v| !v.is_finite()) {
            return 0.0;
        }
        let u = x - i0 as f64;
        // cubic Lagrange on nodes 0..3
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        (l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]).exp()
    }
}

/// Spherical mean of `p_t(dist((τ,·),(τ',·)))` times the radial measure
/// density of the source shell, i.e. the kernel of the radial problem.
enum RadialKernel {
    Three { t: f64 },
    Two { t: f64, table: Table2 },
}

impl RadialKernel {
    /// `∫_{S} p_t dω'` times `sinh^{d-1} τ'`.
    fn density(&self, tau: f64, tau2: f64) -> f64 {
        match self {
            RadialKernel::Three { t } => {
                // p_t sinh ρ = c ρ e^{-ρ²/4t}, integrated in closed form
                let c = (4.0 * PI * t).powf(-1.5) * (-t).exp();
                let near = (-(tau - tau2).powi(2) / (4.0 * t)).exp();
                if near == 0.0 {
                    return 0.0;
                }
                let diff = near * -(-(tau * tau2) / t).exp_m1();
                4.0 * PI * c * 2.0 * t * diff * tau2.sinh() / (2.0 * tau.sinh())
            }
            RadialKernel::Two { t, table } => {
                if (tau - tau2).abs() > (-LOG_CUTOFF * 4.0 * t).sqrt() {
                    return 0.0;
                }
                let f = |th: f64| table.eval(distance(tau, tau2, th));
                let scale = table.eval((tau - tau2).abs()).max(1e-300);
                let v = quadrature::integrate(f, 0.0, PI, 1e-10 * scale).integral;
                2.0 * v * tau2.sinh()
            }
        }
    }
}

/// e^{tΔ_g} f for radial f by convolution with the free-space kernel.
///
/// The profile is reconstructed by local cubics through the cell centres,
/// reflected evenly at the origin and oddly at tau_max, and integrated with
/// Gauss–Legendre panels no wider than √t.
pub fn scalar_semigroup_kernel_apply(f: &ScalarField, t: f64) -> Result<ScalarField> {
    check_t(t)?;
    let g = f.grid();
    if !f.is_radial(1e-12) {
        return Err(Error::NotRadial);
    }
    let prof = f.radial_profile();
    let kernel = if g.d() == 3 {
        RadialKernel::Three { t }
    } else {
        let step = (g.dtau() / 8.0).min(t.sqrt() / 16.0);
        RadialKernel::Two { t, table: Table2::new(t, step, 2.0 * g.tau_max() + 1.0) }
    };
    let taus = g.tau_nodes();
    let n = taus.len();
    let tm = g.tau_max();
    let mut xs = vec![-taus[1], -taus[0]];
    let mut ys = vec![prof[1], prof[0]];
    xs.extend_from_slice(taus);
    ys.extend_from_slice(&prof);
    xs.extend([tm, 2.0 * tm - taus[n - 1]]);
    ys.extend([0.0, -prof[n - 1]]);
    let gl = GaussLegendre::new(8.try_into().unwrap());
    let panel = t.sqrt();
    let out: Vec<f64> = g.exec().map(n, |j| {
        let tau = taus[j];
        let mut acc = 0.0;
        for i in 1..xs.len() - 2 {
            let (x, y) = (&xs[i - 1..i + 3], &ys[i - 1..i + 3]);
            if y.iter().all(|v| *v == 0.0) {
                continue;
            }
            let (a, b) = (xs[i].max(0.0), xs[i + 1]);
            let np = ((b - a) / panel).ceil().max(1.0) as usize;
            let hp = (b - a) / np as f64;
            for p in 0..np {
                let (lo, hi) = (a + p as f64 * hp, a + (p + 1) as f64 * hp);
                acc += gl.integrate(lo, hi, |s| lagrange4(x, y, s) * kernel.density(tau, s));
            }
        }
        acc
    });
    let no = g.n_omega();
    let values = out.iter().flat_map(|v| std::iter::repeat_n(*v, no)).collect();
    ScalarField::from_values(g, values)
}

fn lagrange4(x: &[f64], y: &[f64], s: f64) -> f64 {
    (0..4)
        .map(|i| {
            let w: f64 = (0..4).filter(|&k| k != i).map(|k| (s - x[k]) / (x[i] - x[k])).product();
            w * y[i]
        })
        .sum()
}
