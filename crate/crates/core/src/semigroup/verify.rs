//! Numerical checks of the dispersive and smoothing estimates.

use super::bounds::{dispersive_bound, smoothing_bound, SemigroupConfig};
use super::cn::Semigroup;
use super::kernel::{heat_kernel_closed, scalar_semigroup_kernel_apply};
use crate::error::{param, Result};
use crate::geometry::{build_grid_with, div_tensor, Grid, ScalarField, TensorField, VectorField};
use crate::projection::Projector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Allowed excess of the fitted dispersive constant over the continuum one.
pub const KERNEL_CONSTANT_SLACK: f64 = 2.0;

/// Knobs of [`verify_semigroup`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// random nonnegative data in the domination suite
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    /// small-time window of the slope fit
    pub slope_t: [f64; 2],
    /// cells of the fine radial grid used for the slope
    pub slope_n_tau: usize,
    pub slope_tau_max: f64,
    pub slope_tol: f64,
    /// random tensors in the smoothing suite
    pub smoothing_samples: usize,
    /// Lebesgue exponent p of the smoothing check (`L^{p/2} → L^p`)
    pub smoothing_p: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 7,
            samples: 20,
            t_min: 0.05,
            t_max: 5.0,
            n_times: 24,
            slope_t: [0.01, 0.1],
            slope_n_tau: 300,
            slope_tau_max: 3.0,
            slope_tol: 0.1,
            smoothing_samples: 4,
            smoothing_p: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingRow {
    pub t: f64,
    /// worst `‖e^{tL} ℙ div F‖_p / ‖F‖_{p/2}` over the suite
    pub measured: f64,
    pub bound: f64,
    pub bound_with_ricci: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub d: usize,
    pub slope_times: Vec<f64>,
    pub slope_ratios: Vec<f64>,
    pub slope: f64,
    pub slope_target: f64,
    pub slope_ok: bool,
    /// least constant dominating the random suite
    pub fitted_constant: f64,
    /// `sup_t p_t(0) / bound(t)`, the sharp continuum constant
    pub kernel_constant: f64,
    pub times: Vec<f64>,
    pub bound: Vec<f64>,
    /// worst `‖e^{tΔ}θ‖_∞ / (bound · ‖θ‖_1)` over the random suite
    pub worst_ratio: Vec<f64>,
    pub domination_ok: bool,
    pub smoothing: Vec<SmoothingRow>,
    pub smoothing_constant: f64,
    pub smoothing_constant_with_ricci: f64,
}

impl EstimateReport {
    pub fn passed(&self) -> bool {
        self.slope_ok && self.domination_ok
    }
}

pub fn geometric_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    let r = (b / a).ln();
    (0..n).map(|i| a * (r * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

fn march_scalar(sg: &Semigroup, f: &ScalarField, times: &[f64]) -> Result<Vec<ScalarField>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut cur, mut t) = (f.clone(), 0.0);
    for &s in times {
        cur = sg.apply_scalar(&cur, s - t)?;
        t = s;
        out.push(cur.clone());
    }
    Ok(out)
}

fn march_vector(sg: &Semigroup, v: &VectorField, times: &[f64]) -> Result<Vec<VectorField>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut cur, mut t) = (v.clone(), 0.0);
    for &s in times {
        cur = sg.apply_vector(&cur, s - t)?;
        t = s;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Sup of the kernel evolution of a unit source in the two innermost cells,
/// on a fine radial grid.
fn small_time_ratios(d: usize, opts: &VerifyOptions, times: &[f64]) -> Result<Vec<f64>> {
    let no = if d == 2 { 4 } else { 1 };
    let g = build_grid_with(d, opts.slope_tau_max, opts.slope_n_tau, no, Default::default())?;
    let h = g.dtau();
    let src = ScalarField::from_fn(&g, |t, _| if t < 2.0 * h { 1.0 } else { 0.0 });
    let mass = src.lp_norm(1.0)?;
    times.iter().map(|&t| Ok(scalar_semigroup_kernel_apply(&src, t)?.sup_norm() / mass)).collect()
}

/// Random compactly supported nonnegative bump.
fn random_bump(g: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let tc = rng.gen_range(0.0..2.5);
    let pc = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = rng.gen_range(0.3..1.2);
    let amp = rng.gen_range(0.5..2.0);
    let d3 = g.d() == 3;
    ScalarField::from_fn(g, move |t, p| {
        let dist = if d3 {
            (t - tc).abs()
        } else {
            let c = t.cosh() * tc.cosh() - t.sinh() * tc.sinh() * (p - pc).cos();
            c.max(1.0).acosh()
        };
        let s = 1.0 - (dist / r).powi(2);
        if s > 0.0 {
            amp * s * s
        } else {
            0.0
        }
    })
}

fn random_tensor(g: &Grid, rng: &mut ChaCha8Rng) -> TensorField {
    let tc = rng.gen_range(0.5..2.5);
    let w = rng.gen_range(0.3..0.8);
    let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let k = rng.gen_range(0..3) as f64;
    TensorField::from_fn(g, move |t, p| {
        let e = (-((t - tc) / w).powi(2)).exp() * (1.0 + 0.5 * (k * p).cos());
        [c[0] * e, c[1] * e, c[2] * e, c[3] * e]
    })
}

/// Dispersive (`L^1 → L^∞`) and smoothing (`L^{p/2} → L^p` after ℙ div)
/// checks of the scalar and vector heat semigroups on `grid`.
pub fn verify_semigroup(grid: &Grid, cfg: &SemigroupConfig, opts: &VerifyOptions) -> Result<EstimateReport> {
    cfg.validate()?;
    if opts.n_times < 2 || !(opts.t_min > 0.0 && opts.t_max > opts.t_min) {
        return Err(param("times", "need n_times >= 2 and 0 < t_min < t_max"));
    }
    let d = grid.d();
    let inf = f64::INFINITY;

    let slope_times = geometric_times(opts.slope_t[0], opts.slope_t[1], 8);
    let slope_ratios = small_time_ratios(d, opts, &slope_times)?;
    let slope = loglog_slope(&slope_times, &slope_ratios);
    let slope_target = -0.5 * d as f64;
    let slope_ok = ((slope - slope_target) / slope_target).abs() <= opts.slope_tol;

    let sg = Semigroup::new(grid, *cfg)?;
    let times = geometric_times(opts.t_min, opts.t_max, opts.n_times);
    let bound: Vec<f64> = times.iter().map(|&t| dispersive_bound(1.0, inf, t, cfg, d)).collect::<Result<_>>()?;
    let ratio = |f: &ScalarField| -> Result<Vec<f64>> {
        let l1 = f.lp_norm(1.0)?;
        Ok(march_scalar(&sg, f, &times)?.iter().zip(&bound).map(|(x, b)| x.sup_norm() / (b * l1)).collect())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bumps: Vec<ScalarField> = (0..opts.samples).map(|_| random_bump(grid, &mut rng)).collect();
    let mut worst_ratio = vec![0.0f64; times.len()];
    for r in grid.exec().map(bumps.len(), |i| ratio(&bumps[i])) {
        for (w, x) in worst_ratio.iter_mut().zip(r?) {
            *w = w.max(x);
        }
    }
    let fitted_constant = worst_ratio.iter().cloned().fold(0.0, f64::max);
    // ‖e^{tΔ}θ‖_∞ ≤ p_t(0) ‖θ‖_1 for θ ≥ 0
    let kernel_constant = times
        .iter()
        .zip(&bound)
        .map(|(&t, b)| Ok(heat_kernel_closed(d, t, 0.0)? / b))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let domination_ok = fitted_constant.is_finite()
        && fitted_constant > 0.0
        && fitted_constant <= KERNEL_CONSTANT_SLACK * kernel_constant;

    let proj = Projector::new(grid)?;
    let p = opts.smoothing_p;
    let mut measured = vec![0.0f64; times.len()];
    for _ in 0..opts.smoothing_samples {
        let f = random_tensor(grid, &mut rng);
        let v = proj.project(&div_tensor(&f))?;
        let fp = f.lp_norm(p / 2.0)?;
        for (m, x) in measured.iter_mut().zip(march_vector(&sg, &v, &times)?) {
            *m = m.max(x.lp_norm(p)? / fp);
        }
    }
    let mut smoothing = Vec::with_capacity(times.len());
    let (mut sc, mut scr) = (0.0f64, 0.0f64);
    for (&t, &m) in times.iter().zip(&measured) {
        let b = smoothing_bound(p / 2.0, p, t, cfg, d, false)?;
        let br = smoothing_bound(p / 2.0, p, t, cfg, d, true)?;
        sc = sc.max(m / b);
        scr = scr.max(m / br);
        smoothing.push(SmoothingRow { t, measured: m, bound: b, bound_with_ricci: br });
    }

    Ok(EstimateReport {
        d,
        slope_times,
        slope_ratios,
        slope,
        slope_target,
        slope_ok,
        fitted_constant,
        kernel_constant,
        times,
        bound,
        worst_ratio,
        domination_ok,
        smoothing,
        smoothing_constant: sc,
        smoothing_constant_with_ricci: scr,
    })
}
