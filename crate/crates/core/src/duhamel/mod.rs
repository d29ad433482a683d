//! Duhamel integrals `∫_0^t e^{-(t-s)A} g(s) ds` along trajectories.
//!
//! Each step integrates the semigroup exactly against the piecewise-linear
//! interpolant of the integrand (exponential product quadrature), one banded
//! recursion per angular mode.

mod forcing;
mod reference;
mod trajectory;

pub use forcing::{ForcingSet, Modulation, Profile};
pub use trajectory::Trajectory;

use crate::band::{BandLu, Banded};
use crate::constants::TheoremConstants;
use crate::error::{param, Result};
use crate::geometry::{div_tensor, div_vector, Grid, ModeOps, ScalarField, State, TensorField, VectorField};
use crate::projection::Projector;
use crate::semigroup::{pack_vector, unpack_vector, Generator, Semigroup, SemigroupConfig};
use num_complex::Complex64 as C64;
use serde::Serialize;

pub(crate) type Modes = Vec<Vec<C64>>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub const DEFAULT_DT: f64 = 1.0 / 64.0;

/// Integrand rows at one node; `None` is an exact zero.
pub type Integrand = (Option<VectorField>, Option<ScalarField>);

/// Semigroup, projector and generator factorisations for one grid and step.
pub struct Duhamel {
    grid: Grid,
    cfg: SemigroupConfig,
    sg: Semigroup,
    proj: Projector,
    dt: f64,
    scalar_lu: Vec<BandLu>,
    vector_lu: Vec<BandLu>,
}

impl Duhamel {
    pub fn new(grid: &Grid, cfg: SemigroupConfig, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        let shift = -((grid.d() - 1) as f64);
        let lus = grid.exec().map(grid.n_modes(), |m| {
            let ops = ModeOps::new(grid, m);
            let s = Banded::probe(grid.n_tau(), |x| ops.laplace(x)).factor()?;
            let v = Banded::probe(ops.vec_len(), |x| ops.bochner_packed(x)).scaled_shift(1.0, shift).factor()?;
            Ok((s, v))
        });
        let (scalar_lu, vector_lu) = lus.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Ok(Duhamel {
            grid: grid.clone(),
            cfg,
            sg: Semigroup::new(grid, cfg)?,
            proj: Projector::new(grid)?,
            dt,
            scalar_lu,
            vector_lu,
        })
    }

    /// Same grid with step `dt / r`.
    pub fn refined(&self, r: usize) -> Result<Duhamel> {
        Duhamel::new(&self.grid, self.cfg, self.dt / r.max(1) as f64)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn config(&self) -> &SemigroupConfig {
        &self.cfg
    }
    pub fn semigroup(&self) -> &Semigroup {
        &self.sg
    }
    pub fn projector(&self) -> &Projector {
        &self.proj
    }

    /// Nodes covering `[0, t_max]`.
    pub fn n_nodes(&self, t_max: f64) -> usize {
        (t_max / self.dt).round() as usize + 1
    }

    /// Node k of the sweep: `U_k = E U_{k-1} + ∫_0^Δt e^{σA} g̃(t_k - σ) dσ`
    /// with `g̃` linear between the nodes.
    fn sweep(&self, gen: Generator, init: Option<&Modes>, g: &[Modes]) -> Result<Vec<Modes>> {
        let nk = g.len();
        let (st, nsub) = self.sg.plan(gen, self.dt)?;
        let lu = if gen == Generator::Scalar { &self.scalar_lu } else { &self.vector_lu };
        let inv_dt = 1.0 / self.dt;
        let per_mode = self.grid.exec().map(self.grid.n_modes(), |m| {
            let len = g[0][m].len();
            let mut acc = init.map_or_else(|| vec![ZERO; len], |x| x[m].clone());
            let mut out = Vec::with_capacity(nk);
            out.push(acc.clone());
            let mut e_prev = g[0][m].clone();
            st.advance_mode(m, &mut e_prev, nsub);
            for n in 1..nk {
                let (a, b) = (&g[n][m], &g[n - 1][m]);
                let mut e_a = a.clone();
                st.advance_mode(m, &mut e_a, nsub);
                let mut q: Vec<C64> = (0..len).map(|j| (e_prev[j] - e_a[j] - (b[j] - a[j])) * inv_dt).collect();
                lu[m].solve_in_place(&mut q);
                let mut w: Vec<C64> = (0..len).map(|j| e_prev[j] - a[j] - q[j]).collect();
                lu[m].solve_in_place(&mut w);
                st.advance_mode(m, &mut acc, nsub);
                acc.iter_mut().zip(&w).for_each(|(x, y)| *x += y);
                out.push(acc.clone());
                e_prev = e_a;
            }
            out
        });
        let mut nodes: Vec<Modes> = (0..nk).map(|_| Vec::with_capacity(per_mode.len())).collect();
        for mode in per_mode {
            for (k, x) in mode.into_iter().enumerate() {
                nodes[k].push(x);
            }
        }
        Ok(nodes)
    }

    /// Projected packed modes of a vector integrand.
    fn vector_integrand_modes(&self, v: &VectorField) -> Modes {
        let mut x = pack_vector(&self.grid, v);
        self.proj.project_modes(&mut x);
        x
    }

    /// `e^{-t_k A} x0 + ∫_{t_0}^{t_k} e^{-(t_k-s)A} [ℙ g_u(s); g_θ(s)] ds` at
    /// `n_nodes` nodes from `t0`. `integrand(k, t_k)` gives the rows.
    pub fn integrate<F>(&self, x0: Option<&State>, t0: f64, n_nodes: usize, integrand: F) -> Result<Trajectory>
    where
        F: Fn(usize, f64) -> Result<Integrand> + Sync + Send,
    {
        if n_nodes == 0 {
            return Err(param("n_nodes", "need at least one node"));
        }
        let g = &self.grid;
        if let Some(x) = x0 {
            crate::geometry::same_grid(g, x.grid())?;
        }
        let exec = g.exec();
        let rows = exec.map(n_nodes, |k| {
            let (gu, gt) = integrand(k, t0 + k as f64 * self.dt)?;
            Ok((gu.map(|v| self.vector_integrand_modes(&v)), gt.map(|s| g.to_modes(s.values()))))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let any_u = rows.iter().any(|r| r.0.is_some()) || x0.is_some_and(|x| x.u.sup_norm() > 0.0);
        let any_t = rows.iter().any(|r| r.1.is_some()) || x0.is_some_and(|x| x.theta.sup_norm() > 0.0);
        let zero_v: Modes = (0..g.n_modes()).map(|m| vec![ZERO; ModeOps::new(g, m).vec_len()]).collect();
        let zero_s: Modes = vec![vec![ZERO; g.n_tau()]; g.n_modes()];
        let (gu, gt): (Vec<Modes>, Vec<Modes>) = rows
            .into_iter()
            .map(|(a, b)| (a.unwrap_or_else(|| zero_v.clone()), b.unwrap_or_else(|| zero_s.clone())))
            .unzip();
        let u_nodes = if any_u {
            let init = x0.map(|x| pack_vector(g, &x.u));
            Some(self.sweep(Generator::EbinMarsden, init.as_ref(), &gu)?)
        } else {
            None
        };
        let t_nodes = if any_t {
            let init = x0.map(|x| g.to_modes(x.theta.values()));
            Some(self.sweep(Generator::Scalar, init.as_ref(), &gt)?)
        } else {
            None
        };
        let states = exec.map(n_nodes, |k| {
            let u = match &u_nodes {
                Some(u) => {
                    let v = unpack_vector(g, &u[k]);
                    VectorField::from_components(g, v.tau().to_vec(), v.phi().to_vec())?
                }
                None => VectorField::zeros(g),
            };
            let theta = match &t_nodes {
                Some(t) => ScalarField::from_values(g, g.from_modes(&t[k]))?,
                None => ScalarField::zeros(g),
            };
            Ok(State { u, theta, t: t0 + k as f64 * self.dt })
        });
        Trajectory::new(states.into_iter().collect::<Result<_>>()?, self.dt)
    }

    /// `e^{-t_k A} x0` at `n_nodes` nodes.
    pub fn free_evolution(&self, x0: &State, n_nodes: usize) -> Result<Trajectory> {
        self.integrate(Some(x0), x0.t, n_nodes, |_, _| Ok((None, None)))
    }

    /// `(-div(u ⊗ v), -div(u ξ))` with `u` from `x` and `(v, ξ)` from `y`.
    pub fn bilinear_integrand(&self, x: &State, y: &State) -> Result<(VectorField, ScalarField)> {
        let uv = TensorField::outer(&x.u, &y.u)?;
        let bu = div_tensor(&uv).scaled(-1.0);
        let bt = div_vector(&x.u.mul_scalar(&y.theta)).scaled(-1.0);
        Ok((bu, bt))
    }

    /// `(div F(t), div f(t))`.
    pub fn forcing_integrand(&self, forcing: &ForcingSet, t: f64) -> Integrand {
        let g = &self.grid;
        let fu = (!forcing.big_f.is_empty()).then(|| div_tensor(&forcing.big_f_at(g, t)));
        let ft = (!forcing.f.is_empty()).then(|| div_vector(&forcing.f_at(g, t)));
        (fu, ft)
    }

    /// `η h(t)`, or `None` when `h` is absent.
    pub fn coupling_integrand(&self, eta: &ScalarField, forcing: &ForcingSet, t: f64) -> Option<VectorField> {
        (!forcing.h.is_empty()).then(|| forcing.h_at(&self.grid, t).mul_scalar(eta))
    }

    /// `B(v, w)` at every node.
    pub fn op_b_traj(&self, v: &Trajectory, w: &Trajectory) -> Result<Trajectory> {
        v.check_compatible(w)?;
        self.check_step(v)?;
        self.integrate(None, v.t0(), v.len(), |k, _| {
            let (a, b) = self.bilinear_integrand(v.state(k), w.state(k))?;
            Ok((Some(a), Some(b)))
        })
    }

    /// `B(v, w)(t_k)`.
    pub fn op_b(&self, v: &Trajectory, w: &Trajectory, t_index: usize) -> Result<State> {
        let n = self.check_index(v, t_index)?;
        Ok(self.op_b_traj(&v.truncated(n), &w.truncated(n))?.last().clone())
    }

    /// `T_h(η)` at every node, `η` being the θ-row of `eta`.
    pub fn op_th_traj(&self, eta: &Trajectory, forcing: &ForcingSet) -> Result<Trajectory> {
        self.check_step(eta)?;
        self.integrate(None, eta.t0(), eta.len(), |k, t| {
            Ok((self.coupling_integrand(&eta.state(k).theta, forcing, t), None))
        })
    }

    pub fn op_th(&self, eta: &Trajectory, forcing: &ForcingSet, t_index: usize) -> Result<State> {
        let n = self.check_index(eta, t_index)?;
        Ok(self.op_th_traj(&eta.truncated(n), forcing)?.last().clone())
    }

    /// `𝕋(F; f)` at `n_nodes` nodes from `t0`.
    pub fn op_t_forcing_traj(&self, forcing: &ForcingSet, t0: f64, n_nodes: usize) -> Result<Trajectory> {
        forcing.validate()?;
        self.integrate(None, t0, n_nodes, |_, t| Ok(self.forcing_integrand(forcing, t)))
    }

    pub fn op_t_forcing(&self, forcing: &ForcingSet, t_index: usize) -> Result<State> {
        Ok(self.op_t_forcing_traj(forcing, 0.0, t_index + 1)?.last().clone())
    }

    /// `e^{-tA}x0 + T_h(η) + 𝕋(F; f)` on the nodes of `eta`.
    pub fn linear_trajectory(&self, x0: &State, eta: &Trajectory, forcing: &ForcingSet) -> Result<Trajectory> {
        forcing.validate()?;
        self.check_step(eta)?;
        crate::geometry::same_grid(&self.grid, eta.grid())?;
        self.integrate(Some(x0), eta.t0(), eta.len(), |k, t| {
            let (mut fu, ft) = self.forcing_integrand(forcing, t);
            if let Some(c) = self.coupling_integrand(&eta.state(k).theta, forcing, t) {
                match fu.as_mut() {
                    Some(v) => v.axpy(1.0, &c),
                    None => fu = Some(c),
                }
            }
            Ok((fu, ft))
        })
    }

    /// Linear mild solution with the a-priori bound evaluated at exponent `p`.
    pub fn linear_mild_solution(
        &self,
        x0: &State,
        eta: &Trajectory,
        forcing: &ForcingSet,
        p: f64,
    ) -> Result<(Trajectory, LinearBound)> {
        let traj = self.linear_trajectory(x0, eta, forcing)?;
        let k = TheoremConstants::new(self.grid.d(), p, self.cfg.delta_d, self.cfg.c)?;
        let norms = LinearNorms::measure(x0, eta, forcing, p)?;
        let bound = LinearBound::new(traj.sup_norm(p)?, norms, self.cfg.c, k.n, k.m_forcing);
        Ok((traj, bound))
    }

    fn check_step(&self, t: &Trajectory) -> Result<()> {
        if (t.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(param("trajectory", format!("step {} differs from the operator step {}", t.dt(), self.dt)));
        }
        Ok(())
    }

    fn check_index(&self, t: &Trajectory, k: usize) -> Result<usize> {
        if k >= t.len() {
            return Err(param("t_index", format!("{k} is past the last node {}", t.len() - 1)));
        }
        Ok(k + 1)
    }
}

/// Data norms entering the linear bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearNorms {
    pub p: f64,
    /// `‖(u_0, θ_0)‖_p`
    pub initial: f64,
    /// `‖h‖_{∞, L^{p/2}}`
    pub h: f64,
    /// `‖(0, η)‖_{∞, L^p}`
    pub eta: f64,
    /// `‖(F, f)‖_{∞, L^{p/2}}`
    pub forcing: f64,
}

impl LinearNorms {
    pub fn measure(x0: &State, eta: &Trajectory, forcing: &ForcingSet, p: f64) -> Result<Self> {
        let g = eta.grid();
        let times = eta.time_nodes();
        Ok(LinearNorms {
            p,
            initial: x0.product_norm(p)?,
            h: forcing.h_norm(g, p, &times)?,
            eta: eta.theta_sup_norm(p)?,
            forcing: forcing.forcing_norm(g, p, &times)?,
        })
    }
}

/// `sup_t ‖(u, θ)‖_p ≤ C‖(u_0, θ_0)‖ + N‖h‖‖(0, η)‖ + M‖(F, f)‖`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearBound {
    pub solution: f64,
    pub norms: LinearNorms,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl LinearBound {
    pub fn new(solution: f64, norms: LinearNorms, c: f64, n: f64, m: f64) -> Self {
        let rhs = c * norms.initial + n * norms.h * norms.eta + m * norms.forcing;
        LinearBound { solution, norms, c, n, m, rhs, holds: solution <= rhs * (1.0 + 1e-12) }
    }
}

/// One input of the linear solution.
#[derive(Debug, Clone)]
pub struct LinearSample {
    pub x0: State,
    pub eta: Trajectory,
    pub forcing: ForcingSet,
}

/// Least constants dominating the separate parts of a suite, and the bound
/// checked on the combined solutions.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFit {
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub bounds: Vec<LinearBound>,
    pub all_hold: bool,
}

impl Duhamel {
    /// Fit `C`, `N`, `M` from the free, coupling and forcing parts of each
    /// sample, then check the bound on the full solutions.
    pub fn fit_linear_constants(&self, samples: &[LinearSample], p: f64) -> Result<LinearFit> {
        if samples.is_empty() {
            return Err(param("samples", "need at least one sample"));
        }
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let (mut c, mut n, mut m) = (0.0f64, 0.0f64, 0.0f64);
        let mut parts = Vec::with_capacity(samples.len());
        for s in samples {
            let norms = LinearNorms::measure(&s.x0, &s.eta, &s.forcing, p)?;
            let free = self.free_evolution(&s.x0, s.eta.len())?.sup_norm(p)?;
            let th = self.op_th_traj(&s.eta, &s.forcing)?.sup_norm(p)?;
            let tf = self.op_t_forcing_traj(&s.forcing, s.eta.t0(), s.eta.len())?.sup_norm(p)?;
            c = c.max(ratio(free, norms.initial));
            n = n.max(ratio(th, norms.h * norms.eta));
            m = m.max(ratio(tf, norms.forcing));
            parts.push(norms);
        }
        let mut bounds = Vec::with_capacity(samples.len());
        for (s, norms) in samples.iter().zip(parts) {
            let sol = self.linear_trajectory(&s.x0, &s.eta, &s.forcing)?.sup_norm(p)?;
            bounds.push(LinearBound::new(sol, norms, c, n, m));
        }
        let all_hold = bounds.iter().all(|b| b.holds);
        Ok(LinearFit { p, c, n, m, bounds, all_hold })
    }
}
