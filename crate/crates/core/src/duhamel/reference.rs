//! Direct time stepping of the inhomogeneous linear system, used as an
//! independent check of the Duhamel sweep.

use super::{Duhamel, ForcingSet, Modes, Trajectory};
use crate::band::{BandLu, Banded};
use crate::error::{param, Result};
use crate::geometry::{ModeOps, ScalarField, State};
use crate::semigroup::{pack_vector, unpack_vector};
use num_complex::Complex64 as C64;

struct Cn {
    lhs: BandLu,
    rhs: Banded,
}

impl Cn {
    fn new(a: Banded, k: f64) -> Result<Self> {
        Ok(Cn { rhs: a.scaled_shift(0.5 * k, 1.0), lhs: a.scaled_shift(-0.5 * k, 1.0).factor()? })
    }

    /// `x ← (I - kA/2)^{-1}[(I + kA/2)x + k(g0 + g1)/2]`
    fn step(&self, x: &mut [C64], g0: &[C64], g1: &[C64], k: f64) {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.rhs.matvec(x, &mut y);
        y.iter_mut().zip(g0.iter().zip(g1)).for_each(|(v, (a, b))| *v += (a + b) * (0.5 * k));
        self.lhs.solve_in_place(&mut y);
        x.copy_from_slice(&y);
    }
}

impl Duhamel {
    /// Crank–Nicolson solve of `∂_t u = Lu + ℙ(ηh + div F)`,
    /// `∂_t θ = Δ_g θ + div f` with `substeps` steps per node interval,
    /// forcing evaluated at the step times and `η` interpolated linearly.
    pub fn cn_linear_solve(
        &self,
        x0: &State,
        eta: &Trajectory,
        forcing: &ForcingSet,
        substeps: usize,
    ) -> Result<Trajectory> {
        if substeps == 0 {
            return Err(param("substeps", "must be positive"));
        }
        forcing.validate()?;
        let g = self.grid();
        let exec = g.exec();
        let k = eta.dt() / substeps as f64;
        let n_nodes = eta.len();
        let n_steps = (n_nodes - 1) * substeps;
        let shift = -((g.d() - 1) as f64);

        let rows: Vec<(Modes, Modes)> = exec.map(n_steps + 1, |i| {
            let (node, frac) = (i / substeps, (i % substeps) as f64 / substeps as f64);
            let t = eta.t0() + i as f64 * k;
            let th = if frac == 0.0 {
                eta.state(node).theta.clone()
            } else {
                let mut x = eta.state(node).theta.clone().scaled(1.0 - frac);
                x.axpy(frac, &eta.state(node + 1).theta);
                x
            };
            let (mut fu, ft) = self.forcing_integrand(forcing, t);
            if let Some(c) = self.coupling_integrand(&th, forcing, t) {
                match fu.as_mut() {
                    Some(v) => v.axpy(1.0, &c),
                    None => fu = Some(c),
                }
            }
            let gu = match fu {
                Some(v) => {
                    let mut x = pack_vector(g, &v);
                    self.projector().project_modes(&mut x);
                    x
                }
                None => (0..g.n_modes()).map(|m| vec![C64::new(0.0, 0.0); ModeOps::new(g, m).vec_len()]).collect(),
            };
            let gt = match ft {
                Some(s) => g.to_modes(s.values()),
                None => vec![vec![C64::new(0.0, 0.0); g.n_tau()]; g.n_modes()],
            };
            (gu, gt)
        });

        let u0 = pack_vector(g, &x0.u);
        let t0 = g.to_modes(x0.theta.values());
        let per_mode = exec.map(g.n_modes(), |m| -> Result<(Modes, Modes)> {
            let ops = ModeOps::new(g, m);
            let av = Cn::new(Banded::probe(ops.vec_len(), |x| ops.bochner_packed(x)).scaled_shift(1.0, shift), k)?;
            let asc = Cn::new(Banded::probe(g.n_tau(), |x| ops.laplace(x)), k)?;
            let (mut u, mut th) = (u0[m].clone(), t0[m].clone());
            let (mut us, mut ts) = (vec![u.clone()], vec![th.clone()]);
            for i in 0..n_steps {
                av.step(&mut u, &rows[i].0[m], &rows[i + 1].0[m], k);
                asc.step(&mut th, &rows[i].1[m], &rows[i + 1].1[m], k);
                if (i + 1) % substeps == 0 {
                    us.push(u.clone());
                    ts.push(th.clone());
                }
            }
            Ok((us, ts))
        });
        let per_mode = per_mode.into_iter().collect::<Result<Vec<_>>>()?;
        let states = exec.map(n_nodes, |n| {
            let um: Modes = per_mode.iter().map(|p| p.0[n].clone()).collect();
            let tm: Modes = per_mode.iter().map(|p| p.1[n].clone()).collect();
            Ok(State {
                u: unpack_vector(g, &um),
                theta: ScalarField::from_values(g, g.from_modes(&tm))?,
                t: eta.t0() + n as f64 * eta.dt(),
            })
        });
        Trajectory::new(states.into_iter().collect::<Result<_>>()?, eta.dt())
    }
}
