//! θ-scheme time stepping, one banded solve per angular mode.

use super::bounds::SemigroupConfig;
use crate::band::{BandLu, Banded};
use crate::error::{param, Result};
use crate::geometry::{Grid, ModeOps, ScalarField, State, VectorField};
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Which generator is stepped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// Laplace–Beltrami Δ_g
    Scalar,
    /// Bochner Laplacian Δ⃗
    Bochner,
    /// Ebin–Marsden `Δ⃗ - (d-1)`
    EbinMarsden,
}

struct ModeStep {
    lhs: BandLu,
    rhs: Banded,
}

/// Factorised single substep of length `k`.
pub struct Stepper {
    gen: Generator,
    k: f64,
    decay: f64,
    modes: Vec<ModeStep>,
}

impl Stepper {
    fn new(grid: &Grid, gen: Generator, k: f64, theta: f64) -> Result<Self> {
        let modes = grid
            .exec()
            .map(grid.n_modes(), |m| {
                let ops = ModeOps::new(grid, m);
                let a = match gen {
                    Generator::Scalar => Banded::probe(grid.n_tau(), |x| ops.laplace(x)),
                    _ => Banded::probe(ops.vec_len(), |x| ops.bochner_packed(x)),
                };
                let rhs = a.scaled_shift((1.0 - theta) * k, 1.0);
                let lhs = a.scaled_shift(-theta * k, 1.0).factor()?;
                Ok(ModeStep { lhs, rhs })
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let decay = if gen == Generator::EbinMarsden { (-((grid.d() - 1) as f64) * k).exp() } else { 1.0 };
        Ok(Stepper { gen, k, decay, modes })
    }

    pub fn substep(&self) -> f64 {
        self.k
    }

    pub fn generator(&self) -> Generator {
        self.gen
    }

    /// Advance mode `m` by `n` substeps in place.
    pub fn advance_mode(&self, m: usize, x: &mut [C64], n: usize) {
        let st = &self.modes[m];
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for _ in 0..n {
            st.rhs.matvec(x, &mut y);
            st.lhs.solve_in_place(&mut y);
            if self.decay != 1.0 {
                y.iter_mut().for_each(|v| *v *= self.decay);
            }
            x.copy_from_slice(&y);
        }
    }
}

/// Number of substeps used for time `t`.
pub fn substeps_for(t: f64, cfg: &SemigroupConfig) -> usize {
    ((t * cfg.cn_steps_per_unit_time).ceil() as usize).max(4)
}

/// Heat semigroups e^{tΔ_g}, e^{tΔ⃗}, e^{tL} on one grid, with cached
/// factorisations.
pub struct Semigroup {
    grid: Grid,
    cfg: SemigroupConfig,
    cache: Mutex<HashMap<(Generator, u64), Arc<Stepper>>>,
}

impl Semigroup {
    pub fn new(grid: &Grid, cfg: SemigroupConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Semigroup { grid: grid.clone(), cfg, cache: Mutex::new(HashMap::new()) })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &SemigroupConfig {
        &self.cfg
    }

    /// Stepper and substep count realising time `t > 0`.
    pub fn plan(&self, gen: Generator, t: f64) -> Result<(Arc<Stepper>, usize)> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(param("t", format!("need t > 0, got {t}")));
        }
        let n = substeps_for(t, &self.cfg);
        let k = t / n as f64;
        let key = (gen, k.to_bits());
        if let Some(s) = self.cache.lock().unwrap().get(&key) {
            return Ok((s.clone(), n));
        }
        let s = Arc::new(Stepper::new(&self.grid, gen, k, self.cfg.theta_scheme)?);
        self.cache.lock().unwrap().insert(key, s.clone());
        Ok((s, n))
    }

    /// Apply to scalar modes `[m][j]` in place.
    pub fn apply_scalar_modes(&self, modes: &mut [Vec<C64>], t: f64) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        let (s, n) = self.plan(Generator::Scalar, t)?;
        self.grid.exec().for_each_mut(modes, |m, x| s.advance_mode(m, x, n));
        Ok(())
    }

    /// Apply to packed vector modes in place.
    pub fn apply_vector_modes(&self, gen: Generator, modes: &mut [Vec<C64>], t: f64) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        let (s, n) = self.plan(gen, t)?;
        self.grid.exec().for_each_mut(modes, |m, x| s.advance_mode(m, x, n));
        Ok(())
    }

    pub fn apply_scalar(&self, f: &ScalarField, t: f64) -> Result<ScalarField> {
        let g = &self.grid;
        let mut modes = g.to_modes(f.values());
        self.apply_scalar_modes(&mut modes, t)?;
        ScalarField::from_values(g, g.from_modes(&modes))
    }

    pub fn apply_vector_with(&self, gen: Generator, v: &VectorField, t: f64) -> Result<VectorField> {
        let g = &self.grid;
        let mut modes = pack_vector(g, v);
        self.apply_vector_modes(gen, &mut modes, t)?;
        Ok(unpack_vector(g, &modes))
    }

    /// e^{tL} with L the Ebin–Marsden operator.
    pub fn apply_vector(&self, v: &VectorField, t: f64) -> Result<VectorField> {
        self.apply_vector_with(Generator::EbinMarsden, v, t)
    }

    /// Block-diagonal e^{-tA}(u, θ) = (e^{tL}u, e^{tΔ_g}θ).
    pub fn apply_state(&self, s: &State, t: f64) -> Result<State> {
        Ok(State { u: self.apply_vector(&s.u, t)?, theta: self.apply_scalar(&s.theta, t)?, t: s.t + t })
    }
}

/// Physical vector field to packed per-mode vectors.
pub fn pack_vector(g: &Grid, v: &VectorField) -> Vec<Vec<C64>> {
    let a = g.to_modes(v.tau());
    let b = if g.d() == 2 { g.to_modes(v.phi()) } else { vec![Vec::new(); g.n_modes()] };
    (0..g.n_modes()).map(|m| ModeOps::new(g, m).pack(&a[m], &b[m])).collect()
}

pub fn unpack_vector(g: &Grid, modes: &[Vec<C64>]) -> VectorField {
    let (a, b): (Vec<_>, Vec<_>) = modes.iter().enumerate().map(|(m, x)| ModeOps::new(g, m).unpack(x)).unzip();
    crate::geometry::vector_from_modes(g, &a, &b)
}

/// θ-scheme application, free-function form.
pub fn semigroup_cn_apply_scalar(f: &ScalarField, t: f64, cfg: &SemigroupConfig) -> Result<ScalarField> {
    Semigroup::new(f.grid(), *cfg)?.apply_scalar(f, t)
}

pub fn semigroup_cn_apply_vector(v: &VectorField, t: f64, cfg: &SemigroupConfig) -> Result<VectorField> {
    Semigroup::new(v.grid(), *cfg)?.apply_vector(v, t)
}

pub fn matrix_semigroup_apply(s: &State, t: f64, cfg: &SemigroupConfig) -> Result<State> {
    Semigroup::new(s.grid(), *cfg)?.apply_state(s, t)
}
