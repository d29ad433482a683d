//! Leray projector `ℙ = I + grad (-Δ_g)^{-1} div` with Dirichlet data.

use crate::band::{BandLu, Banded};
use crate::error::{param, Result};
use crate::geometry::{div_vector, grad_scalar, Grid, ModeOps, ScalarField, VectorField};
use num_complex::Complex64 as C64;

/// Per-mode factorisations of `-Δ_g`.
pub struct Projector {
    grid: Grid,
    lu: Vec<BandLu>,
}

impl Projector {
    pub fn new(grid: &Grid) -> Result<Self> {
        let lu = grid
            .exec()
            .map(grid.n_modes(), |m| {
                let ops = ModeOps::new(grid, m);
                Banded::probe(grid.n_tau(), |x| ops.laplace(x)).scaled_shift(-1.0, 0.0).factor()
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Projector { grid: grid.clone(), lu })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Solve `-Δ_g φ = rhs` on mode data in place.
    pub fn poisson_modes(&self, modes: &mut [Vec<C64>]) {
        for (lu, x) in self.lu.iter().zip(modes.iter_mut()) {
            lu.solve_in_place(x);
        }
    }

    pub fn poisson_solve(&self, rhs: &ScalarField) -> Result<ScalarField> {
        let g = &self.grid;
        let mut modes = g.to_modes(rhs.values());
        self.poisson_modes(&mut modes);
        ScalarField::from_values(g, g.from_modes(&modes))
    }

    /// `v + grad(poisson_solve(div v))`.
    pub fn project(&self, v: &VectorField) -> Result<VectorField> {
        let phi = self.poisson_solve(&div_vector(v))?;
        let mut out = v.clone();
        out.axpy(1.0, &grad_scalar(&phi));
        Ok(out)
    }

    /// Smallest K with `‖ℙv‖_p ≤ K ‖v‖_p` over `fields`.
    pub fn fitted_bound(&self, fields: &[VectorField], p: f64) -> Result<f64> {
        if fields.is_empty() {
            return Err(param("fields", "need at least one field"));
        }
        let ratios = self.grid.exec().map(fields.len(), |i| {
            let v = &fields[i];
            Ok(self.project(v)?.lp_norm(p)? / v.lp_norm(p)?)
        });
        ratios.into_iter().try_fold(0.0f64, |k, r: Result<f64>| Ok(k.max(r?)))
    }

    /// Projection of packed vector modes in place.
    pub fn project_modes(&self, modes: &mut [Vec<C64>]) {
        let g = &self.grid;
        for (m, x) in modes.iter_mut().enumerate() {
            let ops = ModeOps::new(g, m);
            let (a, b) = ops.unpack(x);
            let mut f = ops.div(&a, &b);
            self.lu[m].solve_in_place(&mut f);
            let (ga, gb) = ops.grad(&f);
            let (a, b) = (
                a.iter().zip(&ga).map(|(p, q)| p + q).collect::<Vec<_>>(),
                b.iter().zip(&gb).map(|(p, q)| p + q).collect::<Vec<_>>(),
            );
            x.copy_from_slice(&ops.pack(&a, &b));
        }
    }
}

pub fn poisson_solve(rhs: &ScalarField) -> Result<ScalarField> {
    Projector::new(rhs.grid())?.poisson_solve(rhs)
}

pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    Projector::new(v.grid())?.project(v)
}
