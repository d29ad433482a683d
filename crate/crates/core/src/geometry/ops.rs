//! Differential operators on physical-space fields.

use super::field::{ScalarField, TensorField, VectorField};
use super::grid::Grid;
use super::modes::ModeOps;
use num_complex::Complex64 as C64;

type Modes = Vec<Vec<C64>>;

pub(crate) fn vector_modes(v: &VectorField) -> (Modes, Modes) {
    let g = v.grid();
    let a = g.to_modes(v.tau());
    let b = if g.d() == 2 { g.to_modes(v.phi()) } else { vec![Vec::new(); g.n_modes()] };
    (a, b)
}

pub(crate) fn vector_from_modes(g: &Grid, a: &[Vec<C64>], b: &[Vec<C64>]) -> VectorField {
    let phi = if g.d() == 2 { g.from_modes(b) } else { Vec::new() };
    VectorField::from_raw(g, g.from_modes(a), phi)
}

pub fn grad_scalar(f: &ScalarField) -> VectorField {
    let g = f.grid();
    let (a, b): (Modes, Modes) =
        g.to_modes(f.values()).iter().enumerate().map(|(m, x)| ModeOps::new(g, m).grad(x)).unzip();
    vector_from_modes(g, &a, &b)
}

/// Conservative divergence; `Σ w (div v)` telescopes to the boundary flux.
pub fn div_vector(v: &VectorField) -> ScalarField {
    let g = v.grid();
    let (a, b) = vector_modes(v);
    let out: Modes = (0..g.n_modes()).map(|m| ModeOps::new(g, m).div(&a[m], &b[m])).collect();
    ScalarField::from_raw(g, g.from_modes(&out))
}

/// `div ∘ grad` with Dirichlet data at tau_max.
pub fn laplace_beltrami(f: &ScalarField) -> ScalarField {
    let g = f.grid();
    let out: Modes = g.to_modes(f.values()).iter().enumerate().map(|(m, x)| ModeOps::new(g, m).laplace(x)).collect();
    ScalarField::from_raw(g, g.from_modes(&out))
}

/// Bochner (rough) Laplacian via `grad div - curl* curl + Ric`.
pub fn bochner_laplacian(v: &VectorField) -> VectorField {
    let g = v.grid();
    let (a, b) = vector_modes(v);
    let (ra, rb): (Modes, Modes) = (0..g.n_modes()).map(|m| ModeOps::new(g, m).bochner(&a[m], &b[m])).unzip();
    vector_from_modes(g, &ra, &rb)
}

/// `L v = Δ⃗ v - (d-1) v`.
pub fn ebin_marsden(v: &VectorField) -> VectorField {
    let mut out = bochner_laplacian(v);
    out.axpy(-((v.grid().d() - 1) as f64), v);
    out
}

/// Scalar vorticity on the radial faces (2-d); zero on the radial 3-d grid.
pub fn curl(v: &VectorField) -> ScalarField {
    let g = v.grid();
    if g.d() == 3 {
        return ScalarField::zeros(g);
    }
    let (a, b) = vector_modes(v);
    let out: Modes = (0..g.n_modes()).map(|m| ModeOps::new(g, m).curl(&a[m], &b[m])).collect();
    ScalarField::from_raw(g, g.from_modes(&out))
}

/// Divergence-free field `curl* ψ` from a stream function on the radial
/// faces (2-d); zero on the radial 3-d grid.
pub fn curl_adjoint(psi: &ScalarField) -> VectorField {
    let g = psi.grid();
    if g.d() == 3 {
        return VectorField::zeros(g);
    }
    let (a, b): (Modes, Modes) =
        g.to_modes(psi.values()).iter().enumerate().map(|(m, x)| ModeOps::new(g, m).curl_adj(x)).unzip();
    vector_from_modes(g, &a, &b)
}

/// Divergence in the second index, `(div T)_i = ∇_j T_ij`.
pub fn div_tensor(t: &TensorField) -> VectorField {
    let g = t.grid();
    let c = t.components();
    let empty = vec![Vec::new(); g.n_modes()];
    let tt = g.to_modes(&c[0]);
    let pp = g.to_modes(&c[3]);
    let (tp, pt) = if g.d() == 2 { (g.to_modes(&c[1]), g.to_modes(&c[2])) } else { (empty.clone(), empty) };
    let (a, b): (Modes, Modes) =
        (0..g.n_modes()).map(|m| ModeOps::new(g, m).div_tensor([&tt[m], &tp[m], &pt[m], &pp[m]])).unzip();
    vector_from_modes(g, &a, &b)
}
