use super::grid::Grid;
use super::modes::ModeOps;
use crate::error::{param, Error, Result};
use std::sync::Arc;

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(param("p", format!("L^p exponent must be >= 1 or infinite, got {p}")))
    }
}

fn weighted_norm(values: impl Iterator<Item = (f64, f64)>, p: f64) -> f64 {
    if p.is_infinite() {
        return values.map(|(_, v)| v.abs()).fold(0.0, f64::max);
    }
    let s: f64 = values.map(|(w, v)| w * v.abs().powf(p)).sum();
    s.powf(1.0 / p)
}

/// Scalar samples at cell centres, ring-major.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.n_nodes()] }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(param("values", format!("expected {} samples, got {}", grid.n_nodes(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("values", "non-finite sample"));
        }
        Ok(ScalarField { grid: grid.clone(), values })
    }

    /// Samples `f(τ, φ)` at the centres.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let phis = grid.phi_nodes();
        let values =
            grid.tau_nodes().iter().flat_map(|&t| phis.iter().map(move |&p| (t, p))).map(|(t, p)| f(t, p)).collect();
        ScalarField { grid: grid.clone(), values }
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        ScalarField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `(Σ w |f|^p)^{1/p}`, or the max for p = ∞.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        Ok(weighted_norm(self.grid.weights().iter().copied().zip(self.values.iter().copied()), p))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Weighted inner product.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self.grid.weights().iter().zip(&self.values).zip(&other.values).map(|((w, a), b)| w * a * b).sum())
    }

    /// Σ w f
    pub fn integral(&self) -> f64 {
        self.grid.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(s);
        self
    }

    /// `self += s * x`
    pub fn axpy(&mut self, s: f64, x: &ScalarField) {
        debug_assert!(Arc::ptr_eq(&self.grid, &x.grid));
        self.values.iter_mut().zip(&x.values).for_each(|(a, b)| *a += s * b);
    }

    pub fn sub(&self, x: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.axpy(-1.0, x);
        out
    }

    /// Every ring constant to within `tol` of its scale.
    pub fn is_radial(&self, tol: f64) -> bool {
        let no = self.grid.n_omega();
        let scale = self.sup_norm().max(f64::MIN_POSITIVE);
        self.values.chunks(no).all(|ring| ring.iter().all(|v| (v - ring[0]).abs() <= tol * scale))
    }

    /// Ring averages, one per radius.
    pub fn radial_profile(&self) -> Vec<f64> {
        let no = self.grid.n_omega();
        self.values.chunks(no).map(|r| r.iter().sum::<f64>() / no as f64).collect()
    }
}

/// Frame components `(v_τ, v_φ)`; `v_τ` on radial faces, `v_φ` at centres.
/// The radial 3-d grid stores only `v_τ`.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Grid,
    tau: Vec<f64>,
    phi: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let nphi = if grid.d() == 2 { grid.n_nodes() } else { 0 };
        VectorField { grid: grid.clone(), tau: vec![0.0; grid.n_nodes()], phi: vec![0.0; nphi] }
    }

    pub fn from_components(grid: &Grid, tau: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let nphi = if grid.d() == 2 { grid.n_nodes() } else { 0 };
        if tau.len() != grid.n_nodes() || phi.len() != nphi {
            return Err(param("components", "component length does not match the grid"));
        }
        if tau.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(param("components", "non-finite sample"));
        }
        Ok(VectorField { grid: grid.clone(), tau, phi })
    }

    /// `f(τ, φ) -> (v_τ, v_φ)`, sampled on faces for `v_τ` and at centres
    /// for `v_φ`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let phis = grid.phi_nodes();
        let f = &f;
        let tau = grid.face_tau().iter().flat_map(|&t| phis.iter().map(move |&p| f(t, p).0)).collect();
        let phi = if grid.d() == 2 {
            grid.tau_nodes().iter().flat_map(|&t| phis.iter().map(move |&p| f(t, p).1)).collect()
        } else {
            Vec::new()
        };
        VectorField { grid: grid.clone(), tau, phi }
    }

    pub(crate) fn from_raw(grid: &Grid, tau: Vec<f64>, phi: Vec<f64>) -> Self {
        VectorField { grid: grid.clone(), tau, phi }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    pub fn tau_mut(&mut self) -> &mut [f64] {
        &mut self.tau
    }
    pub fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }

    /// Both components at cell centres.
    pub fn centre_components(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let modes = g.to_modes(&self.tau);
        let c: Vec<_> = modes.iter().enumerate().map(|(m, a)| ModeOps::new(g, m).face_to_centre(a)).collect();
        let phi = if g.d() == 2 { self.phi.clone() } else { vec![0.0; g.n_nodes()] };
        (g.from_modes(&c), phi)
    }

    /// Discrete L^p norm of the pointwise frame magnitude. For p = 2 this is
    /// the staggered energy norm, which matches [`VectorField::inner`].
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        if p == 2.0 {
            return Ok(self.inner(self)?.sqrt());
        }
        let (a, b) = self.centre_components();
        let mag = a.iter().zip(&b).map(|(x, y)| x.hypot(*y));
        Ok(weighted_norm(self.grid.weights().iter().copied().zip(mag), p))
    }

    pub fn sup_norm(&self) -> f64 {
        self.tau.iter().chain(&self.phi).map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Staggered weighted inner product.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        let g = &self.grid;
        let no = g.n_omega();
        let mut s = 0.0;
        for (i, (a, b)) in self.tau.iter().zip(&other.tau).enumerate() {
            s += g.face_weight(i / no) * a * b;
        }
        for ((w, a), b) in g.weights().iter().zip(&self.phi).zip(&other.phi) {
            s += w * a * b;
        }
        Ok(s)
    }

    pub fn scale(&mut self, s: f64) {
        self.tau.iter_mut().chain(self.phi.iter_mut()).for_each(|v| *v *= s);
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(s);
        self
    }

    pub fn axpy(&mut self, s: f64, x: &VectorField) {
        debug_assert!(Arc::ptr_eq(&self.grid, &x.grid));
        self.tau.iter_mut().zip(&x.tau).for_each(|(a, b)| *a += s * b);
        self.phi.iter_mut().zip(&x.phi).for_each(|(a, b)| *a += s * b);
    }

    pub fn sub(&self, x: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, x);
        out
    }

    /// Multiply pointwise by a centred scalar (interpolated to faces).
    pub fn mul_scalar(&self, f: &ScalarField) -> VectorField {
        let g = &self.grid;
        let (a, b) = self.centre_components();
        let ca: Vec<f64> = a.iter().zip(f.values()).map(|(x, y)| x * y).collect();
        let tau = centres_to_faces(g, &ca);
        let phi = if g.d() == 2 { b.iter().zip(f.values()).map(|(x, y)| x * y).collect() } else { Vec::new() };
        VectorField { grid: g.clone(), tau, phi }
    }
}

/// Centred radial values to the radial faces (zero on the boundary face).
pub(crate) fn centres_to_faces(g: &Grid, c: &[f64]) -> Vec<f64> {
    let modes = g.to_modes(c);
    let f: Vec<_> = modes.iter().enumerate().map(|(m, x)| ModeOps::new(g, m).centre_to_face(x)).collect();
    g.from_modes(&f)
}

/// Centred d×d frame components `[tt, tp, pt, pp]`. On the radial 3-d grid
/// `pp` holds the common transverse diagonal entry and `tp`, `pt` are empty.
#[derive(Debug, Clone)]
pub struct TensorField {
    grid: Grid,
    comps: [Vec<f64>; 4],
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n_nodes();
        let off = if grid.d() == 2 { n } else { 0 };
        TensorField { grid: grid.clone(), comps: [vec![0.0; n], vec![0.0; off], vec![0.0; off], vec![0.0; n]] }
    }

    /// `f(τ, φ) -> [tt, tp, pt, pp]`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 4]) -> Self {
        let mut t = TensorField::zeros(grid);
        let phis = grid.phi_nodes();
        let no = grid.n_omega();
        for (j, &tau) in grid.tau_nodes().iter().enumerate() {
            for (k, &phi) in phis.iter().enumerate() {
                let v = f(tau, phi);
                let i = j * no + k;
                t.comps[0][i] = v[0];
                t.comps[3][i] = v[3];
                if grid.d() == 2 {
                    t.comps[1][i] = v[1];
                    t.comps[2][i] = v[2];
                }
            }
        }
        t
    }

    /// `u ⊗ v` with components `u_i v_j`.
    pub fn outer(u: &VectorField, v: &VectorField) -> Result<TensorField> {
        same_grid(u.grid(), v.grid())?;
        let g = u.grid();
        let (ua, ub) = u.centre_components();
        let (va, vb) = v.centre_components();
        let mul = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).collect::<Vec<f64>>();
        let comps = if g.d() == 2 {
            [mul(&ua, &va), mul(&ua, &vb), mul(&ub, &va), mul(&ub, &vb)]
        } else {
            [mul(&ua, &va), Vec::new(), Vec::new(), vec![0.0; g.n_nodes()]]
        };
        Ok(TensorField { grid: g.clone(), comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn components(&self) -> &[Vec<f64>; 4] {
        &self.comps
    }
    pub fn components_mut(&mut self) -> &mut [Vec<f64>; 4] {
        &mut self.comps
    }

    pub fn scale(&mut self, s: f64) {
        self.comps.iter_mut().flatten().for_each(|v| *v *= s);
    }

    pub fn axpy(&mut self, s: f64, x: &TensorField) {
        for (a, b) in self.comps.iter_mut().zip(&x.comps) {
            a.iter_mut().zip(b).for_each(|(p, q)| *p += s * q);
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// L^p norm of the pointwise Frobenius norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        let n = self.grid.n_nodes();
        let transverse = (self.grid.d() - 1) as f64;
        let mag = (0..n).map(|i| {
            let mut s = self.comps[0][i].powi(2) + transverse * self.comps[3][i].powi(2);
            if self.grid.d() == 2 {
                s += self.comps[1][i].powi(2) + self.comps[2][i].powi(2);
            }
            s.sqrt()
        });
        Ok(weighted_norm(self.grid.weights().iter().copied().zip(mag), p))
    }
}

/// The pair (u, θ) at time t.
#[derive(Debug, Clone)]
pub struct State {
    pub u: VectorField,
    pub theta: ScalarField,
    pub t: f64,
}

impl State {
    pub fn new(u: VectorField, theta: ScalarField, t: f64) -> Result<Self> {
        same_grid(u.grid(), theta.grid())?;
        Ok(State { u, theta, t })
    }

    pub fn zeros(grid: &Grid) -> Self {
        State { u: VectorField::zeros(grid), theta: ScalarField::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        self.theta.grid()
    }

    /// `max{‖u‖_p, ‖θ‖_p}`.
    pub fn product_norm(&self, p: f64) -> Result<f64> {
        same_grid(self.u.grid(), self.theta.grid())?;
        Ok(self.u.lp_norm(p)?.max(self.theta.lp_norm(p)?))
    }

    pub fn scale(&mut self, s: f64) {
        self.u.scale(s);
        self.theta.scale(s);
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(s);
        self
    }

    pub fn axpy(&mut self, s: f64, x: &State) {
        self.u.axpy(s, &x.u);
        self.theta.axpy(s, &x.theta);
    }

    /// `self - x`, keeping `self.t`.
    pub fn sub(&self, x: &State) -> State {
        let mut out = self.clone();
        out.axpy(-1.0, x);
        out
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if Arc::ptr_eq(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}
