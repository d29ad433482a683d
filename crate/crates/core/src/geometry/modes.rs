//! Staggered finite-volume operators acting on one angular mode.
//!
//! Radial vector components sit on faces, angular components and scalars at
//! centres. `grad` is the negative adjoint of `div` in the weighted inner
//! products, and the discrete curl satisfies `curl∘grad = 0`,
//! `div∘curl* = 0` exactly.

use super::grid::ManifoldGrid;
use num_complex::Complex64 as C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Operators for angular mode `m` on a grid.
#[derive(Clone, Copy)]
pub struct ModeOps<'g> {
    g: &'g ManifoldGrid,
    m: usize,
    ik: C64,
}

impl<'g> ModeOps<'g> {
    pub fn new(g: &'g ManifoldGrid, m: usize) -> Self {
        ModeOps { g, m, ik: I * g.wavenumber(m) }
    }

    pub fn mode(&self) -> usize {
        self.m
    }

    fn n(&self) -> usize {
        self.g.n_tau()
    }

    /// Length of a packed vector mode (interleaved `a_j, b_j` in 2-d).
    pub fn vec_len(&self) -> usize {
        self.n() * if self.g.d() == 2 { 2 } else { 1 }
    }

    pub fn pack(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        if self.g.d() == 3 {
            return a.to_vec();
        }
        a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect()
    }

    pub fn unpack(&self, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        if self.g.d() == 3 {
            return (x.to_vec(), Vec::new());
        }
        (x.iter().step_by(2).copied().collect(), x.iter().skip(1).step_by(2).copied().collect())
    }

    pub fn div(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let g = self.g;
        (0..self.n())
            .map(|j| {
                let inner = if j == 0 { ZERO } else { a[j - 1] * g.area_f[j - 1] };
                let mut f = (a[j] * g.area_f[j] - inner) / g.vol[j];
                if g.d() == 2 {
                    f += self.ik * b[j] / g.sinh_c[j];
                }
                f
            })
            .collect()
    }

    pub fn grad(&self, f: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let g = self.g;
        let n = self.n();
        let h = g.dtau();
        let a = (0..n).map(|j| if j + 1 < n { (f[j + 1] - f[j]) / h } else { -2.0 * f[j] / h }).collect();
        let b = if g.d() == 2 { (0..n).map(|j| self.ik * f[j] / g.sinh_c[j]).collect() } else { Vec::new() };
        (a, b)
    }

    pub fn laplace(&self, f: &[C64]) -> Vec<C64> {
        let (a, b) = self.grad(f);
        self.div(&a, &b)
    }

    /// Scalar curl on faces (2-d only).
    pub fn curl(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let g = self.g;
        let n = self.n();
        let h = g.dtau();
        (0..n)
            .map(|j| {
                let sb = b[j] * g.sinh_c[j];
                let sb1 = if j + 1 < n { b[j + 1] * g.sinh_c[j + 1] } else { -sb };
                ((sb1 - sb) / h - self.ik * a[j]) / g.sinh_f[j]
            })
            .collect()
    }

    pub fn curl_adj(&self, psi: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let g = self.g;
        let n = self.n();
        let a = (0..n).map(|j| self.ik * psi[j] / g.sinh_f[j]).collect();
        let b = (0..n)
            .map(|j| {
                let prev = if j == 0 { ZERO } else { psi[j - 1] };
                (prev - psi[j]) * (g.sinh_c[j] / g.vol[j])
            })
            .collect();
        (a, b)
    }

    /// `grad div - curl* curl - (d-1)`.
    pub fn bochner(&self, a: &[C64], b: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let dm1 = (self.g.d() - 1) as f64;
        let (mut ra, mut rb) = self.grad(&self.div(a, b));
        for (r, x) in ra.iter_mut().zip(a) {
            *r -= x * dm1;
        }
        if self.g.d() == 2 {
            let (ca, cb) = self.curl_adj(&self.curl(a, b));
            for j in 0..self.n() {
                ra[j] -= ca[j];
                rb[j] -= cb[j] + b[j] * dm1;
            }
        }
        (ra, rb)
    }

    pub fn bochner_packed(&self, x: &[C64]) -> Vec<C64> {
        let (a, b) = self.unpack(x);
        let (ra, rb) = self.bochner(&a, &b);
        self.pack(&ra, &rb)
    }

    /// Divergence of a centred tensor `[tt, tp, pt, pp]` (pp is the
    /// transverse diagonal in 3-d; tp and pt are ignored there).
    pub fn div_tensor(&self, t: [&[C64]; 4]) -> (Vec<C64>, Vec<C64>) {
        let g = self.g;
        let n = self.n();
        let h = g.dtau();
        let [tt, tp, pt, pp] = t;
        let ac = &g.area_c;
        let a = (0..n)
            .map(|j| {
                let af = g.area_f[j];
                let (tt1, pp1) = if j + 1 < n { (tt[j + 1], pp[j + 1]) } else { (-tt[j], -pp[j]) };
                let mut v =
                    (tt1 * ac[j + 1] - tt[j] * ac[j] - pp1 * (ac[j + 1] - af) - pp[j] * (af - ac[j])) / (h * af);
                if g.d() == 2 {
                    let tp1 = if j + 1 < n { tp[j + 1] } else { -tp[j] };
                    v += self.ik * (tp[j] + tp1) * 0.5 / g.sinh_f[j];
                }
                v
            })
            .collect();
        let b = if g.d() == 2 {
            let face_pt: Vec<C64> = (0..n).map(|j| if j + 1 < n { (pt[j] + pt[j + 1]) * 0.5 } else { ZERO }).collect();
            (0..n)
                .map(|j| {
                    let inner = if j == 0 { ZERO } else { face_pt[j - 1] * g.area_f[j - 1] };
                    (face_pt[j] * g.area_f[j] - inner) / g.vol[j]
                        + (tp[j] * g.cosh_c[j] + self.ik * pp[j]) / g.sinh_c[j]
                })
                .collect()
        } else {
            Vec::new()
        };
        (a, b)
    }

    /// Radial face values to centres. Only |m| = 1 is nonzero at τ = 0.
    pub fn face_to_centre(&self, a: &[C64]) -> Vec<C64> {
        let origin = |a0: C64| if self.g.d() == 2 && self.m == 1 { a0 } else { ZERO };
        (0..self.n()).map(|j| if j == 0 { (origin(a[0]) + a[0]) * 0.5 } else { (a[j - 1] + a[j]) * 0.5 }).collect()
    }

    /// Centre values to faces, vanishing on the boundary face.
    pub fn centre_to_face(&self, c: &[C64]) -> Vec<C64> {
        let n = self.n();
        (0..n).map(|j| if j + 1 < n { (c[j] + c[j + 1]) * 0.5 } else { ZERO }).collect()
    }
}
