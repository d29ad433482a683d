use crate::error::{Error, Result};
use crate::par::Exec;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// forward and inverse angular transforms
type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Truncated geodesic-polar discretisation of H^d.
///
/// Scalars and the angular vector component live at cell centres
/// `τ_j = (j + 1/2) h`; the radial vector component lives on the outer cell
/// faces `τ = (j + 1) h`, the last one being the Dirichlet boundary.
/// The angular direction is Fourier-spectral.
pub struct ManifoldGrid {
    d: usize,
    tau_max: f64,
    n_tau: usize,
    n_omega: usize,
    h: f64,
    d_omega: f64,
    tau_nodes: Vec<f64>,
    face_tau: Vec<f64>,
    pub(crate) sinh_c: Vec<f64>,
    pub(crate) cosh_c: Vec<f64>,
    pub(crate) sinh_f: Vec<f64>,
    /// sinh^{d-1} at centres, plus one ghost centre beyond tau_max
    pub(crate) area_c: Vec<f64>,
    /// sinh^{d-1} at faces
    pub(crate) area_f: Vec<f64>,
    /// ∫ sinh^{d-1} over each cell
    pub(crate) vol: Vec<f64>,
    /// sinh^{d-1}(face)·h, half at the outer face
    pub(crate) face_w: Vec<f64>,
    weights: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft: Option<FftPair>,
    exec: Exec,
}

impl fmt::Debug for ManifoldGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldGrid")
            .field("d", &self.d)
            .field("tau_max", &self.tau_max)
            .field("n_tau", &self.n_tau)
            .field("n_omega", &self.n_omega)
            .field("exec", &self.exec)
            .finish()
    }
}

/// Shared handle; fields keep one of these.
pub type Grid = Arc<ManifoldGrid>;

pub fn build_grid(d: usize, tau_max: f64, n_tau: usize, n_omega: usize) -> Result<Grid> {
    ManifoldGrid::new(d, tau_max, n_tau, n_omega, Exec::default()).map(Arc::new)
}

pub fn build_grid_with(d: usize, tau_max: f64, n_tau: usize, n_omega: usize, exec: Exec) -> Result<Grid> {
    ManifoldGrid::new(d, tau_max, n_tau, n_omega, exec).map(Arc::new)
}

/// ∫_a^b sinh τ dτ
fn shell_volume(a: f64, b: f64) -> f64 {
    2.0 * ((a + b) / 2.0).sinh() * ((b - a) / 2.0).sinh()
}

impl ManifoldGrid {
    pub fn new(d: usize, tau_max: f64, n_tau: usize, n_omega: usize, exec: Exec) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::Dimension(d));
        }
        if !(tau_max > 0.0) || !tau_max.is_finite() {
            return Err(Error::Grid(format!("tau_max must be positive, got {tau_max}")));
        }
        if n_tau < 8 {
            return Err(Error::Grid(format!("n_tau must be >= 8, got {n_tau}")));
        }
        if d == 3 && n_omega != 1 {
            return Err(Error::Grid(format!("d = 3 is radial only (n_omega = 1), got {n_omega}")));
        }
        if d == 2 && (n_omega < 4 || !n_omega.is_multiple_of(2)) {
            return Err(Error::Grid(format!("d = 2 needs even n_omega >= 4, got {n_omega}")));
        }
        let h = tau_max / n_tau as f64;
        let pw = |x: f64| x.sinh().powi(d as i32 - 1);
        let tau_nodes: Vec<f64> = (0..n_tau).map(|j| (j as f64 + 0.5) * h).collect();
        let face_tau: Vec<f64> = (0..n_tau).map(|j| (j as f64 + 1.0) * h).collect();
        let mut area_c: Vec<f64> = tau_nodes.iter().map(|&t| pw(t)).collect();
        area_c.push(pw(tau_max + 0.5 * h));
        // d = 3 uses the product form sinh τ_j sinh τ_{j+1}, h sinh² τ_j,
        // which is exact on sinh τ · (radial solutions of u'' = u)
        let (area_f, vol): (Vec<f64>, Vec<f64>) = if d == 2 {
            (
                face_tau.iter().map(|&t| pw(t)).collect(),
                (0..n_tau).map(|j| shell_volume(j as f64 * h, (j + 1) as f64 * h)).collect(),
            )
        } else {
            let s: Vec<f64> = (0..=n_tau).map(|j| ((j as f64 + 0.5) * h).sinh()).collect();
            ((0..n_tau).map(|j| s[j] * s[j + 1]).collect(), (0..n_tau).map(|j| h * s[j] * s[j]).collect())
        };
        let mut face_w: Vec<f64> = area_f.iter().map(|a| a * h).collect();
        face_w[n_tau - 1] *= 0.5;
        let d_omega = if d == 2 { 2.0 * PI / n_omega as f64 } else { 4.0 * PI };
        let weights = vol.iter().flat_map(|v| std::iter::repeat_n(v * d_omega, n_omega)).collect();
        let n_modes = n_omega / 2 + 1;
        let wavenumbers = (0..n_modes).map(|m| if d == 2 && m < n_omega / 2 { m as f64 } else { 0.0 }).collect();
        let fft = (d == 2).then(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n_omega), planner.plan_fft_inverse(n_omega))
        });
        Ok(ManifoldGrid {
            d,
            tau_max,
            n_tau,
            n_omega,
            h,
            d_omega,
            sinh_c: tau_nodes.iter().map(|t| t.sinh()).collect(),
            cosh_c: tau_nodes.iter().map(|t| t.cosh()).collect(),
            sinh_f: face_tau.iter().map(|t| t.sinh()).collect(),
            tau_nodes,
            face_tau,
            area_c,
            area_f,
            vol,
            face_w,
            weights,
            wavenumbers,
            fft,
            exec,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }
    pub fn n_tau(&self) -> usize {
        self.n_tau
    }
    pub fn n_omega(&self) -> usize {
        self.n_omega
    }
    pub fn n_nodes(&self) -> usize {
        self.n_tau * self.n_omega
    }
    /// Radial spacing.
    pub fn dtau(&self) -> f64 {
        self.h
    }
    /// Angular measure per node (4π for the radial d = 3 grid).
    pub fn domega(&self) -> f64 {
        self.d_omega
    }
    pub fn exec(&self) -> Exec {
        self.exec
    }
    pub fn tau_nodes(&self) -> &[f64] {
        &self.tau_nodes
    }
    /// Radii of the faces carrying the radial vector component.
    pub fn face_tau(&self) -> &[f64] {
        &self.face_tau
    }
    pub fn phi_nodes(&self) -> Vec<f64> {
        (0..self.n_omega).map(|k| k as f64 * 2.0 * PI / self.n_omega as f64).collect()
    }
    /// Quadrature weight per node, ring-major (`j * n_omega + k`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Quadrature weight of the face carrying `v_τ[j * n_omega + k]`.
    pub fn face_weight(&self, j: usize) -> f64 {
        self.face_w[j] * self.d_omega
    }
    /// Midpoint-rule weight `sinh^{d-1}(τ_j)·Δτ·Δω`.
    pub fn midpoint_weight(&self, j: usize) -> f64 {
        self.area_c[j] * self.h * self.d_omega
    }
    /// Volume of the truncated ball.
    pub fn total_volume(&self) -> f64 {
        let r = self.tau_max;
        if self.d == 2 {
            2.0 * PI * shell_volume(0.0, r)
        } else {
            // ∫ sinh² = (sinh 2τ)/4 - τ/2
            4.0 * PI * ((2.0 * r).sinh() / 4.0 - r / 2.0)
        }
    }

    /// Number of stored angular modes (`n_omega/2 + 1`, or 1 when radial).
    pub fn n_modes(&self) -> usize {
        self.wavenumbers.len()
    }
    /// First-derivative symbol of mode m (the Nyquist symbol is 0).
    pub fn wavenumber(&self, m: usize) -> f64 {
        self.wavenumbers[m]
    }
    /// Multiplicity of mode m in a real field (2 for interior modes).
    pub fn mode_multiplicity(&self, m: usize) -> f64 {
        if m == 0 || (self.d == 2 && m == self.n_omega / 2) {
            1.0
        } else {
            2.0
        }
    }

    /// Ring-major samples to angular modes `[m][j]`, scaled so that
    /// `f(φ) = Σ_m mult·Re(c_m e^{imφ})`.
    pub fn to_modes(&self, values: &[f64]) -> Vec<Vec<C64>> {
        let (n, no) = (self.n_tau, self.n_omega);
        debug_assert_eq!(values.len(), n * no);
        let nm = self.n_modes();
        let mut out = vec![vec![C64::new(0.0, 0.0); n]; nm];
        match &self.fft {
            None => {
                for j in 0..n {
                    out[0][j] = C64::new(values[j], 0.0);
                }
            }
            Some((fwd, _)) => {
                let mut buf = vec![C64::new(0.0, 0.0); no];
                let s = 1.0 / no as f64;
                for j in 0..n {
                    for k in 0..no {
                        buf[k] = C64::new(values[j * no + k], 0.0);
                    }
                    fwd.process(&mut buf);
                    for m in 0..nm {
                        out[m][j] = buf[m] * s;
                    }
                }
            }
        }
        out
    }

    pub fn from_modes(&self, modes: &[Vec<C64>]) -> Vec<f64> {
        let (n, no) = (self.n_tau, self.n_omega);
        let nm = self.n_modes();
        let mut out = vec![0.0; n * no];
        match &self.fft {
            None => {
                for j in 0..n {
                    out[j] = modes[0][j].re;
                }
            }
            Some((_, inv)) => {
                let mut buf = vec![C64::new(0.0, 0.0); no];
                for j in 0..n {
                    buf[0] = C64::new(modes[0][j].re, 0.0);
                    for m in 1..nm - 1 {
                        buf[m] = modes[m][j];
                        buf[no - m] = modes[m][j].conj();
                    }
                    buf[no / 2] = C64::new(modes[nm - 1][j].re, 0.0);
                    inv.process(&mut buf);
                    for k in 0..no {
                        out[j * no + k] = buf[k].re;
                    }
                }
            }
        }
        out
    }
}
