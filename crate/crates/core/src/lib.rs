//! Mild solutions of the Boussinesq system on truncated hyperbolic space.
//!
//! The crate discretises H^2 (full polar grid) and H^3 (radial fields) in
//! geodesic polar coordinates, applies the heat semigroups of the scalar and
//! Ebin–Marsden operators, and builds Duhamel / Picard solvers on top.
//!
//! ```
//! use hypbq_core::geometry::{build_grid, ScalarField};
//!
//! let grid = build_grid(2, 6.0, 64, 32).unwrap();
//! let one = ScalarField::from_fn(&grid, |_, _| 1.0);
//! let vol = 2.0 * std::f64::consts::PI * (6f64.cosh() - 1.0);
//! assert!((one.lp_norm(1.0).unwrap() - vol).abs() < 1e-6 * vol);
//! ```

pub mod band;
pub mod constants;
pub mod duhamel;
pub mod error;
pub mod geometry;
pub mod par;
pub mod periodic;
pub mod picard;
pub mod projection;
pub mod samples;
pub mod semigroup;
pub mod stability;

pub use error::{Error, Result};
pub use par::Exec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
