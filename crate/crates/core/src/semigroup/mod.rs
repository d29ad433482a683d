//! Heat semigroups of Δ_g and of the Ebin–Marsden operator, their
//! dispersive bound functions, and the closed-form kernel oracle.

mod bounds;
mod cn;
mod kernel;
pub mod verify;

pub use bounds::{dispersive_bound, gamma_pq, h_d, smoothing_bound, SemigroupConfig};
pub use cn::{
    matrix_semigroup_apply, pack_vector, semigroup_cn_apply_scalar, semigroup_cn_apply_vector, substeps_for,
    unpack_vector, Generator, Semigroup, Stepper,
};
pub use kernel::{heat_kernel_closed, scalar_semigroup_kernel_apply};
pub use verify::{geometric_times, loglog_slope, verify_semigroup, EstimateReport, SmoothingRow, VerifyOptions};
