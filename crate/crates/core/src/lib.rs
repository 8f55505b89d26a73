//! Heat / thin-wave / thick-wave coupled system on a polygonal solid:
//! P1 discretization, contraction-semigroup time stepping and spectral
//! analysis of the generator.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the command-line driver uses.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod checks;
pub mod cholesky;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod hspace;
pub mod resolvent;
pub mod scalar;
pub mod sparse;
pub mod spectral;
pub mod stepper;

pub use assembly::{
    apply_adjoint, apply_generator, assemble_adjoint, assemble_pencil, junction_flux_sum, Fault,
};
pub use error::{Condition, Error, Result};
pub use geometry::{build_default_geometry, load_mesh, save_mesh, Region};
pub use hspace::{energy, gram_matrix, inner_h, validate_membership, BlockSizes, DofMap};
pub use resolvent::{assemble_b_form, rhs_f_lambda, solve_resolvent, solve_static};
pub use scalar::Real;
pub use spectral::{adjoint_spectrum_check, compute_spectrum, resolvent_scan};
pub use stepper::{simulate, step_backward_euler, theta_step};

pub type Mesh = geometry::FsiMesh<f64>;
pub type InterfaceGraph = geometry::InterfaceGraph<f64>;
pub type State = hspace::StateH<f64>;
pub type RawState = hspace::RawState<f64>;
pub type Space = hspace::EnergySpace<f64>;
pub type Pencil = assembly::OperatorPencil<f64>;
pub type AdjointPencil = assembly::AdjointPencil<f64>;
pub type Resolvent = resolvent::ResolventSystem<f64>;
pub type Trace = stepper::EnergyTrace<f64>;
pub type Spectrum = spectral::SpectrumReport<f64>;
pub type Flux = diagnostics::FluxRecovery<f64>;

/// Single-precision counterparts.
pub mod f32 {
    pub type Mesh = crate::geometry::FsiMesh<f32>;
    pub type State = crate::hspace::StateH<f32>;
    pub type Space = crate::hspace::EnergySpace<f32>;
    pub type Pencil = crate::assembly::OperatorPencil<f32>;
}
