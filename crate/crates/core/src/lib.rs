//! Boundary-integral shape calculus for the two-phase conductivity problem:
//! forward transmission solves, the Kohn–Vogelius criterion with its first
//! and second shape derivatives, Newton-type reconstruction and Hessian
//! spectra at the minimizer.

pub mod diagnostics;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod optimizer;
pub mod potential;
pub mod shape_calculus;
pub mod spectral;
pub mod transmission;

pub use error::{Error, Result};
pub use geometry::{build_curve, AdmissibleRegion, Curve, DeformationField, ShapeParams, Vec2};
pub use optimizer::{
    assemble_gradient_and_hessian, reconstruct, update_shape, BasisSpec, InverseProblem, IterationRecord, Mode,
    OptimizerOptions, RunHistory, Termination,
};
pub use potential::{assemble_double_layer, assemble_single_layer, harmonic_eval, LayerKind, LayerOperator, Region};
pub use shape_calculus::{
    energy_jump_normal_derivative, first_order_jumps, kv_gradient, kv_hessian, kv_value, second_order_jumps,
    solve_derivatives, solve_state_derivative, DerivativeBundle, StateBundle,
};
pub use spectral::{hessian_at_critical, spectrum_report, SpectrumReport};
pub use transmission::{BoundaryKind, Conductivity, Geometry, JumpData, TransmissionSolution, TransmissionSolver};
