//! Numerical laboratory for local-model contact forms near a binding orbit:
//! profiles and Reeb dynamics, holomorphic leaves, the asymptotic operator,
//! a Beltrami solver and the Cauchy-Riemann machinery on the flat torus.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod beltrami;
pub mod contact;
pub mod error;
pub mod harness;
pub mod leaves;
pub mod numerics;
pub mod profiles;
pub mod surface_cr;

pub use error::{Error, Result};
pub use harness::{run, Command, ReportBundle, RunConfig};
pub use profiles::{
    derived_quantities, design_interpolation_curve, make_example_profile, validate_local_model, BindingProfile,
    DerivedQuantities, ProfileKind, ValidationReport,
};
