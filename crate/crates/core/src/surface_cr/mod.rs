//! Cauchy-Riemann machinery on the flat torus `[0, 2π)²` with coordinates
//! `(s, t)`: Fourier fields and forms, `∂̄` and Hodge theory, the Fredholm
//! count, the linearized operator, Newton for the model equation and
//! a-priori diagnostics.

pub mod continuation;
pub mod diagnostics;
pub mod field;
pub mod forms;
pub mod hodge;
pub mod linear;
pub mod newton;

pub use continuation::{appendix_continuation, appendix_model, AppendixModel, Continuation, ContinuationReport};
pub use diagnostics::{
    family_monotonicity_check, gradient_bound_check, l2_bound_check, FamilyReport, GradientBoundReport, L2BoundReport,
};
pub use field::{collocation_size, TorusField};
pub use forms::{standard_j, FormKind, GridForm, StructureField, TorusOneForm};
pub use hodge::{
    dbar_form, dbar_normalized, dbar_solve_torus, fredholm_index_report, harmonic_defects, hodge_representative,
    psi_standard, reconstruct, DbarSplit, FredholmReport,
};
pub use linear::{linearized_cr_apply, random_footnote_op, t_operator_nullity, FootnoteOp, NullityReport, ZeroOrderOp};
pub use newton::{
    convergence_exponent, manufactured_problem, newton_solve_model, perturbed_start, AppendixJ, CRSolution,
    ConjugatedJ, CrData, CrGuess, JDependence, ManufacturedProblem, NewtonOptions, ResidualReport, StandardJ,
};
