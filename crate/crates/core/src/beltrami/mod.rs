//! Quasiconformal machinery on the plane: Cauchy and Beurling transforms,
//! the inhomogeneous Beltrami equation, normalized quasiconformal maps and
//! their inverses, a Hölder-space solver, Beltrami coefficients of metrics
//! and the `B_p` norm.

pub mod grid;
pub mod inverse;
pub mod norms;
pub mod solver;
pub mod transforms;

pub use grid::GridField;
pub use inverse::{inverse_coefficient, invert_point, InverseCoefficient};
pub use norms::{bp_norm, coefficient_from_metric, metric_coefficient, BpNormReport};
pub use solver::{
    holder_solve, normalized_qc_map, radial_stretch, solve_inhomogeneous, w1p_distance, BeltramiCoefficient,
    HolderSolution, InhomogeneousSolution, QcMap,
};
pub use transforms::{beurling_transform, cauchy_transform, Transforms};
