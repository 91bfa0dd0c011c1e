//! Mean-field limit of the uniformized dynamics.
//!
//! ε-solutions assemble the Hartree flow from coherent contractions of
//! disentangled sector propagators; fixed points, spectral gaps and solitons
//! cover the stationary side.

mod series;
mod soliton;
mod stationary;

pub use series::{
    build_disentangled, convergence_rows, convergence_study, epsilon_solution, finish_table, poisson_tail, sector_lift,
    symmetric_power_vector, ConvergenceRow, ConvergenceTable, DisentangledPropagator, EpsilonSolution, TAIL_GUARD,
};
pub use soliton::{
    constrained_extremal, epsilon_soliton, generalized_soliton_check, joint_eigenbasis, lagrange_multipliers,
    lattice_momentum, plane_wave, Profile, SolitonProblem, SolitonReport, COMMUTING_TOL, RAY_STEP,
};
pub use stationary::{
    definite_eigh, gap_study, ground_energy, hartree_fixed_point, hartree_operator, spectral_gap_frequency, FixedPoint,
    GapPoint, GapRow, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL,
};

use crate::tensor::CVector;

pub(crate) fn euclidean_distance(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm()
}
