//! Lagrange finite element spaces, sparse assembly and linear solvers.

mod assembly;
pub mod direct;
mod dirichlet;
mod quadrature;
mod solvers;
mod space;
mod sparse;

pub use assembly::{assemble, Form};
pub use dirichlet::{apply_dirichlet, constrain_dirichlet, eliminate};
pub use quadrature::QuadRule;
pub use solvers::{
    bicgstab, constant_component, solve_complex, solve_complex_with, solve_neumann_meanzero, solve_neumann_with,
    solve_spd, solve_spd_with, NeumannSolver, SolveStats, SpdSolver, COMPATIBILITY_TOL, DEFAULT_TOL,
};
pub use space::{DofKind, FeSpace};
pub use sparse::{dot, norm2, AssemblyPattern, CsrMatrix, Scalar, SparseMat};

pub(crate) use solvers::shift_mean;
pub(crate) use space::barycentric;
