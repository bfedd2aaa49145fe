//! Finite element simulation of superconducting vortex dynamics governed by the
//! time-dependent Ginzburg-Landau equations in two dimensions.
//!
//! Three formulations share one mesh, one finite element space and one
//! linearized backward-Euler pattern:
//!
//! * the temporal gauge (`phi = 0`) with a nodal vector potential,
//! * the Lorentz gauge (`phi = -div A`) with a nodal vector potential,
//! * the Hodge-reformulated system, where the vector potential is written as
//!   `A = curl u + grad v` and only scalar heat and Poisson problems are solved.
//!
//! The crate is organised bottom-up: [`mesh`] builds triangulations, [`fem`]
//! provides Lagrange spaces, assembly and linear solvers, [`hodge`] implements
//! the scalar-potential decomposition, [`tdgl`] advances the three schemes in
//! time and [`post`] extracts observables and comparison metrics.

pub mod error;
pub mod fem;
pub mod hodge;
pub mod mesh;
pub mod post;
pub mod tdgl;

pub use error::{Error, Result};
pub use fem::{FeSpace, QuadRule};
pub use mesh::{MeshSpec, Point2, TriMesh};
pub use tdgl::{SimParams, SimState, SolverKind};
