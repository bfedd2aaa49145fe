//! Scalar-potential decomposition `A = curl u + grad v` of vector fields.
//!
//! `u` vanishes on the boundary and carries the divergence-free part; `v` has
//! zero mean and carries the curl-free part. Both are obtained from scalar
//! Poisson problems, which stay well posed on domains with reentrant corners
//! where the vector curl-curl problem does not.

use crate::error::{Error, Result};
use crate::fem::{
    constrain_dirichlet, eliminate, norm2, solve_neumann_meanzero, solve_spd, CsrMatrix, FeSpace, NeumannSolver,
    SolveStats, SpdSolver, COMPATIBILITY_TOL, DEFAULT_TOL,
};

/// Values of a vector field at every quadrature point, cell-major.
pub type QuadVectorField = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    /// Stream function, zero on the boundary.
    pub u: Vec<f64>,
    /// Scalar potential, zero mean.
    pub v: Vec<f64>,
}

impl PotentialPair {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// Scalar curl `curl u = (d_y u, -d_x u)` at every quadrature point.
pub fn curl_quad(space: &FeSpace, u: &[f64]) -> QuadVectorField {
    space.grad_quad(u).into_iter().map(|g| [g[1], -g[0]]).collect()
}

/// `curl u + grad v` at every quadrature point.
pub fn reconstruct(space: &FeSpace, pair: &PotentialPair) -> QuadVectorField {
    let gu = space.grad_quad(&pair.u);
    let gv = space.grad_quad(&pair.v);
    gu.iter().zip(&gv).map(|(a, b)| [a[1] + b[0], -a[0] + b[1]]).collect()
}

/// Mass-matrix row sums `int phi_j`; the mean of an FE function `x` is
/// `weights . x / |Omega|`.
pub fn mean_weights(mass: &CsrMatrix<f64>) -> Vec<f64> {
    mass.mul_vec(&vec![1.0; mass.nrows()])
}

/// Constant component of `(G, grad zeta)` relative to the size of its
/// individual contributions. Zero in exact arithmetic.
pub fn compatibility_residual(space: &FeSpace, g: &[[f64; 2]]) -> f64 {
    let b = space.grad_load(g);
    compatibility_of(space, g, &b)
}

fn compatibility_of(space: &FeSpace, g: &[[f64; 2]], b: &[f64]) -> f64 {
    let nq = space.nq();
    let scale = space.assemble_vector(|c, q, _phi, grads, w, local: &mut [f64]| {
        let v = g[c * nq + q];
        for (l, d) in local.iter_mut().zip(grads) {
            *l += (w * (v[0] * d[0] + v[1] * d[1])).abs();
        }
    });
    let s = norm2(&scale);
    if s == 0.0 {
        return 0.0;
    }
    b.iter().sum::<f64>().abs() / (b.len() as f64).sqrt() / s
}

/// `(G, grad zeta)` with the round-off constant component removed.
///
/// The check is made against the size of the individual contributions,
/// since the load itself may be tiny for nearly divergence-free `G`.
pub fn neumann_load(space: &FeSpace, g: &[[f64; 2]]) -> Result<Vec<f64>> {
    let mut b = space.grad_load(g);
    let r = compatibility_of(space, g, &b);
    if r > COMPATIBILITY_TOL {
        return Err(Error::Incompatible { residual: r });
    }
    let m = b.iter().sum::<f64>() / b.len() as f64;
    b.iter_mut().for_each(|x| *x -= m);
    Ok(b)
}

fn dirichlet_rhs(space: &FeSpace, mut b: Vec<f64>) -> Vec<f64> {
    for &d in space.boundary_dofs() {
        b[d] = 0.0;
    }
    b
}

/// Potentials of `a`: `(grad u, grad xi) = (A, curl xi)` over functions
/// vanishing on the boundary, and `(grad v, grad zeta) = (A, grad zeta)` with
/// zero mean.
pub fn decompose_vector(space: &FeSpace, a: &[[f64; 2]]) -> Result<PotentialPair> {
    let (u, v) = scalar_potentials(space, a)?;
    Ok(PotentialPair { u, v })
}

/// Potentials of a current `F`; same two problems as [`decompose_vector`],
/// returned as `(p, q)`.
pub fn decompose_current(space: &FeSpace, f: &[[f64; 2]]) -> Result<(Vec<f64>, Vec<f64>)> {
    scalar_potentials(space, f)
}

fn scalar_potentials(space: &FeSpace, a: &[[f64; 2]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = space.stiffness_matrix();
    let w = mean_weights(&space.mass_matrix());
    let bd = space.boundary_dofs().to_vec();
    let zeros = vec![0.0; bd.len()];
    let (kd, bu) = constrain_dirichlet(space, &k, &space.curl_load(a), &bd, &zeros)?;
    let u = solve_spd(&kd, &bu, DEFAULT_TOL)?;
    let v = solve_neumann_meanzero(&k, &neumann_load(space, a)?, &w, DEFAULT_TOL)?;
    Ok((u, v))
}

/// Factored Dirichlet and Neumann Poisson operators of one space, for
/// repeated decompositions.
#[derive(Debug, Clone)]
pub struct HodgeOperators {
    dirichlet: SpdSolver,
    neumann: NeumannSolver,
    weights: Vec<f64>,
}

impl HodgeOperators {
    pub fn new(space: &FeSpace) -> Result<Self> {
        let k = space.stiffness_matrix();
        let mass = space.mass_matrix();
        Self::from_matrices(space, &k, &mass)
    }

    pub fn from_matrices(space: &FeSpace, stiffness: &CsrMatrix<f64>, mass: &CsrMatrix<f64>) -> Result<Self> {
        let mut mask = vec![false; space.ndofs()];
        for &d in space.boundary_dofs() {
            mask[d] = true;
        }
        let weights = mean_weights(mass);
        Ok(Self {
            dirichlet: SpdSolver::new(&eliminate(stiffness, &mask))?,
            neumann: NeumannSolver::new(stiffness, &weights)?,
            weights,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dirichlet potential from a precomputed right-hand side `(G, curl xi)`.
    pub fn solve_dirichlet(&self, space: &FeSpace, rhs: Vec<f64>, x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let b = dirichlet_rhs(space, rhs);
        let (mut u, stats) = self.dirichlet.solve(&b, x0)?;
        for &d in space.boundary_dofs() {
            u[d] = 0.0;
        }
        Ok((u, stats))
    }

    /// Neumann potential from a precomputed right-hand side `(G, grad zeta)`.
    pub fn solve_neumann(&self, rhs: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        self.neumann.solve(rhs, x0)
    }

    pub fn decompose(&self, space: &FeSpace, a: &[[f64; 2]]) -> Result<PotentialPair> {
        let (u, _) = self.solve_dirichlet(space, space.curl_load(a), None)?;
        let (v, _) = self.solve_neumann(&neumann_load(space, a)?, None)?;
        Ok(PotentialPair { u, v })
    }
}
