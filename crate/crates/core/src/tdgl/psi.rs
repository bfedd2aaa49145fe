use num_complex::Complex64;

use super::SimParams;
use crate::error::Result;
use crate::fem::{solve_complex_with, CsrMatrix, FeSpace, Scalar, SolveStats, DEFAULT_TOL};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Matrix of the linearized `psi` step for frozen `A^n` (at quadrature
/// points) and `|psi^n|^2`.
///
/// Row `j` tests against `phi_j`, column `k` is the trial function `phi_k`:
///
/// ```text
/// S_jk = eta/tau (phi_k, phi_j) + 1/kappa^2 (grad phi_k, grad phi_j)
///      + i/kappa (A . grad phi_k, phi_j) - i/kappa (phi_k, A . grad phi_j)
///      + ((|A|^2 + |psi^n|^2 - 1) phi_k, phi_j)
///      [+ i eta kappa (A . grad(phi_k phi_j), 1)]
/// ```
pub fn assemble_psi_matrix(space: &FeSpace, psi: &[Complex64], a_quad: &[[f64; 2]], params: &SimParams) -> CsrMatrix<Complex64> {
    let rho: Vec<f64> = space.eval_quad(psi).iter().map(|z| z.norm_sqr()).collect();
    let nq = space.nq();
    let mass_c = params.eta / params.tau;
    let k2 = 1.0 / (params.kappa * params.kappa);
    let ik = I / params.kappa;
    let gauge = params.solver.has_gauge_term().then_some(I * params.eta * params.kappa);
    space.assemble_matrix(|c, q, phi, g, w, block: &mut [Complex64]| {
        let a = a_quad[c * nq + q];
        let react = mass_c + a[0] * a[0] + a[1] * a[1] + rho[c * nq + q] - 1.0;
        let n = phi.len();
        for j in 0..n {
            let adj = a[0] * g[j][0] + a[1] * g[j][1];
            for k in 0..n {
                let adk = a[0] * g[k][0] + a[1] * g[k][1];
                let re = k2 * (g[k][0] * g[j][0] + g[k][1] * g[j][1]) + react * phi[k] * phi[j];
                let mut z = Complex64::new(re, 0.0) + ik * (adk * phi[j] - adj * phi[k]);
                if let Some(gc) = gauge {
                    z += gc * (adk * phi[j] + adj * phi[k]);
                }
                block[j * n + k] += z * w;
            }
        }
    })
}

/// Advance `psi` by one linearized step with `A^n` given at the quadrature
/// points. Returns `psi^{n+1}`.
pub fn step_psi(
    space: &FeSpace,
    psi: &[Complex64],
    a_quad: &[[f64; 2]],
    params: &SimParams,
) -> Result<(Vec<Complex64>, SolveStats)> {
    step_psi_with(space, &space.mass_matrix(), psi, a_quad, params)
}

pub(crate) fn step_psi_with(
    space: &FeSpace,
    mass: &CsrMatrix<f64>,
    psi: &[Complex64],
    a_quad: &[[f64; 2]],
    params: &SimParams,
) -> Result<(Vec<Complex64>, SolveStats)> {
    let s = assemble_psi_matrix(space, psi, a_quad, params);
    let scale = params.eta / params.tau;
    let re: Vec<f64> = psi.iter().map(|z| z.re).collect();
    let im: Vec<f64> = psi.iter().map(|z| z.im).collect();
    let rhs: Vec<Complex64> = mass
        .mul_vec(&re)
        .into_iter()
        .zip(mass.mul_vec(&im))
        .map(|(a, b)| Complex64::new(a, b).scale(scale))
        .collect();
    solve_complex_with(&s, &rhs, Some(psi), DEFAULT_TOL)
}

/// `F = Re[conj(psi^n) ((i/kappa) grad psi^{n+1} + A^n psi^{n+1})]` at every
/// quadrature point.
pub fn compute_supercurrent(
    space: &FeSpace,
    psi_new: &[Complex64],
    psi_old: &[Complex64],
    a_quad: &[[f64; 2]],
    kappa: f64,
) -> Vec<[f64; 2]> {
    let old = space.eval_quad(psi_old);
    let new = space.eval_quad(psi_new);
    let grad = space.grad_quad(psi_new);
    let ik = I / kappa;
    (0..old.len())
        .map(|i| {
            let c = old[i].conj();
            let a = a_quad[i];
            [
                (c * (ik * grad[i][0] + new[i] * a[0])).re,
                (c * (ik * grad[i][1] + new[i] * a[1])).re,
            ]
        })
        .collect()
}
