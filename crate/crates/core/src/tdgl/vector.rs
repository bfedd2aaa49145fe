//! Nodal vector-potential solve shared by the temporal and Lorentz gauges.
//!
//! Unknowns are interleaved, `(A_x, A_y)` of DOF `d` at `2d, 2d + 1`. The
//! constraint `A . n = 0` is imposed by rotating each smooth boundary node to
//! normal/tangential components and eliminating the normal one; at corners
//! both components are eliminated.

use super::SimParams;
use crate::error::Result;
use crate::fem::{apply_dirichlet, AssemblyPattern, CsrMatrix, DofKind, FeSpace, SolveStats, SpdSolver};

/// Project nodal values onto the constraint set: drop the normal component
/// at smooth boundary DOFs, zero both components at corners.
pub(crate) fn constrain_nodal(space: &FeSpace, ax: &mut [f64], ay: &mut [f64]) {
    for (d, kind) in space.dof_kind().iter().enumerate() {
        match *kind {
            DofKind::Interior => {}
            DofKind::Boundary(n) => {
                let an = ax[d] * n[0] + ay[d] * n[1];
                ax[d] -= an * n[0];
                ay[d] -= an * n[1];
            }
            DofKind::Corner => {
                ax[d] = 0.0;
                ay[d] = 0.0;
            }
        }
    }
}

/// Factored `M/tau + curl-curl [+ div-div]` in rotated coordinates.
#[derive(Debug, Clone)]
pub struct VectorSystem {
    solver: SpdSolver,
    mask: Vec<bool>,
    /// Per DOF: outward normal where the DOF is rotated.
    normals: Vec<Option<[f64; 2]>>,
    /// `H (curl a, 1)` for every vector test function, interleaved.
    applied: Vec<f64>,
    tau: f64,
}

fn rotate(n: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    // components along n and t = (-n_y, n_x)
    [v[0] * n[0] + v[1] * n[1], -v[0] * n[1] + v[1] * n[0]]
}

fn unrotate(n: [f64; 2], r: [f64; 2]) -> [f64; 2] {
    [r[0] * n[0] - r[1] * n[1], r[0] * n[1] + r[1] * n[0]]
}

impl VectorSystem {
    pub fn new(space: &FeSpace, params: &SimParams, div_div: bool) -> Result<Self> {
        let nloc = space.nloc();
        let cell_dofs: Vec<usize> = space.all_cell_dofs().iter().flat_map(|&d| [2 * d, 2 * d + 1]).collect();
        let pattern = AssemblyPattern::new(2 * space.ndofs(), 2 * nloc, &cell_dofs);
        let inv_tau = 1.0 / params.tau;
        let nq = space.nq();
        let jxw = space.jxw();
        let m = 2 * nloc;
        let mut blocks = vec![0.0; space.ncells() * m * m];
        for (c, block) in blocks.chunks_mut(m * m).enumerate() {
            for q in 0..nq {
                let phi = space.phi(q);
                let g = space.grads(c, q);
                let w = jxw[c * nq + q];
                // curl(phi e_x) = -phi_y, curl(phi e_y) = phi_x; div(phi e_i) = d_i phi
                let curl = |k: usize, i: usize| if i == 0 { -g[k][1] } else { g[k][0] };
                for a in 0..m {
                    let (ka, ia) = (a / 2, a % 2);
                    for b in 0..m {
                        let (kb, ib) = (b / 2, b % 2);
                        let mut v = curl(kb, ib) * curl(ka, ia);
                        if ia == ib {
                            v += inv_tau * phi[ka] * phi[kb];
                        }
                        if div_div {
                            v += g[kb][ib] * g[ka][ia];
                        }
                        block[a * m + b] += w * v;
                    }
                }
            }
        }
        let mut a = pattern.scatter(&blocks);

        let normals: Vec<Option<[f64; 2]>> = space
            .dof_kind()
            .iter()
            .map(|k| match *k {
                DofKind::Boundary(n) => Some(n),
                _ => None,
            })
            .collect();
        rotate_matrix(&mut a, &normals);
        let mut mask = vec![false; a.nrows()];
        for (d, k) in space.dof_kind().iter().enumerate() {
            match k {
                DofKind::Interior => {}
                DofKind::Boundary(_) => mask[2 * d] = true,
                DofKind::Corner => {
                    mask[2 * d] = true;
                    mask[2 * d + 1] = true;
                }
            }
        }
        let zeros = vec![0.0; a.nrows()];
        let (a, _) = apply_dirichlet(&a, &zeros, &mask, &zeros);

        let h = params.h_field;
        let gx = space.grad_load(&vec![[1.0, 0.0]; space.nquad()]);
        let gy = space.grad_load(&vec![[0.0, 1.0]; space.nquad()]);
        let applied = gx.iter().zip(&gy).flat_map(|(x, y)| [-h * y, h * x]).collect();
        Ok(Self { solver: SpdSolver::new(&a)?, mask, normals, applied, tau: params.tau })
    }

    /// Solve for `A^{n+1}` from `A^n` and the supercurrent `F^{n+1}`.
    pub fn solve(
        &self,
        space: &FeSpace,
        mass: &CsrMatrix<f64>,
        ax: &[f64],
        ay: &[f64],
        f: &[[f64; 2]],
    ) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
        let fx: Vec<f64> = f.iter().map(|v| v[0]).collect();
        let fy: Vec<f64> = f.iter().map(|v| v[1]).collect();
        let lx = space.load(&fx);
        let ly = space.load(&fy);
        let mx = mass.mul_vec(ax);
        let my = mass.mul_vec(ay);
        let n = space.ndofs();
        let mut rhs = vec![0.0; 2 * n];
        let mut x0 = vec![0.0; 2 * n];
        for d in 0..n {
            let mut b = [
                mx[d] / self.tau - lx[d] + self.applied[2 * d],
                my[d] / self.tau - ly[d] + self.applied[2 * d + 1],
            ];
            let mut x = [ax[d], ay[d]];
            if let Some(nrm) = self.normals[d] {
                b = rotate(nrm, b);
                x = rotate(nrm, x);
            }
            for i in 0..2 {
                if self.mask[2 * d + i] {
                    b[i] = 0.0;
                    x[i] = 0.0;
                }
                rhs[2 * d + i] = b[i];
                x0[2 * d + i] = x[i];
            }
        }
        let (sol, stats) = self.solver.solve(&rhs, Some(&x0))?;
        let mut nx = vec![0.0; n];
        let mut ny = vec![0.0; n];
        for d in 0..n {
            let mut r = [sol[2 * d], sol[2 * d + 1]];
            for (i, v) in r.iter_mut().enumerate() {
                if self.mask[2 * d + i] {
                    *v = 0.0;
                }
            }
            let v = match self.normals[d] {
                Some(nrm) => unrotate(nrm, r),
                None => r,
            };
            nx[d] = v[0];
            ny[d] = v[1];
        }
        Ok((nx, ny, stats))
    }
}

/// `Q^T A Q` where `Q` is block diagonal with `[n t]` at rotated nodes.
fn rotate_matrix(a: &mut CsrMatrix<f64>, normals: &[Option<[f64; 2]>]) {
    let ip = a.indptr().to_vec();
    let ix = a.indices().to_vec();
    let r = |n: Option<[f64; 2]>| match n {
        Some(n) => [[n[0], -n[1]], [n[1], n[0]]],
        None => [[1.0, 0.0], [0.0, 1.0]],
    };
    let nodes = a.nrows() / 2;
    for i in 0..nodes {
        let ri = r(normals[i]);
        let (s0, e0) = (ip[2 * i], ip[2 * i + 1]);
        let (s1, e1) = (ip[2 * i + 1], ip[2 * i + 2]);
        debug_assert_eq!(e0 - s0, e1 - s1);
        let vals = a.values_mut();
        let mut k = 0;
        while s0 + k < e0 {
            let j = ix[s0 + k] / 2;
            debug_assert_eq!(ix[s0 + k], 2 * j);
            debug_assert_eq!(ix[s1 + k], 2 * j);
            let rj = r(normals[j]);
            let blk = [[vals[s0 + k], vals[s0 + k + 1]], [vals[s1 + k], vals[s1 + k + 1]]];
            let mut out = [[0.0; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    let mut s = 0.0;
                    for x in 0..2 {
                        for y in 0..2 {
                            s += ri[x][p] * blk[x][y] * rj[y][q];
                        }
                    }
                    out[p][q] = s;
                }
            }
            vals[s0 + k] = out[0][0];
            vals[s0 + k + 1] = out[0][1];
            vals[s1 + k] = out[1][0];
            vals[s1 + k + 1] = out[1][1];
            k += 2;
        }
    }
}
