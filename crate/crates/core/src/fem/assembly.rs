use rayon::prelude::*;

use super::space::FeSpace;
use super::sparse::{CsrMatrix, Scalar};

/// Bilinear forms with a closed-form element kernel.
#[derive(Debug, Clone, Copy)]
pub enum Form<'a> {
    /// `int phi_k phi_j`
    Mass,
    /// `int grad phi_k . grad phi_j`
    Stiffness,
    /// `int c phi_k phi_j`, `c` sampled at quadrature points.
    WeightedMass(&'a [f64]),
}

pub fn assemble(space: &FeSpace, form: Form) -> CsrMatrix<f64> {
    match form {
        Form::Mass => space.assemble_matrix(|_c, _q, phi, _g, w, block: &mut [f64]| outer(phi, phi, w, block)),
        Form::Stiffness => space.assemble_matrix(|_c, _q, _phi, g, w, block: &mut [f64]| {
            let n = g.len();
            for a in 0..n {
                for b in 0..n {
                    block[a * n + b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }),
        Form::WeightedMass(coef) => {
            assert_eq!(coef.len(), space.nquad());
            let nq = space.nq();
            space.assemble_matrix(|c, q, phi, _g, w, block: &mut [f64]| {
                outer(phi, phi, w * coef[c * nq + q], block)
            })
        }
    }
}

fn outer(a: &[f64], b: &[f64], w: f64, block: &mut [f64]) {
    let n = a.len();
    for i in 0..n {
        for j in 0..n {
            block[i * n + j] += w * a[i] * b[j];
        }
    }
}

impl FeSpace {
    /// Assemble a matrix from a per-quadrature-point kernel.
    ///
    /// The kernel receives `(cell, q, phi, grads, jxw, block)` and adds its
    /// contribution to the row-major `nloc x nloc` block, where row `a` is the
    /// test function and column `b` the trial function. Element blocks are
    /// computed in parallel and summed in cell order.
    pub fn assemble_matrix<T: Scalar>(
        &self,
        kernel: impl Fn(usize, usize, &[f64], &[[f64; 2]], f64, &mut [T]) + Sync,
    ) -> CsrMatrix<T> {
        let nloc = self.nloc();
        let nq = self.nq();
        let jxw = self.jxw();
        let mut blocks = vec![T::zero(); self.ncells() * nloc * nloc];
        blocks.par_chunks_mut(nloc * nloc).enumerate().for_each(|(c, block)| {
            for q in 0..nq {
                kernel(c, q, self.phi(q), self.grads(c, q), jxw[c * nq + q], block);
            }
        });
        self.pattern().scatter(&blocks)
    }

    /// Assemble a load vector from a per-quadrature-point kernel that adds
    /// `int f phi_a` style contributions into the local vector.
    pub fn assemble_vector<T: Scalar>(
        &self,
        kernel: impl Fn(usize, usize, &[f64], &[[f64; 2]], f64, &mut [T]) + Sync,
    ) -> Vec<T> {
        let nloc = self.nloc();
        let nq = self.nq();
        let jxw = self.jxw();
        let mut locals = vec![T::zero(); self.ncells() * nloc];
        locals.par_chunks_mut(nloc).enumerate().for_each(|(c, local)| {
            for q in 0..nq {
                kernel(c, q, self.phi(q), self.grads(c, q), jxw[c * nq + q], local);
            }
        });
        let mut out = vec![T::zero(); self.ndofs()];
        for (&d, &v) in self.all_cell_dofs().iter().zip(&locals) {
            out[d] += v;
        }
        out
    }

    pub fn mass_matrix(&self) -> CsrMatrix<f64> {
        assemble(self, Form::Mass)
    }

    pub fn stiffness_matrix(&self) -> CsrMatrix<f64> {
        assemble(self, Form::Stiffness)
    }

    /// `(f, phi_j)` for quadrature samples `f`.
    pub fn load<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        assert_eq!(f.len(), self.nquad());
        let nq = self.nq();
        self.assemble_vector(|c, q, phi, _g, w, local: &mut [T]| {
            let v = f[c * nq + q].scale(w);
            for (l, p) in local.iter_mut().zip(phi) {
                *l += v.scale(*p);
            }
        })
    }

    /// `(G, grad phi_j)` for quadrature samples of a vector field `G`.
    pub fn grad_load(&self, g: &[[f64; 2]]) -> Vec<f64> {
        assert_eq!(g.len(), self.nquad());
        let nq = self.nq();
        self.assemble_vector(|c, q, _phi, grads, w, local: &mut [f64]| {
            let v = g[c * nq + q];
            for (l, d) in local.iter_mut().zip(grads) {
                *l += w * (v[0] * d[0] + v[1] * d[1]);
            }
        })
    }

    /// `(G, curl phi_j)` with the scalar curl `curl phi = (d_y phi, -d_x phi)`.
    pub fn curl_load(&self, g: &[[f64; 2]]) -> Vec<f64> {
        assert_eq!(g.len(), self.nquad());
        let nq = self.nq();
        self.assemble_vector(|c, q, _phi, grads, w, local: &mut [f64]| {
            let v = g[c * nq + q];
            for (l, d) in local.iter_mut().zip(grads) {
                *l += w * (v[0] * d[1] - v[1] * d[0]);
            }
        })
    }
}
