use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::quadrature::QuadRule;
use super::sparse::{AssemblyPattern, Scalar};
use crate::error::{Error, Result};
use crate::mesh::{NodeClass, Point2, TriMesh};

/// How a DOF sits relative to the boundary, as needed by vector constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofKind {
    Interior,
    /// Smooth boundary point with its outward unit normal.
    Boundary([f64; 2]),
    Corner,
}

/// Continuous Lagrange space of degree 1 or 2.
///
/// DOFs are numbered vertices first, then (for degree 2) edges in the order
/// of [`TriMesh::edges`]. Local DOF order on a cell is `[v0, v1, v2]` or
/// `[v0, v1, v2, e01, e12, e20]`.
///
/// Basis values, physical gradients and quadrature weights are tabulated at
/// every quadrature point of every cell when the space is built.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<TriMesh>,
    degree: usize,
    quad: QuadRule,
    nloc: usize,
    dof_coords: Vec<Point2>,
    cell_dofs: Vec<usize>,
    dof_kind: Vec<DofKind>,
    boundary_dofs: Vec<usize>,
    corner_dofs: Vec<usize>,
    /// Reference basis values, `phi[q * nloc + k]`.
    phi: Vec<f64>,
    /// Physical gradients, `grads[(c * nq + q) * nloc + k]`.
    grads: Vec<[f64; 2]>,
    /// Quadrature weight times Jacobian, `jxw[c * nq + q]`.
    jxw: Vec<f64>,
    qpoints: Vec<Point2>,
    pattern: AssemblyPattern,
}

/// Barycentric basis on a triangle for local index `k`.
fn basis_value(degree: usize, k: usize, l: [f64; 3]) -> f64 {
    match (degree, k) {
        (1, _) => l[k],
        (_, 0..=2) => l[k] * (2.0 * l[k] - 1.0),
        (_, 3) => 4.0 * l[0] * l[1],
        (_, 4) => 4.0 * l[1] * l[2],
        _ => 4.0 * l[2] * l[0],
    }
}

/// Derivative of basis `k` with respect to each barycentric coordinate.
fn basis_dl(degree: usize, k: usize, l: [f64; 3]) -> [f64; 3] {
    let mut d = [0.0; 3];
    match (degree, k) {
        (1, _) => d[k] = 1.0,
        (_, 0..=2) => d[k] = 4.0 * l[k] - 1.0,
        (_, 3) => {
            d[0] = 4.0 * l[1];
            d[1] = 4.0 * l[0];
        }
        (_, 4) => {
            d[1] = 4.0 * l[2];
            d[2] = 4.0 * l[1];
        }
        _ => {
            d[2] = 4.0 * l[0];
            d[0] = 4.0 * l[2];
        }
    }
    d
}

/// Gradients of the three barycentric coordinates.
fn lambda_grads([p0, p1, p2]: [Point2; 3]) -> [[f64; 2]; 3] {
    let two_a = (p1 - p0).cross(p2 - p0);
    let g = |a: Point2, b: Point2| [(a.y - b.y) / two_a, (b.x - a.x) / two_a];
    [g(p1, p2), g(p2, p0), g(p0, p1)]
}

impl FeSpace {
    pub fn new(mesh: Arc<TriMesh>, degree: usize) -> Result<FeSpace> {
        if !(1..=2).contains(&degree) {
            return Err(Error::InvalidSpec(format!("unsupported element degree {degree}")));
        }
        let quad = QuadRule::with_degree(if degree == 1 { 4 } else { 6 })?;
        let nloc = if degree == 1 { 3 } else { 6 };
        let nv = mesh.num_nodes();
        let nodes = mesh.nodes();

        let mut dof_coords = nodes.to_vec();
        let mut dof_kind: Vec<DofKind> = mesh
            .node_class()
            .iter()
            .map(|c| match c {
                NodeClass::Interior => DofKind::Interior,
                NodeClass::Boundary { normal } => DofKind::Boundary(*normal),
                NodeClass::Corner { .. } => DofKind::Corner,
            })
            .collect();
        let mut cell_dofs = Vec::with_capacity(mesh.num_triangles() * nloc);
        if degree == 1 {
            for t in mesh.triangles() {
                cell_dofs.extend_from_slice(t);
            }
        } else {
            let edges = mesh.edges();
            let index: HashMap<(usize, usize), usize> =
                edges.iter().enumerate().map(|(i, &e)| (e, nv + i)).collect();
            for &(a, b) in &edges {
                dof_coords.push(nodes[a].midpoint(nodes[b]));
                dof_kind.push(DofKind::Interior);
            }
            for e in mesh.boundary_edges() {
                let d = index[&key(e.a, e.b)];
                dof_kind[d] = DofKind::Boundary(mesh.boundary_edge_normal(e));
            }
            for t in mesh.triangles() {
                cell_dofs.extend_from_slice(t);
                for k in 0..3 {
                    cell_dofs.push(index[&key(t[k], t[(k + 1) % 3])]);
                }
            }
        }
        let boundary_dofs = (0..dof_kind.len())
            .filter(|&d| dof_kind[d] != DofKind::Interior)
            .collect();
        let corner_dofs = (0..dof_kind.len())
            .filter(|&d| dof_kind[d] == DofKind::Corner)
            .collect();

        let nq = quad.len();
        let mut phi = Vec::with_capacity(nq * nloc);
        for l in &quad.points {
            for k in 0..nloc {
                phi.push(basis_value(degree, k, *l));
            }
        }
        let ncell = mesh.num_triangles();
        let mut grads = vec![[0.0; 2]; ncell * nq * nloc];
        let mut jxw = vec![0.0; ncell * nq];
        let mut qpoints = vec![Point2::default(); ncell * nq];
        grads
            .par_chunks_mut(nq * nloc)
            .zip(jxw.par_chunks_mut(nq))
            .zip(qpoints.par_chunks_mut(nq))
            .enumerate()
            .for_each(|(c, ((g, w), x))| {
                let v = mesh.vertices(c);
                let lg = lambda_grads(v);
                let area = mesh.triangle_area(c);
                for (q, l) in quad.points.iter().enumerate() {
                    w[q] = quad.weights[q] * 2.0 * area;
                    x[q] = Point2::new(
                        l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
                        l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y,
                    );
                    for k in 0..nloc {
                        let d = basis_dl(degree, k, *l);
                        g[q * nloc + k] = [
                            d[0] * lg[0][0] + d[1] * lg[1][0] + d[2] * lg[2][0],
                            d[0] * lg[0][1] + d[1] * lg[1][1] + d[2] * lg[2][1],
                        ];
                    }
                }
            });
        let pattern = AssemblyPattern::new(dof_coords.len(), nloc, &cell_dofs);
        Ok(FeSpace {
            mesh,
            degree,
            quad,
            nloc,
            dof_coords,
            cell_dofs,
            dof_kind,
            boundary_dofs,
            corner_dofs,
            phi,
            grads,
            jxw,
            qpoints,
            pattern,
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn quad_rule(&self) -> &QuadRule {
        &self.quad
    }

    pub fn ndofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn ncells(&self) -> usize {
        self.mesh.num_triangles()
    }

    /// DOFs per cell.
    pub fn nloc(&self) -> usize {
        self.nloc
    }

    /// Quadrature points per cell.
    pub fn nq(&self) -> usize {
        self.quad.len()
    }

    /// Total number of quadrature points over the mesh.
    pub fn nquad(&self) -> usize {
        self.jxw.len()
    }

    pub fn dof_coords(&self) -> &[Point2] {
        &self.dof_coords
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.nloc..(c + 1) * self.nloc]
    }

    pub fn all_cell_dofs(&self) -> &[usize] {
        &self.cell_dofs
    }

    pub fn dof_kind(&self) -> &[DofKind] {
        &self.dof_kind
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn corner_dofs(&self) -> &[usize] {
        &self.corner_dofs
    }

    pub fn is_boundary_dof(&self, d: usize) -> bool {
        self.dof_kind[d] != DofKind::Interior
    }

    /// Reference basis values at quadrature point `q` (same on every cell).
    pub fn phi(&self, q: usize) -> &[f64] {
        &self.phi[q * self.nloc..(q + 1) * self.nloc]
    }

    /// Physical basis gradients on cell `c` at quadrature point `q`.
    pub fn grads(&self, c: usize, q: usize) -> &[[f64; 2]] {
        let s = (c * self.nq() + q) * self.nloc;
        &self.grads[s..s + self.nloc]
    }

    /// Quadrature weights times Jacobian for every point, cell-major.
    pub fn jxw(&self) -> &[f64] {
        &self.jxw
    }

    pub fn quad_points(&self) -> &[Point2] {
        &self.qpoints
    }

    pub fn pattern(&self) -> &AssemblyPattern {
        &self.pattern
    }

    /// Lagrange interpolant: `f` evaluated at the DOF coordinates.
    pub fn interpolate<T: Scalar>(&self, f: impl Fn(Point2) -> T) -> Vec<T> {
        self.dof_coords.iter().map(|&p| f(p)).collect()
    }

    /// Sample `f` at every quadrature point.
    pub fn sample<T: Send>(&self, f: impl Fn(Point2) -> T + Sync) -> Vec<T> {
        self.qpoints.par_iter().map(|&p| f(p)).collect()
    }

    /// Values of an FE function at every quadrature point.
    pub fn eval_quad<T: Scalar>(&self, coeffs: &[T]) -> Vec<T> {
        assert_eq!(coeffs.len(), self.ndofs());
        let nq = self.nq();
        let mut out = vec![T::zero(); self.nquad()];
        out.par_chunks_mut(nq).enumerate().for_each(|(c, vals)| {
            let dofs = self.cell_dofs(c);
            for (q, v) in vals.iter_mut().enumerate() {
                let phi = self.phi(q);
                let mut s = T::zero();
                for k in 0..self.nloc {
                    s += coeffs[dofs[k]].scale(phi[k]);
                }
                *v = s;
            }
        });
        out
    }

    /// Gradients of an FE function at every quadrature point.
    pub fn grad_quad<T: Scalar>(&self, coeffs: &[T]) -> Vec<[T; 2]> {
        assert_eq!(coeffs.len(), self.ndofs());
        let nq = self.nq();
        let mut out = vec![[T::zero(); 2]; self.nquad()];
        out.par_chunks_mut(nq).enumerate().for_each(|(c, vals)| {
            let dofs = self.cell_dofs(c);
            for (q, v) in vals.iter_mut().enumerate() {
                let g = self.grads(c, q);
                let mut s = [T::zero(); 2];
                for k in 0..self.nloc {
                    let a = coeffs[dofs[k]];
                    s[0] += a.scale(g[k][0]);
                    s[1] += a.scale(g[k][1]);
                }
                *v = s;
            }
        });
        out
    }

    /// Integral of quadrature-point samples.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.nquad());
        samples.iter().zip(&self.jxw).map(|(v, w)| v * w).sum()
    }

    pub fn area(&self) -> f64 {
        self.jxw.iter().sum()
    }

    /// `||u_h - f||_{L2}` by quadrature.
    pub fn l2_error(&self, coeffs: &[f64], f: impl Fn(Point2) -> f64 + Sync) -> f64 {
        let uq = self.eval_quad(coeffs);
        let ex = self.sample(f);
        let d: Vec<f64> = uq.iter().zip(&ex).map(|(a, b)| (a - b) * (a - b)).collect();
        self.integrate(&d).sqrt()
    }

    /// Mass-weighted mean `int u_h / |Omega|`.
    pub fn mean(&self, coeffs: &[f64]) -> f64 {
        self.integrate(&self.eval_quad(coeffs)) / self.area()
    }

    /// Locate the cell containing `p` (within `tol` in barycentric terms) by a
    /// linear scan; returns the cell and barycentric coordinates.
    pub fn locate(&self, p: Point2, tol: f64) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for c in 0..self.ncells() {
            let l = barycentric(self.mesh.vertices(c), p);
            let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((c, l));
            }
            if best.as_ref().map_or(true, |b| worst > b.2) {
                best = Some((c, l, worst));
            }
        }
        best.filter(|b| b.2 >= -tol).map(|b| (b.0, b.1))
    }

    /// Evaluate an FE function at barycentric coordinates on a cell.
    pub fn eval_at<T: Scalar>(&self, coeffs: &[T], c: usize, l: [f64; 3]) -> T {
        let dofs = self.cell_dofs(c);
        let mut s = T::zero();
        for k in 0..self.nloc {
            s += coeffs[dofs[k]].scale(basis_value(self.degree, k, l));
        }
        s
    }
}

pub(crate) fn barycentric([a, b, c]: [Point2; 3], p: Point2) -> [f64; 3] {
    let det = (b - a).cross(c - a);
    let l1 = (p - a).cross(c - a) / det;
    let l2 = (b - a).cross(p - a) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
