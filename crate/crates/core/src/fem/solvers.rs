use num_complex::Complex64;

use super::direct::{BandLu, EnvelopeCholesky};
use super::sparse::{dot, norm2, CsrMatrix, Scalar};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest envelope (stored entries) a cached Cholesky factor may use before
/// falling back to preconditioned CG.
pub const MAX_ENVELOPE: usize = 30_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual `||b - Ax|| / ||b||`.
    pub residual: f64,
}

fn residual<T: Scalar>(a: &CsrMatrix<T>, b: &[T], x: &[T]) -> Vec<T> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(&u, &v)| u - v).collect()
}

fn jacobi(a: &CsrMatrix<f64>) -> Result<Vec<f64>> {
    a.diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite { row: i })
            }
        })
        .collect()
}

/// Jacobi-preconditioned conjugate gradients. With `deflate`, residuals and
/// search directions are kept orthogonal to the constant vector.
fn pcg(
    a: &CsrMatrix<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    deflate: bool,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let dinv = jacobi(a)?;
    let project = |v: &mut [f64]| {
        if deflate {
            let m = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    };
    let mut x = x0.map_or_else(|| vec![0.0; n], |x| x.to_vec());
    project(&mut x);
    let mut r = residual(a, b, &x);
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        it += 1;
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged { method: "conjugate gradient", iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(&mut r);
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            // Confirm against the true residual before stopping.
            let mut t = residual(a, b, &x);
            project(&mut t);
            rel = norm2(&t) / bnorm;
            if rel <= tol {
                break;
            }
            r = t;
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel > tol {
        return Err(Error::NotConverged { method: "conjugate gradient", iterations: it, residual: rel });
    }
    Ok((x, SolveStats { iterations: it, residual: rel }))
}

/// Solve a symmetric positive definite system to relative residual `tol`
/// with at most `10 * dim` iterations.
pub fn solve_spd(a: &CsrMatrix<f64>, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_spd_with(a, b, None, tol).map(|r| r.0)
}

pub fn solve_spd_with(a: &CsrMatrix<f64>, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    pcg(a, b, x0, tol, 10 * b.len().max(1), false)
}

/// Threshold on `|sum b| / sqrt(n)` relative to `||b||` for a right-hand side
/// to count as orthogonal to the constants.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Constant component of `b`, relative to `||b||`.
pub fn constant_component(b: &[f64]) -> f64 {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return 0.0;
    }
    b.iter().sum::<f64>().abs() / (b.len() as f64).sqrt() / bnorm
}

/// Solve a pure-Neumann problem whose kernel is the constants.
///
/// The constant component is deflated inside CG and the result is shifted so
/// that `sum w_i x_i = 0`; with `w = M 1` this is the zero-mean FE function.
pub fn solve_neumann_meanzero(a: &CsrMatrix<f64>, b: &[f64], weights: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_neumann_with(a, b, weights, None, tol).map(|r| r.0)
}

pub fn solve_neumann_with(
    a: &CsrMatrix<f64>,
    b: &[f64],
    weights: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
) -> Result<(Vec<f64>, SolveStats)> {
    let c = constant_component(b);
    if c > COMPATIBILITY_TOL {
        return Err(Error::Incompatible { residual: c });
    }
    let (mut x, stats) = pcg(a, b, x0, tol, 10 * b.len().max(1), true)?;
    shift_mean(&mut x, weights);
    Ok((x, stats))
}

pub(crate) fn shift_mean(x: &mut [f64], weights: &[f64]) {
    let total: f64 = weights.iter().sum();
    let m = dot(weights, x) / total;
    x.iter_mut().for_each(|v| *v -= m);
}

/// Incomplete LU with zero fill on the pattern of `a`.
struct Ilu0<T> {
    a: CsrMatrix<T>,
    diag: Vec<usize>,
}

impl<T: Scalar> Ilu0<T> {
    fn new(a: &CsrMatrix<T>) -> Option<Self> {
        let n = a.nrows();
        let mut f = a.clone();
        let diag: Vec<usize> = (0..n).map(|i| f.slot(i, i)).collect::<Option<_>>()?;
        let indptr = f.indptr().to_vec();
        let indices = f.indices().to_vec();
        let vals = f.values_mut();
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                pos[indices[k]] = k;
            }
            for k in indptr[i]..indptr[i + 1] {
                let j = indices[k];
                if j >= i {
                    break;
                }
                let piv = vals[diag[j]];
                if piv.modulus() == 0.0 {
                    return None;
                }
                let m = vals[k] / piv;
                vals[k] = m;
                for kk in diag[j] + 1..indptr[j + 1] {
                    let p = pos[indices[kk]];
                    if p != usize::MAX {
                        let u = vals[kk];
                        vals[p] -= m * u;
                    }
                }
            }
            for k in indptr[i]..indptr[i + 1] {
                pos[indices[k]] = usize::MAX;
            }
            if vals[diag[i]].modulus() == 0.0 || !vals[diag[i]].modulus().is_finite() {
                return None;
            }
        }
        Some(Self { a: f, diag })
    }

    fn apply(&self, r: &[T], z: &mut [T]) {
        let n = r.len();
        let (ip, ix, v) = (self.a.indptr(), self.a.indices(), self.a.values());
        for i in 0..n {
            let mut s = r[i];
            for k in ip[i]..self.diag[i] {
                s -= v[k] * z[ix[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..ip[i + 1] {
                s -= v[k] * z[ix[k]];
            }
            z[i] = s / v[self.diag[i]];
        }
    }
}

/// ILU(0)-preconditioned BiCGStab.
pub fn bicgstab<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &[T],
    x0: Option<&[T]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<T>, SolveStats)> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![T::zero(); n], SolveStats::default()));
    }
    let breakdown = |it, rel| Error::NotConverged { method: "BiCGStab", iterations: it, residual: rel };
    let pre = Ilu0::new(a).ok_or_else(|| breakdown(0, f64::INFINITY))?;
    let mut x = x0.map_or_else(|| vec![T::zero(); n], |x| x.to_vec());
    let mut r = residual(a, b, &x);
    let mut rel = norm2(&r) / bnorm;
    if rel <= tol {
        return Ok((x, SolveStats { iterations: 0, residual: rel }));
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut phat = vec![T::zero(); n];
    let mut shat = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let tiny = 1e-300;
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.modulus() < tiny || omega.modulus() < tiny {
            return Err(breakdown(it, rel));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut phat);
        a.mul_vec_into(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v.modulus() < tiny {
            return Err(breakdown(it, rel));
        }
        alpha = rho / r0v;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            rel = norm2(&residual(a, b, &x)) / bnorm;
            if rel <= tol {
                return Ok((x, SolveStats { iterations: it, residual: rel }));
            }
            r = residual(a, b, &x);
            continue;
        }
        pre.apply(&s, &mut shat);
        a.mul_vec_into(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt.modulus() < tiny {
            return Err(breakdown(it, rel));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm2(&r) / bnorm;
        if !rel.is_finite() {
            return Err(breakdown(it, rel));
        }
        if rel <= tol {
            rel = norm2(&residual(a, b, &x)) / bnorm;
            if rel <= tol {
                return Ok((x, SolveStats { iterations: it, residual: rel }));
            }
            r = residual(a, b, &x);
        }
    }
    Err(breakdown(max_iter, rel))
}

/// Solve a general complex system: BiCGStab first, banded LU if the Krylov
/// iteration breaks down or stalls. A singular matrix is reported as an
/// error.
pub fn solve_complex(a: &CsrMatrix<Complex64>, b: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    solve_complex_with(a, b, None, tol).map(|r| r.0)
}

pub fn solve_complex_with(
    a: &CsrMatrix<Complex64>,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    tol: f64,
) -> Result<(Vec<Complex64>, SolveStats)> {
    let max_iter = (10 * b.len()).clamp(50, 2000);
    match bicgstab(a, b, x0, tol, max_iter) {
        Ok(r) => Ok(r),
        Err(Error::NotConverged { iterations, .. }) => {
            let lu = BandLu::factor(a)?;
            let x = lu.solve(b);
            let bnorm = norm2(b).max(f64::MIN_POSITIVE);
            let rel = norm2(&residual(a, b, &x)) / bnorm;
            if !(rel <= tol.max(1e-12) * 1e3) {
                return Err(Error::NotConverged { method: "band LU", iterations: 1, residual: rel });
            }
            Ok((x, SolveStats { iterations: iterations + 1, residual: rel }))
        }
        Err(e) => Err(e),
    }
}

/// A constant SPD operator prepared for repeated solves.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Cholesky(EnvelopeCholesky),
    Iterative(CsrMatrix<f64>),
}

impl SpdSolver {
    /// Factor `a` if its envelope is small enough, otherwise keep it for CG.
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self> {
        let perm = super::direct::rcm_order(a);
        if EnvelopeCholesky::envelope_size(a, &perm) <= MAX_ENVELOPE {
            Ok(SpdSolver::Cholesky(EnvelopeCholesky::factor_with(a, perm)?))
        } else {
            Ok(SpdSolver::Iterative(a.clone()))
        }
    }

    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        match self {
            SpdSolver::Cholesky(f) => Ok((f.solve(b), SolveStats { iterations: 1, residual: 0.0 })),
            SpdSolver::Iterative(a) => solve_spd_with(a, b, x0, DEFAULT_TOL),
        }
    }
}

/// A constant pure-Neumann operator prepared for repeated mean-zero solves.
///
/// The direct path factors the operator with DOF 0 held at zero. For a
/// compatible right-hand side the dropped equation is implied by the others,
/// so the pinned solution solves the full system and only differs from the
/// mean-zero one by a constant, which the final shift removes.
#[derive(Debug, Clone)]
pub struct NeumannSolver {
    inner: SpdSolver,
    weights: Vec<f64>,
    full: CsrMatrix<f64>,
}

impl NeumannSolver {
    pub fn new(a: &CsrMatrix<f64>, weights: &[f64]) -> Result<Self> {
        let mut mask = vec![false; a.nrows()];
        mask[0] = true;
        let pinned = super::dirichlet::eliminate(a, &mask);
        let perm = super::direct::rcm_order(&pinned);
        let inner = if EnvelopeCholesky::envelope_size(&pinned, &perm) <= MAX_ENVELOPE {
            SpdSolver::Cholesky(EnvelopeCholesky::factor_with(&pinned, perm)?)
        } else {
            SpdSolver::Iterative(a.clone())
        };
        Ok(Self { inner, weights: weights.to_vec(), full: a.clone() })
    }

    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let c = constant_component(b);
        if c > COMPATIBILITY_TOL {
            return Err(Error::Incompatible { residual: c });
        }
        match &self.inner {
            SpdSolver::Cholesky(f) => {
                let mut rhs = b.to_vec();
                rhs[0] = 0.0;
                let mut x = f.solve(&rhs);
                shift_mean(&mut x, &self.weights);
                Ok((x, SolveStats { iterations: 1, residual: 0.0 }))
            }
            SpdSolver::Iterative(_) => solve_neumann_with(&self.full, b, &self.weights, x0, DEFAULT_TOL),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::dirichlet::constrain_dirichlet;
    use crate::fem::FeSpace;
    use crate::mesh::{gen_unit_square, Point2};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn space(m: usize, r: usize) -> FeSpace {
        FeSpace::new(Arc::new(gen_unit_square(m).unwrap()), r).unwrap()
    }

    #[test]
    fn identity_and_zero_rhs() {
        let a = CsrMatrix::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        assert_eq!(solve_spd(&a, &b, 1e-10).unwrap(), b);
        assert_eq!(solve_spd(&a, &[0.0; 5], 1e-10).unwrap(), vec![0.0; 5]);
    }

    fn poisson_error(m: usize) -> f64 {
        let s = space(m, 1);
        let k = s.stiffness_matrix();
        let f = s.sample(|p| 2.0 * PI * PI * (PI * p.x).sin() * (PI * p.y).sin());
        let b = s.load(&f);
        let bd = s.boundary_dofs().to_vec();
        let (a, rhs) = constrain_dirichlet(&s, &k, &b, &bd, &vec![0.0; bd.len()]).unwrap();
        let u = solve_spd(&a, &rhs, 1e-10).unwrap();
        let res = a.mul_vec(&u);
        let rnorm = norm2(&res.iter().zip(&rhs).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(rnorm <= 1e-10 * norm2(&rhs));
        s.l2_error(&u, |p| (PI * p.x).sin() * (PI * p.y).sin())
    }

    #[test]
    fn manufactured_poisson_rate_two() {
        let e: Vec<f64> = [8, 16, 32].iter().map(|&m| poisson_error(m)).collect();
        for w in e.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
        }
    }

    #[test]
    fn neumann_cosine_oracle() {
        let mut errs = Vec::new();
        for m in [8, 16, 32] {
            let s = space(m, 1);
            let k = s.stiffness_matrix();
            let w = s.mass_matrix().mul_vec(&vec![1.0; s.ndofs()]);
            let g = s.sample(|p| [-PI * (PI * p.x).sin(), 0.0]);
            let b = s.grad_load(&g);
            let q = solve_neumann_meanzero(&k, &b, &w, 1e-10).unwrap();
            assert!(s.mean(&q).abs() < 1e-12);
            errs.push(s.l2_error(&q, |p| (PI * p.x).cos()));
            let cached = NeumannSolver::new(&k, &w).unwrap().solve(&b, None).unwrap().0;
            for (x, y) in q.iter().zip(&cached) {
                assert!((x - y).abs() < 1e-8);
            }
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8);
        }
    }

    #[test]
    fn neumann_zero_and_incompatible() {
        let s = space(4, 1);
        let k = s.stiffness_matrix();
        let mass = s.mass_matrix();
        let w = mass.mul_vec(&vec![1.0; s.ndofs()]);
        assert_eq!(solve_neumann_meanzero(&k, &vec![0.0; s.ndofs()], &w, 1e-10).unwrap(), vec![0.0; s.ndofs()]);
        let b = mass.mul_vec(&vec![1.0; s.ndofs()]);
        assert!(matches!(solve_neumann_meanzero(&k, &b, &w, 1e-10), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn complex_identity_times_i() {
        let a = CsrMatrix::<Complex64>::identity(4).scaled(Complex64::i());
        let b: Vec<Complex64> = (0..4).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let x = solve_complex(&a, &b, 1e-10).unwrap();
        for (x, b) in x.iter().zip(&b) {
            assert!((x - (-Complex64::i() * b)).norm() < 1e-14);
        }
    }

    #[test]
    fn complex_singular_is_an_error() {
        let t = vec![
            (0, 0, Complex64::new(2.0, 0.0)),
            (0, 1, Complex64::new(1.0, 0.0)),
            (2, 2, Complex64::new(1.0, 1.0)),
            (2, 1, Complex64::new(0.5, 0.0)),
        ];
        let a = CsrMatrix::from_triplets(3, 3, &t).unwrap();
        let b = vec![Complex64::new(1.0, 0.0); 3];
        assert!(solve_complex(&a, &b, 1e-10).is_err());
    }

    /// A Hermitian positive definite system agrees with its real 2N form
    /// `[[Re, -Im], [Im, Re]]`.
    #[test]
    fn hermitian_matches_real_equivalent() {
        let s = space(6, 1);
        let n = s.ndofs();
        assert!(n <= 100);
        let kappa = 3.0;
        let a_field = s.sample(|p| [p.y - 0.5, 0.5 - p.x]);
        let nq = s.nq();
        // Magnetic Laplacian int ((i/k) grad + A) phi_k . conj((i/k) grad + A) phi_j + mass.
        let a = s.assemble_matrix(|c, q, phi, g, w, block: &mut [Complex64]| {
            let av = a_field[c * nq + q];
            let nl = phi.len();
            for j in 0..nl {
                let tj = [Complex64::new(av[0] * phi[j], g[j][0] / kappa), Complex64::new(av[1] * phi[j], g[j][1] / kappa)];
                for k in 0..nl {
                    let tk = [Complex64::new(av[0] * phi[k], g[k][0] / kappa), Complex64::new(av[1] * phi[k], g[k][1] / kappa)];
                    block[j * nl + k] += (tk[0] * tj[0].conj() + tk[1] * tj[1].conj() + phi[k] * phi[j]) * w;
                }
            }
        });
        assert!(a.hermitian_defect() < 1e-13);
        let b: Vec<Complex64> = s.dof_coords().iter().map(|p: &Point2| Complex64::new(p.x.sin(), p.y * p.y)).collect();
        let x = solve_complex(&a, &b, 1e-12).unwrap();
        let mut trip = Vec::new();
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                trip.push((i, j, v.re));
                trip.push((i, n + j, -v.im));
                trip.push((n + i, j, v.im));
                trip.push((n + i, n + j, v.re));
            }
        }
        let real = CsrMatrix::from_triplets(2 * n, 2 * n, &trip).unwrap();
        assert!(real.hermitian_defect() < 1e-13);
        let rb: Vec<f64> = b.iter().map(|z| z.re).chain(b.iter().map(|z| z.im)).collect();
        let y = solve_spd(&real, &rb, 1e-12).unwrap();
        for i in 0..n {
            assert!((x[i] - Complex64::new(y[i], y[n + i])).norm() < 1e-9);
        }
    }

    #[test]
    fn lu_fallback_on_indefinite_system() {
        // A skew-dominated system where ILU(0) has a zero pivot.
        let t = vec![
            (0, 1, Complex64::new(1.0, 0.0)),
            (1, 0, Complex64::new(1.0, 0.0)),
            (1, 1, Complex64::new(0.0, 0.0)),
            (0, 0, Complex64::new(0.0, 0.0)),
            (2, 2, Complex64::new(0.0, 2.0)),
        ];
        let a = CsrMatrix::from_triplets(3, 3, &t).unwrap();
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 4.0)];
        let x = solve_complex(&a, &b, 1e-10).unwrap();
        assert!((x[0] - 2.0).norm() < 1e-14 && (x[1] - 1.0).norm() < 1e-14 && (x[2] - 2.0).norm() < 1e-14);
    }
}
