use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, Neg, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{Num, NumAssign};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Field over which matrices and vectors are built: `f64` or `Complex64`.
pub trait Scalar:
    Num + NumAssign + Copy + Send + Sync + Debug + Neg<Output = Self> + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Hermitian inner product `sum conj(a_i) b_i`, accumulated sequentially.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * *y;
    }
    s
}

pub fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_sqr()).sum::<f64>().sqrt()
}

/// Compressed sparse row matrix. Column indices within a row are sorted and
/// unique. The structure arrays are shared between matrices assembled on the
/// same pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Arc<[usize]>,
    indices: Arc<[usize]>,
    values: Vec<T>,
}

pub type SparseMat = CsrMatrix<f64>;

const PAR_ROWS: usize = 4096;

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Arc<[usize]>,
        indices: Arc<[usize]>,
        values: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || indptr[nrows] != indices.len() || values.len() != indices.len() {
            return Err(Error::InvalidSpec("inconsistent CSR arrays".into()));
        }
        for i in 0..nrows {
            let row = &indices[indptr[i]..indptr[i + 1]];
            if indptr[i] > indptr[i + 1] || row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&j| j >= ncols) {
                return Err(Error::InvalidSpec(format!("row {i} of CSR matrix is malformed")));
            }
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, T)> = triplets.to_vec();
        if let Some(&(i, j, _)) = t.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::InvalidSpec(format!("triplet ({i}, {j}) out of bounds")));
        }
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<T> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr: indptr.into(),
            indices: indices.into(),
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect::<Vec<_>>().into(),
            indices: (0..n).collect::<Vec<_>>().into(),
            values: d.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// Position of `(i, j)` in the value array, if stored.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.indptr[i] + k)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "vector length does not match matrix columns");
        assert_eq!(y.len(), self.nrows);
        let row = |i: usize| {
            let mut s = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            s
        };
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && (Arc::ptr_eq(&self.indptr, &other.indptr) || self.indptr == other.indptr)
            && (Arc::ptr_eq(&self.indices, &other.indices) || self.indices == other.indices)
    }

    /// `self + alpha * other`; both matrices must share a pattern.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Result<Self> {
        if !self.same_pattern(other) {
            return Err(Error::InvalidSpec("matrices have different sparsity patterns".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += alpha * *b;
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = *v * alpha);
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Largest `|a_ij - conj(a_ji)|` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i).conj()).modulus());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }
}

impl CsrMatrix<f64> {
    pub fn to_complex(&self) -> CsrMatrix<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

/// Sparsity pattern of a finite element operator together with the value
/// slot of every local `(a, b)` pair of every cell, so that element matrices
/// can be scattered without searching.
#[derive(Debug, Clone)]
pub struct AssemblyPattern {
    n: usize,
    nloc: usize,
    indptr: Arc<[usize]>,
    indices: Arc<[usize]>,
    slots: Vec<usize>,
}

impl AssemblyPattern {
    /// `cell_dofs` is the flat list of `nloc` DOFs per cell.
    pub fn new(n: usize, nloc: usize, cell_dofs: &[usize]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cell in cell_dofs.chunks(nloc) {
            for &a in cell {
                rows[a].extend_from_slice(cell);
            }
        }
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            indices.extend_from_slice(r);
            indptr.push(indices.len());
        }
        let mut slots = Vec::with_capacity(cell_dofs.len() * nloc);
        for cell in cell_dofs.chunks(nloc) {
            for &a in cell {
                let row = &indices[indptr[a]..indptr[a + 1]];
                for &b in cell {
                    slots.push(indptr[a] + row.binary_search(&b).expect("pattern contains cell pair"));
                }
            }
        }
        Self {
            n,
            nloc,
            indptr: indptr.into(),
            indices: indices.into(),
            slots,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Sum the per-cell dense blocks (row-major, `nloc * nloc` each) into a
    /// matrix. Accumulation runs in cell order so results are reproducible.
    pub fn scatter<T: Scalar>(&self, blocks: &[T]) -> CsrMatrix<T> {
        assert_eq!(blocks.len(), self.slots.len());
        let mut values = vec![T::zero(); self.indices.len()];
        for (&s, &v) in self.slots.iter().zip(blocks) {
            values[s] += v;
        }
        CsrMatrix {
            nrows: self.n,
            ncols: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }

    pub fn zeros<T: Scalar>(&self) -> CsrMatrix<T> {
        CsrMatrix {
            nrows: self.n,
            ncols: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: vec![T::zero(); self.indices.len()],
        }
    }

    pub fn local_size(&self) -> usize {
        self.nloc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 2), 4.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![6.0, -1.0]);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn malformed_parts_rejected() {
        let bad = CsrMatrix::<f64>::from_parts(2, 2, vec![0, 2, 1].into(), vec![1, 0].into(), vec![1.0, 1.0]);
        assert!(bad.is_err());
        let unsorted = CsrMatrix::<f64>::from_parts(1, 2, vec![0, 2].into(), vec![1, 0].into(), vec![1.0, 1.0]);
        assert!(unsorted.is_err());
    }

    #[test]
    fn pattern_scatter_matches_triplets() {
        let cells = [0usize, 1, 2, 1, 3, 2];
        let p = AssemblyPattern::new(4, 3, &cells);
        let blocks: Vec<f64> = (0..18).map(|k| k as f64).collect();
        let a = p.scatter(&blocks);
        let mut trip = Vec::new();
        for (c, cell) in cells.chunks(3).enumerate() {
            for (i, &r) in cell.iter().enumerate() {
                for (j, &s) in cell.iter().enumerate() {
                    trip.push((r, s, blocks[c * 9 + i * 3 + j]));
                }
            }
        }
        let b = CsrMatrix::from_triplets(4, 4, &trip).unwrap();
        assert_eq!(a.to_dense(), b.to_dense());
        assert_eq!(p.nnz(), 14);
    }
}
