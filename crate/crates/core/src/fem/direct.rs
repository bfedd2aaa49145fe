//! Direct sparse factorizations on a reverse Cuthill-McKee ordering: an
//! envelope Cholesky for SPD operators that are factored once and reused,
//! and a banded LU with partial pivoting used as the fallback for complex
//! systems.

use std::collections::VecDeque;

use super::sparse::{CsrMatrix, Scalar};
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of the (symmetrized) graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_order<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in a.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let bfs = |start: usize, mark: &mut Vec<bool>, out: &mut Vec<usize>| -> usize {
        // Returns the last node of the deepest level, marking visited nodes.
        let mut queue = VecDeque::from([start]);
        mark[start] = true;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            out.push(v);
            last = v;
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !mark[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                mark[w] = true;
                queue.push_back(w);
            }
        }
        last
    };

    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &seed in &by_degree {
        if done[seed] {
            continue;
        }
        // Two sweeps towards a pseudo-peripheral start node.
        let mut start = seed;
        for _ in 0..2 {
            let mut mark = done.clone();
            let mut scratch = Vec::new();
            start = bfs(start, &mut mark, &mut scratch);
        }
        bfs(start, &mut done, &mut order);
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Number of stored entries the factor of `a` would need.
    pub fn envelope_size(a: &CsrMatrix<f64>, perm: &[usize]) -> usize {
        let first = envelope_first(a, perm);
        first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
    }

    pub fn factor(a: &CsrMatrix<f64>) -> Result<Self> {
        let perm = rcm_order(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix<f64>, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first = envelope_first(a, &perm);
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &done[start[j]..start[j] + j - fj + 1];
                let mut s = row_i[j - fi];
                let li = &row_i[k0 - fi..j - fi];
                let lj = &row_j[k0 - fj..j - fj];
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                row_i[j - fi] = s / row_j[j - fj];
            }
            let d = row_i[i - fi] - row_i[..i - fi].iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: perm[i] });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self { perm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in (fi..i).zip(&row[..i - fi]) {
                y[k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn envelope_first<T: Scalar>(a: &CsrMatrix<T>, perm: &[usize]) -> Vec<usize> {
    let n = a.nrows();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..n).collect();
    for old_i in 0..n {
        let i = inv[old_i];
        for &old_j in a.row(old_i).0 {
            let j = inv[old_j];
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            first[hi] = first[hi].min(lo);
        }
    }
    first
}

/// Banded LU with partial pivoting, `P A P^T` reordered by RCM.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    perm: Vec<usize>,
    kl: usize,
    width: usize,
    /// Row at position `r` stores columns `r - kl .. r - kl + width`.
    u: Vec<T>,
    /// Multipliers of step `i`, for rows `i+1 ..= i+kl`.
    l: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidSpec("band LU needs a square matrix".into()));
        }
        let perm = rcm_order(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut u = vec![T::zero(); n * width];
        let scale = a.values().iter().map(|v| v.modulus()).fold(0.0, f64::max);
        for old_i in 0..n {
            let i = inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = inv[old_j];
                u[i * width + (j + kl - i)] = v;
            }
        }
        let mut l = vec![T::zero(); n * kl.max(1)];
        let mut pivots = vec![0; n];
        let at = |r: usize, c: usize| r * width + (c + kl - r);
        for i in 0..n {
            let last = (i + kl).min(n - 1);
            let mut p = i;
            let mut best = u[at(i, i)].modulus();
            for r in i + 1..=last {
                let v = u[at(r, i)].modulus();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 1e-13 * scale) {
                return Err(Error::Singular { row: perm[i] });
            }
            pivots[i] = p;
            let cend = (i + kl + ku + 1).min(n);
            if p != i {
                for c in i..cend {
                    u.swap(at(i, c), at(p, c));
                }
            }
            let piv = u[at(i, i)];
            for r in i + 1..=last {
                let f = u[at(r, i)] / piv;
                l[i * kl + (r - i - 1)] = f;
                u[at(r, i)] = T::zero();
                if f != T::zero() {
                    for c in i + 1..cend {
                        let ui = u[at(i, c)];
                        u[at(r, c)] -= f * ui;
                    }
                }
            }
        }
        Ok(Self { perm, kl, width, u, l, pivots })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        let kl = self.kl;
        let at = |r: usize, c: usize| r * self.width + (c + kl - r);
        let mut y: Vec<T> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            y.swap(i, self.pivots[i]);
            let yi = y[i];
            for r in i + 1..=(i + kl).min(n - 1) {
                let f = self.l[i * kl + (r - i - 1)];
                y[r] -= f * yi;
            }
        }
        let ku_end = self.width - kl;
        for i in (0..n).rev() {
            let mut s = y[i];
            for c in i + 1..(i + ku_end).min(n) {
                s -= self.u[at(i, c)] * y[c];
            }
            y[i] = s / self.u[at(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
