use std::collections::HashMap;

use super::{Point2, TriMesh};
use crate::error::{Error, Result};

/// Structured grid on `[0,1]^2` with `m` cells per side, each cell split along
/// its `(0,0)-(1,1)` diagonal. Boundary markers: 1 bottom, 2 right, 3 top,
/// 4 left.
pub fn gen_unit_square(m: usize) -> Result<TriMesh> {
    if m < 2 {
        return Err(Error::InvalidSpec(format!("m must be at least 2, got {m}")));
    }
    let h = 1.0 / m as f64;
    let idx = |i: usize, j: usize| j * (m + 1) + i;
    let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            nodes.push(Point2::new(i as f64 * h, j as f64 * h));
        }
    }
    let mut tris = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([v00, v10, v11]);
            tris.push([v00, v11, v01]);
        }
    }
    TriMesh::from_triangles(nodes, tris, vec![], |a, b| {
        let mid = a.midpoint(b);
        let tol = 0.25 * h;
        if mid.y < tol {
            1
        } else if mid.x > 1.0 - tol {
            2
        } else if mid.y > 1.0 - tol {
            3
        } else {
            4
        }
    })
}

/// L-shaped domain `[-1/2,1/2]^2` minus the open upper-right quadrant, with
/// the reentrant corner at the origin. `m` must be even.
///
/// Markers run counterclockwise from the bottom side: 1 bottom, 2 right,
/// 3 inner horizontal, 4 inner vertical, 5 top, 6 left.
pub fn gen_lshape(m: usize) -> Result<TriMesh> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidSpec(format!(
            "L-shape needs an even m >= 2 so the reentrant corner is a grid point, got {m}"
        )));
    }
    let h = 1.0 / m as f64;
    let half = m / 2;
    let coord = |k: usize| -0.5 + k as f64 * h;
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut tris = Vec::new();
    // Node numbering follows a row-major sweep over the kept cells' corners.
    let keep = |i: usize, j: usize| !(i >= half && j >= half);
    for j in 0..=m {
        for i in 0..=m {
            let touches_kept = [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)]
                .iter()
                .any(|&(ci, cj)| ci < m && cj < m && keep(ci, cj));
            if touches_kept {
                index.insert((i, j), nodes.len());
                nodes.push(Point2::new(coord(i), coord(j)));
            }
        }
    }
    for j in 0..m {
        for i in 0..m {
            if !keep(i, j) {
                continue;
            }
            let v00 = index[&(i, j)];
            let v10 = index[&(i + 1, j)];
            let v11 = index[&(i + 1, j + 1)];
            let v01 = index[&(i, j + 1)];
            tris.push([v00, v10, v11]);
            tris.push([v00, v11, v01]);
        }
    }
    let tol = 0.25 * h;
    TriMesh::from_triangles(nodes, tris, vec![], move |a, b| {
        let mid = a.midpoint(b);
        if mid.y < -0.5 + tol {
            1
        } else if mid.x > 0.5 - tol {
            2
        } else if mid.y.abs() < tol && mid.x > 0.0 {
            3
        } else if mid.x.abs() < tol && mid.y > 0.0 {
            4
        } else if mid.y > 0.5 - tol {
            5
        } else {
            6
        }
    })
}
