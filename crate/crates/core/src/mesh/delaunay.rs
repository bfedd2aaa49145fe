//! Incremental Bowyer-Watson Delaunay triangulation of a point set.
//!
//! Predicates run on copies of the points perturbed by a tiny deterministic
//! jitter (1e-8 of the bounding span) so that cocircular inputs (lattices,
//! points sampled on a circle) never produce ties.

use std::collections::HashMap;

use super::{orient2d, Point2};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `n[k]` is the neighbour across the edge opposite `v[k]`.
    n: [usize; 3],
}

fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// SplitMix64 hash used for reproducible jitter.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_jitter(i: usize, salt: u64) -> f64 {
    (mix(i as u64 ^ salt.rotate_left(17)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Triangulate `points`; returns counterclockwise triangles indexing `points`.
pub(crate) fn triangulate(points: &[Point2]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidSpec("need at least three points to triangulate".into()));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let center = lo.midpoint(hi);
    let eps = 1e-8 * span;
    let mut pts: Vec<Point2> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Point2::new(p.x + eps * unit_jitter(i, 1), p.y + eps * unit_jitter(i, 2)))
        .collect();
    let big = 50.0 * span;
    pts.push(Point2::new(center.x - big, center.y - big));
    pts.push(Point2::new(center.x + big, center.y - big));
    pts.push(Point2::new(center.x, center.y + big));

    let mut tris = vec![Tri {
        v: [n, n + 1, n + 2],
        n: [NONE; 3],
    }];
    let mut alive = vec![true];
    let mut free: Vec<usize> = Vec::new();
    let mut in_cavity: Vec<bool> = vec![false];

    // Spatially coherent insertion order keeps the walk short.
    let cell = span / (n as f64).sqrt().max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| {
        let gy = ((points[i].y - lo.y) / cell) as i64;
        let gx = ((points[i].x - lo.x) / cell) as i64;
        (gy, if gy % 2 == 0 { gx } else { -gx })
    });

    let mut last = 0usize;
    let mut cavity: Vec<usize> = Vec::new();
    let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
    for &pi in &order {
        let p = pts[pi];
        let start = locate(&tris, &alive, &pts, last, p).ok_or_else(|| {
            Error::InvalidSpec("delaunay: point location failed".into())
        })?;

        cavity.clear();
        cavity.push(start);
        in_cavity[start] = true;
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for e in 0..3 {
                let nb = tris[t].n[e];
                if nb == NONE || in_cavity[nb] {
                    continue;
                }
                let [a, b, c] = tris[nb].v;
                if incircle(pts[a], pts[b], pts[c], p) > 0.0 {
                    in_cavity[nb] = true;
                    cavity.push(nb);
                }
            }
        }

        boundary.clear();
        for &t in &cavity {
            for e in 0..3 {
                let nb = tris[t].n[e];
                if nb == NONE || !in_cavity[nb] {
                    let a = tris[t].v[(e + 1) % 3];
                    let b = tris[t].v[(e + 2) % 3];
                    if orient2d(pts[a], pts[b], p) <= 0.0 {
                        return Err(Error::InvalidSpec(
                            "delaunay: cavity is not star-shaped".into(),
                        ));
                    }
                    boundary.push((a, b, nb));
                }
            }
        }
        for &t in &cavity {
            in_cavity[t] = false;
            alive[t] = false;
            free.push(t);
        }

        let mut by_start: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outer) in &boundary {
            let slot = match free.pop() {
                Some(s) => s,
                None => {
                    tris.push(Tri { v: [0; 3], n: [NONE; 3] });
                    alive.push(false);
                    in_cavity.push(false);
                    tris.len() - 1
                }
            };
            tris[slot] = Tri {
                v: [a, b, pi],
                n: [NONE, NONE, outer],
            };
            alive[slot] = true;
            if outer != NONE {
                // The shared edge is the one opposite the vertex not in {a, b}.
                let e = (0..3)
                    .find(|&e| tris[outer].v[e] != a && tris[outer].v[e] != b)
                    .expect("outer triangle shares edge");
                tris[outer].n[e] = slot;
            }
            by_start.insert(a, slot);
            created.push(slot);
        }
        for &t in &created {
            let b = tris[t].v[1];
            // Edge (b, p) is shared with the new triangle starting at b.
            let across_bp = by_start[&b];
            tris[t].n[0] = across_bp;
            tris[across_bp].n[1] = t;
        }
        last = created[0];
    }

    let mut out = Vec::with_capacity(tris.len());
    for (t, tri) in tris.iter().enumerate() {
        if !alive[t] || tri.v.iter().any(|&v| v >= n) {
            continue;
        }
        let [a, b, c] = tri.v;
        if orient2d(points[a], points[b], points[c]) > 0.0 {
            out.push([a, b, c]);
        } else {
            out.push([a, c, b]);
        }
    }
    Ok(out)
}

fn locate(tris: &[Tri], alive: &[bool], pts: &[Point2], start: usize, p: Point2) -> Option<usize> {
    let mut t = if alive[start] {
        start
    } else {
        alive.iter().position(|&a| a)?
    };
    let limit = 4 * tris.len() + 16;
    'walk: for _ in 0..limit {
        let tri = &tris[t];
        for e in 0..3 {
            let a = pts[tri.v[(e + 1) % 3]];
            let b = pts[tri.v[(e + 2) % 3]];
            if orient2d(a, b, p) < 0.0 {
                let nb = tri.n[e];
                if nb == NONE {
                    return None;
                }
                t = nb;
                continue 'walk;
            }
        }
        return Some(t);
    }
    // Walk cycled; fall back to a scan.
    (0..tris.len()).find(|&t| {
        alive[t] && {
            let [a, b, c] = tris[t].v;
            orient2d(pts[a], pts[b], p) >= 0.0
                && orient2d(pts[b], pts[c], p) >= 0.0
                && orient2d(pts[c], pts[a], p) >= 0.0
        }
    })
}
