use std::f64::consts::PI;

use super::delaunay::triangulate;
use super::{ArcBoundary, BoundaryEdge, DomainKind, MeshSpec, Point2, TriMesh};
use crate::error::{Error, Result};

pub const ARC_MARKER: i32 = 1;
pub const NOTCH_LOWER_MARKER: i32 = 2;
pub const NOTCH_UPPER_MARKER: i32 = 3;

/// Unit disk centred at the origin with an inward triangular notch at polar
/// angle 0.
///
/// The notch shoulders sit on the circle at angles `±notch_halfangle`; the
/// apex sits at `(1 - notch_depth, 0)`. The boundary carries
/// `boundary_points` nodes spread proportionally to segment length. Interior
/// nodes come from a hexagonal lattice kept clear of the boundary, so the
/// Delaunay triangulation of all nodes conforms to the boundary polygon.
///
/// Markers: 1 circular arc, 2 lower notch edge, 3 upper notch edge.
pub fn gen_disk_notch(spec: &MeshSpec) -> Result<TriMesh> {
    if spec.domain != DomainKind::DiskNotch {
        return Err(Error::InvalidSpec("gen_disk_notch needs a disk_notch spec".into()));
    }
    spec.validate()?;
    let theta = spec.notch_halfangle;
    let apex = Point2::new(1.0 - spec.notch_depth, 0.0);
    let upper = Point2::new(theta.cos(), theta.sin());
    let lower = Point2::new(theta.cos(), -theta.sin());
    if apex.x >= upper.x - 1e-3 {
        return Err(Error::InvalidSpec(format!(
            "notch apex at x = {} does not lie inside the shoulder chord x = {}",
            apex.x, upper.x
        )));
    }
    let n = spec.boundary_points;
    let arc_len = 2.0 * PI - 2.0 * theta;
    let edge_len = apex.dist(upper);
    let perimeter = arc_len + 2.0 * edge_len;
    let k_edge = ((n as f64 * edge_len / perimeter).round() as usize).max(1);
    let k_arc = n - 2 * k_edge;
    if k_arc < 8 {
        return Err(Error::InvalidSpec("too few boundary points for the arc".into()));
    }

    let mut boundary: Vec<Point2> = Vec::with_capacity(n);
    let mut markers: Vec<i32> = Vec::with_capacity(n);
    for i in 0..k_arc {
        let phi = theta + arc_len * i as f64 / k_arc as f64;
        boundary.push(Point2::new(phi.cos(), phi.sin()));
        markers.push(ARC_MARKER);
    }
    for i in 0..k_edge {
        let s = i as f64 / k_edge as f64;
        boundary.push(lower + (apex - lower) * s);
        markers.push(NOTCH_LOWER_MARKER);
    }
    for i in 0..k_edge {
        let s = i as f64 / k_edge as f64;
        boundary.push(apex + (upper - apex) * s);
        markers.push(NOTCH_UPPER_MARKER);
    }
    debug_assert_eq!(boundary.len(), n);

    let h = perimeter / n as f64;
    let interior = lattice_points(&boundary, h);
    let mut nodes = boundary.clone();
    nodes.extend_from_slice(&interior);

    let mut tris = inside_triangles(&nodes, &boundary)?;
    for _ in 0..4 {
        smooth(&mut nodes, &tris, n, &boundary, h);
        tris = inside_triangles(&nodes, &boundary)?;
    }

    let edges = (0..n)
        .map(|i| BoundaryEdge {
            a: i,
            b: (i + 1) % n,
            marker: markers[i],
        })
        .collect();
    let arcs = vec![ArcBoundary {
        marker: ARC_MARKER,
        center: Point2::new(0.0, 0.0),
        radius: 1.0,
    }];
    TriMesh::new(nodes, tris, edges, arcs)
}

/// Exact area of the notched disk (the disk minus the notch triangle).
pub fn notched_disk_area(depth: f64, halfangle: f64) -> f64 {
    let apex = 1.0 - depth;
    let chord_x = halfangle.cos();
    let notch = (chord_x - apex) * halfangle.sin();
    let segment = halfangle - halfangle.sin() * halfangle.cos();
    PI - notch - segment
}

fn lattice_points(boundary: &[Point2], h: f64) -> Vec<Point2> {
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (1.0 / dy).ceil() as i64 + 1;
    let cols = (1.0 / h).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in -rows..=rows {
        let y = j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols..=cols {
            let p = Point2::new(i as f64 * h + shift, y);
            if p.norm() < 1.0 && point_in_polygon(p, boundary) && dist_to_polygon(p, boundary) >= 0.7 * h {
                out.push(p);
            }
        }
    }
    out
}

pub(crate) fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_to_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

fn dist_to_polygon(p: Point2, poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| dist_to_segment(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn inside_triangles(nodes: &[Point2], boundary: &[Point2]) -> Result<Vec<[usize; 3]>> {
    let all = triangulate(nodes)?;
    Ok(all
        .into_iter()
        .filter(|&[a, b, c]| {
            let g = Point2::new(
                (nodes[a].x + nodes[b].x + nodes[c].x) / 3.0,
                (nodes[a].y + nodes[b].y + nodes[c].y) / 3.0,
            );
            point_in_polygon(g, boundary)
        })
        .collect())
}

/// One Laplacian smoothing sweep over interior nodes. A move is rejected if
/// it would bring the node closer than `0.6 h` to the boundary.
fn smooth(nodes: &mut [Point2], tris: &[[usize; 3]], n_boundary: usize, boundary: &[Point2], h: f64) {
    let mut sum = vec![Point2::default(); nodes.len()];
    let mut count = vec![0usize; nodes.len()];
    for tri in tris {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            sum[a] = sum[a] + nodes[b];
            sum[b] = sum[b] + nodes[a];
            count[a] += 1;
            count[b] += 1;
        }
    }
    for i in n_boundary..nodes.len() {
        if count[i] == 0 {
            continue;
        }
        let target = sum[i] * (1.0 / count[i] as f64);
        if point_in_polygon(target, boundary) && dist_to_polygon(target, boundary) >= 0.6 * h {
            nodes[i] = target;
        }
    }
}
