use std::collections::{HashMap, HashSet};

use super::{edge_key, orient2d, BoundaryEdge, Point2, TriMesh};
use crate::error::{Error, Result};

/// Local longest-edge bisection.
///
/// Each level bisects every triangle within `radius` of `center` across its
/// longest edge, then closes the marking so that every triangle with a split
/// edge also splits its own longest edge. Triangles are subdivided into 2, 3
/// or 4 children depending on how many of their edges were marked. New nodes
/// on arc boundary segments are projected back onto the circle.
pub fn refine_local(mesh: &TriMesh, center: Point2, radius: f64, levels: usize) -> Result<TriMesh> {
    if levels == 0 {
        return Ok(mesh.clone());
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidSpec("refinement radius must be positive".into()));
    }
    let max_rounds = 10 * levels;
    let mut current = mesh.clone();
    for _ in 0..levels {
        current = bisect_once(&current, center, radius, max_rounds)?;
    }
    Ok(current)
}

fn longest_edge(nodes: &[Point2], tri: &[usize; 3]) -> usize {
    let mut best = 0;
    let mut best_len = -1.0;
    let mut best_key = (usize::MAX, usize::MAX);
    for k in 0..3 {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let len = nodes[a].dist(nodes[b]);
        let key = edge_key(a, b);
        // Ties resolve on the global edge key so neighbours agree.
        if len > best_len * (1.0 + 1e-12) || ((len - best_len).abs() <= 1e-12 * len && key < best_key) {
            best = k;
            best_len = len;
            best_key = key;
        }
    }
    best
}

fn near(tri: [Point2; 3], center: Point2, radius: f64) -> bool {
    let g = Point2::new(
        (tri[0].x + tri[1].x + tri[2].x) / 3.0,
        (tri[0].y + tri[1].y + tri[2].y) / 3.0,
    );
    if tri.iter().any(|p| p.dist(center) <= radius) || g.dist(center) <= radius {
        return true;
    }
    orient2d(tri[0], tri[1], center) >= 0.0
        && orient2d(tri[1], tri[2], center) >= 0.0
        && orient2d(tri[2], tri[0], center) >= 0.0
}

fn bisect_once(mesh: &TriMesh, center: Point2, radius: f64, max_rounds: usize) -> Result<TriMesh> {
    let nodes = mesh.nodes();
    let tris = mesh.triangles();
    let longest: Vec<usize> = tris.iter().map(|t| longest_edge(nodes, t)).collect();
    let lkey = |t: usize| {
        let k = longest[t];
        edge_key(tris[t][k], tris[t][(k + 1) % 3])
    };

    let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            edge_tris.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
        }
    }

    let mut marked: HashSet<(usize, usize)> = HashSet::new();
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    for t in 0..tris.len() {
        if near(mesh.vertices(t), center, radius) && marked.insert(lkey(t)) {
            frontier.push(lkey(t));
        }
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let mut rounds = 0;
    while !frontier.is_empty() {
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::RefinementClosure { sweeps: max_rounds });
        }
        let mut next = Vec::new();
        for e in frontier.drain(..) {
            for &t in &edge_tris[&e] {
                let k = lkey(t);
                if marked.insert(k) {
                    next.push(k);
                }
            }
        }
        frontier = next;
    }

    let mut new_nodes = nodes.to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let boundary_marker: HashMap<(usize, usize), i32> = mesh
        .boundary_edges()
        .iter()
        .map(|e| (edge_key(e.a, e.b), e.marker))
        .collect();
    let mut keys: Vec<&(usize, usize)> = marked.iter().collect();
    keys.sort_unstable();
    for &key in keys {
        let mut p = nodes[key.0].midpoint(nodes[key.1]);
        if let Some(arc) = boundary_marker.get(&key).and_then(|&m| mesh.arc_for_marker(m)) {
            let d = p - arc.center;
            p = arc.center + d * (arc.radius / d.norm());
        }
        midpoint.insert(key, new_nodes.len());
        new_nodes.push(p);
    }

    let mid = |a: usize, b: usize| midpoint.get(&edge_key(a, b)).copied();
    let mut new_tris = Vec::with_capacity(tris.len() * 2);
    for (t, tri) in tris.iter().enumerate() {
        let kl = longest[t];
        let (a, b, c) = (tri[kl], tri[(kl + 1) % 3], tri[(kl + 2) % 3]);
        let Some(m) = mid(a, b) else {
            new_tris.push(*tri);
            continue;
        };
        match mid(c, a) {
            Some(m2) => {
                new_tris.push([c, m2, m]);
                new_tris.push([m2, a, m]);
            }
            None => new_tris.push([a, m, c]),
        }
        match mid(b, c) {
            Some(m3) => {
                new_tris.push([b, m3, m]);
                new_tris.push([m3, c, m]);
            }
            None => new_tris.push([m, b, c]),
        }
    }
    for (t, tri) in new_tris.iter().enumerate() {
        if orient2d(new_nodes[tri[0]], new_nodes[tri[1]], new_nodes[tri[2]]) <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "refinement produced an inverted triangle {t} after boundary projection"
            )));
        }
    }

    let mut new_edges = Vec::with_capacity(mesh.boundary_edges().len() + 8);
    for e in mesh.boundary_edges() {
        match mid(e.a, e.b) {
            Some(m) => {
                new_edges.push(BoundaryEdge { a: e.a, b: m, marker: e.marker });
                new_edges.push(BoundaryEdge { a: m, b: e.b, marker: e.marker });
            }
            None => new_edges.push(*e),
        }
    }
    TriMesh::new(new_nodes, new_tris, new_edges, mesh.arcs().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{disk::ARC_MARKER, gen_disk_notch, gen_lshape, gen_unit_square, MeshSpec};

    #[test]
    fn zero_levels_is_identity() {
        let mesh = gen_unit_square(4).unwrap();
        let out = refine_local(&mesh, Point2::new(0.5, 0.5), 0.1, 0).unwrap();
        assert_eq!(out, mesh);
    }

    #[test]
    fn square_corner_refinement_keeps_angle_bound() {
        let mesh = gen_unit_square(2).unwrap();
        let out = refine_local(&mesh, Point2::new(0.0, 0.0), 0.25, 1).unwrap();
        assert!(out.num_triangles() > 8);
        assert!(out.min_angle() >= 0.5 * mesh.min_angle() - 1e-12);
        assert!((out.total_area() - 1.0).abs() < 1e-12);
        out.validate().unwrap();
    }

    #[test]
    fn repeated_levels_stay_conforming() {
        let mesh = gen_lshape(8).unwrap();
        let out = refine_local(&mesh, Point2::new(0.0, 0.0), 0.2, 4).unwrap();
        assert!((out.total_area() - 0.75).abs() < 1e-12);
        assert!(out.min_angle() >= 0.5 * mesh.min_angle() - 1e-12);
        assert!(out.num_triangles() > mesh.num_triangles());
        assert_eq!(out.corner_nodes().len(), 6);
    }

    #[test]
    fn arc_midpoints_are_projected() {
        let mesh = gen_disk_notch(&MeshSpec::disk_notch(64)).unwrap();
        let out = refine_local(&mesh, Point2::new(0.75, 0.0), 0.45, 2).unwrap();
        assert!(out.num_nodes() > mesh.num_nodes());
        let mut new_arc_nodes = 0;
        for e in out.boundary_edges().iter().filter(|e| e.marker == ARC_MARKER) {
            for v in [e.a, e.b] {
                assert!((out.nodes()[v].norm() - 1.0).abs() < 1e-12);
                if v >= mesh.num_nodes() {
                    new_arc_nodes += 1;
                }
            }
        }
        assert!(new_arc_nodes > 0);
        assert_eq!(out.corner_nodes().len(), 3);
    }
}
