//! Conforming triangulations of curved polygons.

mod delaunay;
mod disk;
mod generate;
mod io;
mod refine;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::path::PathBuf;

use crate::error::{Error, Result};

pub use disk::{gen_disk_notch, notched_disk_area};
pub use generate::{gen_lshape, gen_unit_square};
pub use io::{parse_mesh, read_mesh, write_mesh, format_mesh};
pub use refine::refine_local;

/// Two boundary-edge normals closer than this (radians) belong to a smooth point.
pub const CORNER_ANGLE_TOL: f64 = 1e-8;

/// Within one marked segment, a turn sharper than this is still a corner.
pub const SHARP_FEATURE_ANGLE: f64 = PI / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Start node; the domain lies to the left of `a -> b`.
    pub a: usize,
    pub b: usize,
    pub marker: i32,
}

/// A boundary segment (identified by its marker) lying on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcBoundary {
    pub marker: i32,
    pub center: Point2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeClass {
    Interior,
    Boundary {
        normal: [f64; 2],
    },
    Corner {
        /// Outward normals of the incoming and outgoing boundary edges.
        normals: [[f64; 2]; 2],
        interior_angle: f64,
    },
}

impl NodeClass {
    pub fn is_boundary(&self) -> bool {
        !matches!(self, NodeClass::Interior)
    }

    pub fn is_corner(&self) -> bool {
        matches!(self, NodeClass::Corner { .. })
    }
}

/// Immutable conforming triangulation with boundary markers and per-node
/// boundary classification.
#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    node_class: Vec<NodeClass>,
    arcs: Vec<ArcBoundary>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.triangles == other.triangles
            && self.boundary_edges == other.boundary_edges
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    /// Build and validate a mesh.
    ///
    /// Clockwise triangles are reoriented. Every edge used by exactly one
    /// triangle must appear in `boundary_edges` (in either direction); the
    /// stored boundary edges are oriented so the domain lies on their left.
    pub fn new(
        nodes: Vec<Point2>,
        mut triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        arcs: Vec<ArcBoundary>,
    ) -> Result<TriMesh> {
        let n = nodes.len();
        if let Some(i) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidSpec(format!("node {i} has a non-finite coordinate")));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidSpec("mesh has no triangles".into()));
        }
        let span = bounding_span(&nodes);
        for (t, tri) in triangles.iter_mut().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidSpec(format!(
                    "triangle {t} references missing node {v}"
                )));
            }
            let area2 = orient2d(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if area2.abs() <= 1e-14 * span * span {
                return Err(Error::InvalidSpec(format!("triangle {t} is degenerate")));
            }
            if area2 < 0.0 {
                tri.swap(1, 2);
            }
        }
        check_duplicates(&nodes, span)?;

        let mut used = vec![false; n];
        for tri in &triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidSpec(format!("node {i} is not used by any triangle")));
        }

        // Directed boundary edges from topology.
        let topo = boundary_edges_of(&triangles)?;
        let mut markers: HashMap<(usize, usize), i32> = HashMap::with_capacity(boundary_edges.len());
        for e in &boundary_edges {
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidSpec(format!(
                    "boundary edge ({}, {}) references a missing node",
                    e.a, e.b
                )));
            }
            markers.insert(edge_key(e.a, e.b), e.marker);
        }
        if markers.len() != topo.len() {
            return Err(Error::InvalidSpec(format!(
                "{} boundary edges listed but the triangulation has {}",
                markers.len(),
                topo.len()
            )));
        }
        let mut oriented = Vec::with_capacity(topo.len());
        for &(a, b) in &topo {
            let marker = *markers.get(&edge_key(a, b)).ok_or_else(|| {
                Error::InvalidSpec(format!("boundary edge ({a}, {b}) has no marker"))
            })?;
            oriented.push(BoundaryEdge { a, b, marker });
        }
        // Keep the caller's ordering when it was given, for stable file output.
        let position: HashMap<(usize, usize), usize> = boundary_edges
            .iter()
            .enumerate()
            .map(|(i, e)| (edge_key(e.a, e.b), i))
            .collect();
        oriented.sort_by_key(|e| position[&edge_key(e.a, e.b)]);

        let node_class = classify_nodes(&nodes, &oriented, &arcs)?;
        Ok(TriMesh {
            nodes,
            triangles,
            boundary_edges: oriented,
            node_class,
            arcs,
        })
    }

    /// Build a mesh whose boundary markers are assigned by a closure of the
    /// two edge endpoints.
    pub fn from_triangles(
        nodes: Vec<Point2>,
        mut triangles: Vec<[usize; 3]>,
        arcs: Vec<ArcBoundary>,
        marker: impl Fn(Point2, Point2) -> i32,
    ) -> Result<TriMesh> {
        for tri in triangles.iter_mut() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::InvalidSpec("triangle references missing node".into()));
            }
            if orient2d(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) < 0.0 {
                tri.swap(1, 2);
            }
        }
        let edges = boundary_edges_of(&triangles)?
            .into_iter()
            .map(|(a, b)| BoundaryEdge {
                a,
                b,
                marker: marker(nodes[a], nodes[b]),
            })
            .collect();
        TriMesh::new(nodes, triangles, edges, arcs)
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn node_class(&self) -> &[NodeClass] {
        &self.node_class
    }

    pub fn arcs(&self) -> &[ArcBoundary] {
        &self.arcs
    }

    pub fn arc_for_marker(&self, marker: i32) -> Option<&ArcBoundary> {
        self.arcs.iter().find(|a| a.marker == marker)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        0.5 * orient2d(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| triangle_min_angle(self.vertices(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Longest edge length over all triangles.
    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|tri| {
                (0..3).map(move |k| (tri[k], tri[(k + 1) % 3]))
            })
            .map(|(a, b)| self.nodes[a].dist(self.nodes[b]))
            .fold(0.0, f64::max)
    }

    /// Unique undirected edges, sorted lexicographically by `(min, max)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|tri| (0..3).map(move |k| edge_key(tri[k], tri[(k + 1) % 3])))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn corner_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.node_class[i].is_corner())
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.node_class[i].is_boundary())
            .collect()
    }

    /// Outward unit normal at the midpoint of a boundary edge, using the exact
    /// circle normal on arc segments.
    pub fn boundary_edge_normal(&self, e: &BoundaryEdge) -> [f64; 2] {
        let pa = self.nodes[e.a];
        let pb = self.nodes[e.b];
        if let Some(arc) = self.arc_for_marker(e.marker) {
            let m = pa.midpoint(pb) - arc.center;
            let r = m.norm();
            return [m.x / r, m.y / r];
        }
        edge_outward_normal(pa, pb)
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        bounding_box(&self.nodes)
    }

    /// Check every structural invariant; used by `mesh --check` and tests.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = TriMesh::new(
            self.nodes.clone(),
            self.triangles.clone(),
            self.boundary_edges.clone(),
            self.arcs.clone(),
        )?;
        if rebuilt.triangles != self.triangles {
            return Err(Error::InvalidSpec("triangle orientation is not counterclockwise".into()));
        }
        Ok(())
    }
}

fn bounding_box(nodes: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in nodes {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

fn bounding_span(nodes: &[Point2]) -> f64 {
    if nodes.is_empty() {
        return 1.0;
    }
    let (lo, hi) = bounding_box(nodes);
    (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE)
}

fn check_duplicates(nodes: &[Point2], span: f64) -> Result<()> {
    let tol = 1e-12 * span;
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&i, &j| nodes[i].x.total_cmp(&nodes[j].x));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if nodes[j].x - nodes[i].x > tol {
                break;
            }
            if (nodes[j].y - nodes[i].y).abs() <= tol {
                return Err(Error::InvalidSpec(format!("nodes {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// Directed edges used by exactly one (counterclockwise) triangle.
pub(crate) fn boundary_edges_of(triangles: &[[usize; 3]]) -> Result<Vec<(usize, usize)>> {
    let mut count: HashMap<(usize, usize), (u32, (usize, usize))> = HashMap::new();
    let mut order = Vec::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let entry = count.entry(edge_key(a, b)).or_insert_with(|| {
                order.push(edge_key(a, b));
                (0, (a, b))
            });
            entry.0 += 1;
        }
    }
    let mut out = Vec::new();
    for key in order {
        let (c, directed) = count[&key];
        match c {
            1 => out.push(directed),
            2 => {}
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "edge ({}, {}) is shared by {c} triangles",
                    key.0, key.1
                )))
            }
        }
    }
    Ok(out)
}

fn edge_outward_normal(a: Point2, b: Point2) -> [f64; 2] {
    let d = b - a;
    let len = d.norm();
    [d.y / len, -d.x / len]
}

fn angle_between(n1: [f64; 2], n2: [f64; 2]) -> f64 {
    let c = n1[0] * n2[0] + n1[1] * n2[1];
    let s = n1[0] * n2[1] - n1[1] * n2[0];
    s.atan2(c).abs()
}

fn classify_nodes(
    nodes: &[Point2],
    edges: &[BoundaryEdge],
    arcs: &[ArcBoundary],
) -> Result<Vec<NodeClass>> {
    let n = nodes.len();
    let mut incoming: Vec<Option<usize>> = vec![None; n];
    let mut outgoing: Vec<Option<usize>> = vec![None; n];
    for (i, e) in edges.iter().enumerate() {
        if incoming[e.b].replace(i).is_some() || outgoing[e.a].replace(i).is_some() {
            return Err(Error::InvalidSpec(
                "boundary is not a union of simple closed loops".into(),
            ));
        }
    }
    let mut classes = vec![NodeClass::Interior; n];
    for v in 0..n {
        let (ein, eout) = match (incoming[v], outgoing[v]) {
            (None, None) => continue,
            (Some(i), Some(o)) => (&edges[i], &edges[o]),
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "boundary node {v} does not have exactly two boundary edges"
                )))
            }
        };
        let prev = nodes[ein.a];
        let next = nodes[eout.b];
        let p = nodes[v];
        let n_in = edge_outward_normal(prev, p);
        let n_out = edge_outward_normal(p, next);
        let turn = angle_between(n_in, n_out);
        let corner = turn > SHARP_FEATURE_ANGLE
            || (turn > CORNER_ANGLE_TOL && ein.marker != eout.marker);
        classes[v] = if corner {
            let to_next = next - p;
            let to_prev = prev - p;
            let mut angle = to_next.cross(to_prev).atan2(to_next.dot(to_prev));
            if angle <= 0.0 {
                angle += 2.0 * PI;
            }
            NodeClass::Corner {
                normals: [n_in, n_out],
                interior_angle: angle,
            }
        } else {
            let arc = arcs
                .iter()
                .find(|a| a.marker == ein.marker && a.marker == eout.marker);
            let normal = match arc {
                Some(arc) => {
                    let d = p - arc.center;
                    let r = d.norm();
                    [d.x / r, d.y / r]
                }
                None => {
                    let s = [n_in[0] + n_out[0], n_in[1] + n_out[1]];
                    let r = s[0].hypot(s[1]);
                    [s[0] / r, s[1] / r]
                }
            };
            NodeClass::Boundary { normal }
        };
    }
    Ok(classes)
}

pub(crate) fn triangle_min_angle([a, b, c]: [Point2; 3]) -> f64 {
    let ang = |p: Point2, q: Point2, r: Point2| {
        let u = q - p;
        let v = r - p;
        u.cross(v).abs().atan2(u.dot(v))
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    UnitSquare,
    LShape,
    DiskNotch,
    File(PathBuf),
}

/// Local refinement request applied after generating the base mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSpec {
    pub center: Point2,
    pub radius: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSpec {
    pub domain: DomainKind,
    /// Nodes per unit length (square and L-shape).
    pub m: usize,
    /// Boundary node count (disk with notch).
    pub boundary_points: usize,
    /// Notch depth as a fraction of the radius.
    pub notch_depth: f64,
    /// Half opening angle of the notch at the circle, radians.
    pub notch_halfangle: f64,
    pub refine: Option<RefineSpec>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            domain: DomainKind::UnitSquare,
            m: 16,
            boundary_points: 256,
            notch_depth: 0.25,
            notch_halfangle: 0.1 * PI,
            refine: None,
        }
    }
}

impl MeshSpec {
    pub fn unit_square(m: usize) -> Self {
        Self {
            domain: DomainKind::UnitSquare,
            m,
            ..Self::default()
        }
    }

    pub fn lshape(m: usize) -> Self {
        Self {
            domain: DomainKind::LShape,
            m,
            ..Self::default()
        }
    }

    pub fn disk_notch(boundary_points: usize) -> Self {
        Self {
            domain: DomainKind::DiskNotch,
            boundary_points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.domain {
            DomainKind::UnitSquare | DomainKind::LShape if self.m < 2 => {
                return Err(Error::InvalidSpec(format!("m must be at least 2, got {}", self.m)))
            }
            DomainKind::LShape if self.m % 2 != 0 => {
                return Err(Error::InvalidSpec(format!(
                    "L-shape needs an even m so the reentrant corner is a grid point, got {}",
                    self.m
                )))
            }
            DomainKind::DiskNotch => {
                if self.boundary_points < 16 {
                    return Err(Error::InvalidSpec(format!(
                        "boundary_points must be at least 16, got {}",
                        self.boundary_points
                    )));
                }
                if !(self.notch_depth > 0.0 && self.notch_depth < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "notch_depth must lie in (0, 1), got {}",
                        self.notch_depth
                    )));
                }
                if !(self.notch_halfangle > 0.0 && self.notch_halfangle < PI / 4.0) {
                    return Err(Error::InvalidSpec(format!(
                        "notch_halfangle must lie in (0, pi/4), got {}",
                        self.notch_halfangle
                    )));
                }
            }
            _ => {}
        }
        if let Some(r) = &self.refine {
            if !(r.radius > 0.0) {
                return Err(Error::InvalidSpec("refine radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// Generate (or read) the base mesh and apply the optional refinement.
    pub fn build(&self) -> Result<TriMesh> {
        self.validate()?;
        let mesh = match &self.domain {
            DomainKind::UnitSquare => gen_unit_square(self.m)?,
            DomainKind::LShape => gen_lshape(self.m)?,
            DomainKind::DiskNotch => gen_disk_notch(self)?,
            DomainKind::File(path) => read_mesh(path)?,
        };
        match &self.refine {
            Some(r) if r.levels > 0 => refine_local(&mesh, r.center, r.radius, r.levels),
            _ => Ok(mesh),
        }
    }
}
