//! Observables and comparison metrics.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{eliminate, CsrMatrix, FeSpace, SpdSolver};
use crate::hodge::QuadVectorField;
use crate::mesh::{Point2, TriMesh};
use crate::tdgl::{Potentials, SimParams, SimState, SolverKind, StepReport};

/// Nodal `|psi|^2`.
pub fn density(psi: &[Complex64]) -> Vec<f64> {
    psi.iter().map(|z| z.norm_sqr()).collect()
}

/// Mass-matrix solves for L2 projections onto the scalar space.
#[derive(Debug, Clone)]
pub struct Projector<'a> {
    space: &'a FeSpace,
    mass: SpdSolver,
    mass_interior: SpdSolver,
    stiffness: CsrMatrix<f64>,
    ones: Vec<f64>,
}

impl<'a> Projector<'a> {
    pub fn new(space: &'a FeSpace) -> Result<Self> {
        let m = space.mass_matrix();
        let mut mask = vec![false; space.ndofs()];
        for &d in space.boundary_dofs() {
            mask[d] = true;
        }
        Ok(Self {
            space,
            mass: SpdSolver::new(&m)?,
            mass_interior: SpdSolver::new(&eliminate(&m, &mask))?,
            stiffness: space.stiffness_matrix(),
            ones: m.mul_vec(&vec![1.0; space.ndofs()]),
        })
    }

    pub fn space(&self) -> &FeSpace {
        self.space
    }

    /// L2 projection of quadrature samples.
    pub fn project(&self, samples: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mass.solve(&self.space.load(samples), None)?.0)
    }

    pub fn project_vector(&self, field: &[[f64; 2]]) -> Result<[Vec<f64>; 2]> {
        let x: Vec<f64> = field.iter().map(|v| v[0]).collect();
        let y: Vec<f64> = field.iter().map(|v| v[1]).collect();
        Ok([self.project(&x)?, self.project(&y)?])
    }

    /// Projected `curl A_h = d_x A_y - d_y A_x` of a nodal vector field.
    pub fn curl_of_nodal(&self, ax: &[f64], ay: &[f64]) -> Result<Vec<f64>> {
        self.project(&nodal_curl_quad(self.space, ax, ay))
    }

    /// `B = H + w~` where `w~` vanishes on the boundary and
    /// `(w~, chi) = (grad u, grad chi) - H (1, chi)`; the weak form of
    /// `B = -Laplace u` with the boundary value `B = H`.
    pub fn stream_induction(&self, u: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut rhs = self.stiffness.mul_vec(u);
        for (r, o) in rhs.iter_mut().zip(&self.ones) {
            *r -= h * o;
        }
        for &d in self.space.boundary_dofs() {
            rhs[d] = 0.0;
        }
        let (mut w, _) = self.mass_interior.solve(&rhs, None)?;
        for &d in self.space.boundary_dofs() {
            w[d] = 0.0;
        }
        Ok(w.into_iter().map(|x| x + h).collect())
    }

    /// Nodal magnetic induction. The Hodge formulation needs the tracked `w`.
    pub fn magnetic_induction(&self, state: &SimState, params: &SimParams) -> Result<Vec<f64>> {
        match &state.potentials {
            Potentials::Hodge { w: Some(w), .. } => Ok(w.iter().map(|x| x + params.h_field).collect()),
            Potentials::Hodge { w: None, .. } => {
                Err(Error::Unavailable("B needs the tracked w field in the Hodge formulation".into()))
            }
            Potentials::Vector { ax, ay } => self.curl_of_nodal(ax, ay),
        }
    }

    /// Like [`magnetic_induction`](Self::magnetic_induction), but falls back
    /// to [`stream_induction`](Self::stream_induction) when `w` is not tracked.
    pub fn induction(&self, state: &SimState, params: &SimParams) -> Result<Vec<f64>> {
        match &state.potentials {
            Potentials::Hodge { pair, w: None } => self.stream_induction(&pair.u, params.h_field),
            _ => self.magnetic_induction(state, params),
        }
    }

    /// Electric field at the quadrature points.
    ///
    /// Hodge formulation: `E = -curl w - F`. Gauge solvers: the
    /// approximate rate `(A^{n+1} - A^n) / tau` of the last step.
    pub fn electric_field(&self, state: &SimState) -> Result<QuadVectorField> {
        match &state.potentials {
            Potentials::Hodge { w: Some(w), .. } => {
                let f = state.current.clone().unwrap_or_else(|| vec![[0.0; 2]; self.space.nquad()]);
                Ok(electric_from_w(self.space, w, &f))
            }
            Potentials::Hodge { w: None, .. } => {
                Err(Error::Unavailable("E needs the tracked w field in the Hodge formulation".into()))
            }
            Potentials::Vector { .. } => match &state.a_rate {
                Some([x, y]) => Ok(crate::tdgl::vector_quad(self.space, x, y)),
                None => Ok(vec![[0.0; 2]; self.space.nquad()]),
            },
        }
    }

    /// Nodal electric field for output, when available.
    pub fn electric_nodal(&self, state: &SimState) -> Result<Option<[Vec<f64>; 2]>> {
        match &state.potentials {
            Potentials::Hodge { w: None, .. } => Ok(None),
            Potentials::Hodge { .. } => Ok(Some(self.project_vector(&self.electric_field(state)?)?)),
            Potentials::Vector { .. } => Ok(Some(match &state.a_rate {
                Some(r) => r.clone(),
                None => [vec![0.0; self.space.ndofs()], vec![0.0; self.space.ndofs()]],
            })),
        }
    }

    /// Nodal `A`; projected from the quadrature samples for the Hodge states.
    pub fn potential_nodal(&self, state: &SimState) -> Result<[Vec<f64>; 2]> {
        match &state.potentials {
            Potentials::Vector { ax, ay } => Ok([ax.clone(), ay.clone()]),
            Potentials::Hodge { .. } => self.project_vector(&state.a_quad),
        }
    }

    /// Free energy of a state. `curl A` is taken piecewise for the gauge
    /// solvers and from the nodal induction for the Hodge formulation.
    pub fn energy(&self, state: &SimState, params: &SimParams) -> Result<f64> {
        let curl = match &state.potentials {
            Potentials::Vector { ax, ay } => nodal_curl_quad(self.space, ax, ay),
            Potentials::Hodge { .. } => self.space.eval_quad(&self.induction(state, params)?),
        };
        Ok(free_energy(self.space, &state.psi, &state.a_quad, &curl, params.kappa, params.h_field))
    }
}

fn nodal_curl_quad(space: &FeSpace, ax: &[f64], ay: &[f64]) -> Vec<f64> {
    let gx = space.grad_quad(ax);
    let gy = space.grad_quad(ay);
    gx.iter().zip(&gy).map(|(a, b)| b[0] - a[1]).collect()
}

/// `E = -curl w - F` with `curl w = (d_y w, -d_x w)`.
pub fn electric_from_w(space: &FeSpace, w: &[f64], f: &[[f64; 2]]) -> QuadVectorField {
    space
        .grad_quad(w)
        .iter()
        .zip(f)
        .map(|(g, f)| [-g[1] - f[0], g[0] - f[1]])
        .collect()
}

/// `int |(i/kappa) grad psi + A psi|^2 + (|psi|^2 - 1)^2 / 2 + |curl A - H|^2`
/// with `A` and `curl A` given at the quadrature points.
pub fn free_energy(space: &FeSpace, psi: &[Complex64], a_quad: &[[f64; 2]], curl_a: &[f64], kappa: f64, h: f64) -> f64 {
    let v = space.eval_quad(psi);
    let g = space.grad_quad(psi);
    let ik = Complex64::new(0.0, 1.0 / kappa);
    let dens: Vec<f64> = (0..v.len())
        .map(|i| {
            let a = a_quad[i];
            let kx = ik * g[i][0] + v[i] * a[0];
            let ky = ik * g[i][1] + v[i] * a[1];
            let r = v[i].norm_sqr() - 1.0;
            let b = curl_a[i] - h;
            kx.norm_sqr() + ky.norm_sqr() + 0.5 * r * r + b * b
        })
        .collect();
    space.integrate(&dens)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VortexRegion {
    /// Mesh vertices of the component, ascending.
    pub nodes: Vec<usize>,
    /// Lumped area: a third of the patch area of every vertex.
    pub area: f64,
    pub centroid: Point2,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VortexRegions {
    /// Sorted by centroid, `x` first.
    pub regions: Vec<VortexRegion>,
}

impl VortexRegions {
    pub fn count(&self) -> usize {
        self.regions.len()
    }

    pub fn centroids(&self) -> Vec<Point2> {
        self.regions.iter().map(|r| r.centroid).collect()
    }

    /// The region containing vertex `v`.
    pub fn containing(&self, v: usize) -> Option<&VortexRegion> {
        self.regions.iter().find(|r| r.nodes.binary_search(&v).is_ok())
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of `{v : density[v] < threshold}` over the mesh
/// edges. `density` holds at least one value per vertex.
pub fn vortex_regions(mesh: &TriMesh, density: &[f64], threshold: f64) -> VortexRegions {
    let nv = mesh.num_nodes();
    let low: Vec<bool> = density[..nv].iter().map(|&d| d < threshold).collect();
    let mut parent: Vec<usize> = (0..nv).collect();
    for (a, b) in mesh.edges() {
        if low[a] && low[b] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut lumped = vec![0.0; nv];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t) / 3.0;
        for &v in tri {
            lumped[v] += a;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in (0..nv).filter(|&v| low[v]) {
        groups.entry(find(&mut parent, v)).or_default().push(v);
    }
    let nodes = mesh.nodes();
    let mut regions: Vec<VortexRegion> = groups
        .into_values()
        .map(|vs| {
            let area: f64 = vs.iter().map(|&v| lumped[v]).sum();
            let cx = vs.iter().map(|&v| lumped[v] * nodes[v].x).sum::<f64>() / area;
            let cy = vs.iter().map(|&v| lumped[v] * nodes[v].y).sum::<f64>() / area;
            VortexRegion { nodes: vs, area, centroid: Point2::new(cx, cy) }
        })
        .collect();
    regions.sort_by(|a, b| {
        a.centroid
            .x
            .total_cmp(&b.centroid.x)
            .then(a.centroid.y.total_cmp(&b.centroid.y))
            .then(a.nodes[0].cmp(&b.nodes[0]))
    });
    VortexRegions { regions }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransformed {
    pub psi: Vec<Complex64>,
    pub a_quad: QuadVectorField,
    pub phi: Vec<f64>,
}

/// `(psi e^{i kappa chi}, A + grad chi, phi - d_t chi)`; `chi_rate` is the
/// nodal `d_t chi` (zero when omitted).
pub fn gauge_transform(
    space: &FeSpace,
    psi: &[Complex64],
    a_quad: &[[f64; 2]],
    phi: &[f64],
    chi: &[f64],
    chi_rate: Option<&[f64]>,
    kappa: f64,
) -> GaugeTransformed {
    let psi = psi.iter().zip(chi).map(|(z, c)| z * Complex64::from_polar(1.0, kappa * c)).collect();
    let g = space.grad_quad(chi);
    let a_quad = a_quad.iter().zip(&g).map(|(a, g)| [a[0] + g[0], a[1] + g[1]]).collect();
    let phi = match chi_rate {
        Some(r) => phi.iter().zip(r).map(|(p, r)| p - r).collect(),
        None => phi.to_vec(),
    };
    GaugeTransformed { psi, a_quad, phi }
}

/// Uniform bucket grid over the triangles of a mesh for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    mesh: Arc<TriMesh>,
    lo: Point2,
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let n = ((mesh.num_triangles() as f64).sqrt().ceil() as usize).max(1);
        let dims = [n, n];
        let cell = [
            ((hi.x - lo.x) / n as f64).max(1e-300),
            ((hi.y - lo.y) / n as f64).max(1e-300),
        ];
        let mut buckets = vec![Vec::new(); n * n];
        let clampi = |v: f64, d: usize| (v.max(0.0) as usize).min(d - 1);
        for t in 0..mesh.num_triangles() {
            let v = mesh.vertices(t);
            let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for p in v {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let (i0, i1) = (clampi((x0 - lo.x) / cell[0], n), clampi((x1 - lo.x) / cell[0], n));
            let (j0, j1) = (clampi((y0 - lo.y) / cell[1], n), clampi((y1 - lo.y) / cell[1], n));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * n + i].push(t);
                }
            }
        }
        Self { mesh, lo, cell, dims, buckets }
    }

    /// Cell containing `p` and its barycentric coordinates; points outside
    /// the mesh by more than `tol` (barycentric) are rejected.
    pub fn locate(&self, p: Point2, tol: f64) -> Option<(usize, [f64; 3])> {
        let fi = (p.x - self.lo.x) / self.cell[0];
        let fj = (p.y - self.lo.y) / self.cell[1];
        let margin = 1e-9;
        if fi < -margin || fj < -margin || fi > self.dims[0] as f64 + margin || fj > self.dims[1] as f64 + margin {
            return None;
        }
        let i = (fi.max(0.0) as usize).min(self.dims[0] - 1);
        let j = (fj.max(0.0) as usize).min(self.dims[1] - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let l = crate::fem::barycentric(self.mesh.vertices(t), p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.map_or(true, |b| worst > b.2) {
                best = Some((t, l, worst));
            }
        }
        best.filter(|b| b.2 >= -tol).map(|b| (b.0, b.1))
    }
}

/// Tolerance for points of one mesh that fall outside another.
pub const LOCATE_TOL: f64 = 1e-10;

/// `||f - g||_{L2(S)} / ||g||_{L2(S)}` by quadrature on `g`'s space, with `f`
/// evaluated by point location on its own space. `S` is given by a predicate
/// on quadrature points.
pub fn compare_fields(
    f_space: &FeSpace,
    f: &[f64],
    g_space: &FeSpace,
    g: &[f64],
    subdomain: impl Fn(Point2) -> bool + Sync,
) -> Result<f64> {
    let fq: Vec<f64> = if Arc::ptr_eq(f_space.mesh_arc(), g_space.mesh_arc()) && f_space.degree() == g_space.degree() {
        f_space.eval_quad(f)
    } else {
        let loc = PointLocator::new(f_space.mesh_arc().clone());
        g_space
            .quad_points()
            .iter()
            .map(|&p| {
                let (c, l) = loc
                    .locate(p, LOCATE_TOL)
                    .ok_or_else(|| Error::Evaluation(format!("point ({}, {}) lies outside the source mesh", p.x, p.y)))?;
                Ok(f_space.eval_at(f, c, l))
            })
            .collect::<Result<_>>()?
    };
    let gq = g_space.eval_quad(g);
    let mask: Vec<bool> = g_space.quad_points().iter().map(|&p| subdomain(p)).collect();
    let diff: Vec<f64> = (0..gq.len()).map(|i| if mask[i] { (fq[i] - gq[i]).powi(2) } else { 0.0 }).collect();
    let norm: Vec<f64> = (0..gq.len()).map(|i| if mask[i] { gq[i] * gq[i] } else { 0.0 }).collect();
    let den = g_space.integrate(&norm).sqrt();
    if den == 0.0 {
        return Err(Error::Evaluation("reference field vanishes on the comparison set".into()));
    }
    Ok(g_space.integrate(&diff).sqrt() / den)
}

/// Nodal fields at the mesh vertices at one time.
#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub time: f64,
    pub solver: SolverKind,
    pub mesh: Arc<TriMesh>,
    pub re_psi: Vec<f64>,
    pub im_psi: Vec<f64>,
    pub density: Vec<f64>,
    pub b: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub e: Option<[Vec<f64>; 2]>,
}

impl FieldSnapshot {
    pub fn capture(proj: &Projector, state: &SimState, params: &SimParams) -> Result<Self> {
        let space = proj.space();
        let nv = space.mesh().num_nodes();
        let psi = &state.psi[..nv];
        let re_psi: Vec<f64> = psi.iter().map(|z| z.re).collect();
        let im_psi: Vec<f64> = psi.iter().map(|z| z.im).collect();
        let density = re_psi.iter().zip(&im_psi).map(|(a, b)| a * a + b * b).collect();
        let mut b = proj.induction(state, params)?;
        b.truncate(nv);
        let [mut ax, mut ay] = proj.potential_nodal(state)?;
        ax.truncate(nv);
        ay.truncate(nv);
        let e = proj.electric_nodal(state)?.map(|[mut x, mut y]| {
            x.truncate(nv);
            y.truncate(nv);
            [x, y]
        });
        Ok(Self {
            time: state.t,
            solver: params.solver,
            mesh: space.mesh_arc().clone(),
            re_psi,
            im_psi,
            density,
            b,
            ax,
            ay,
            e,
        })
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub mean_density: f64,
    pub min_density: f64,
    pub max_abs_psi: f64,
    pub energy: f64,
    pub vortices: usize,
    pub psi_iters: usize,
    pub field_iters: usize,
}

/// Default vortex threshold, relative to the largest nodal density.
pub const VORTEX_THRESHOLD: f64 = 0.1;

impl Diagnostics {
    pub fn measure(proj: &Projector, state: &SimState, params: &SimParams, report: StepReport) -> Result<Self> {
        let space = proj.space();
        let dens = density(&state.psi);
        let dq = density(&space.eval_quad(&state.psi));
        let mean_density = space.integrate(&dq) / space.area();
        // over quadrature points as well, so that min <= mean for any degree
        let min_density = dens.iter().chain(&dq).cloned().fold(f64::INFINITY, f64::min);
        let max_d = dens.iter().cloned().fold(0.0, f64::max);
        let vortices = if max_d > 0.0 {
            vortex_regions(space.mesh(), &dens, VORTEX_THRESHOLD * max_d).count()
        } else {
            0
        };
        Ok(Self {
            t: state.t,
            mean_density,
            min_density,
            max_abs_psi: max_d.sqrt(),
            energy: proj.energy(state, params)?,
            vortices,
            psi_iters: report.psi_iters,
            field_iters: report.field_iters,
        })
    }
}
