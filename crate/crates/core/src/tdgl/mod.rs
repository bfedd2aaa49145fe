//! Linearized backward-Euler steppers for the three formulations.
//!
//! Every step first advances `psi` with the magnetic potential and `|psi|^2`
//! frozen at the old time level, then forms the supercurrent and advances
//! the magnetic unknowns with one set of linear solves.

mod psi;
mod run;
mod vector;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{shift_mean, CsrMatrix, FeSpace, SolveStats, SpdSolver};
use crate::hodge::{decompose_vector, neumann_load, reconstruct, HodgeOperators, PotentialPair, QuadVectorField};
use crate::mesh::Point2;

pub use psi::{assemble_psi_matrix, compute_supercurrent, step_psi};
pub use run::{run, run_with, RunOutput};
pub use vector::VectorSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    TemporalGauge,
    LorentzGauge,
    HodgeReformulated,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::TemporalGauge, SolverKind::LorentzGauge, SolverKind::HodgeReformulated];

    /// Short name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::TemporalGauge => "temporal",
            SolverKind::LorentzGauge => "lorentz",
            SolverKind::HodgeReformulated => "hodge",
        }
    }

    /// Whether the `psi` equation carries the `i eta kappa A . grad` term.
    pub fn has_gauge_term(self) -> bool {
        !matches!(self, SolverKind::TemporalGauge)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "temporal" | "temporal_gauge" | "temporalgauge" => Ok(SolverKind::TemporalGauge),
            "lorentz" | "lorentz_gauge" | "lorentzgauge" => Ok(SolverKind::LorentzGauge),
            "hodge" | "hodge_reformulated" | "hodgereformulated" | "new" => Ok(SolverKind::HodgeReformulated),
            other => Err(Error::InvalidSpec(format!(
                "unknown solver `{other}` (expected temporal, lorentz or hodge)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Normalized conductivity.
    pub eta: f64,
    /// Ginzburg-Landau parameter.
    pub kappa: f64,
    /// Applied field, constant in time.
    pub h_field: f64,
    pub tau: f64,
    pub t_final: f64,
    pub solver: SolverKind,
    pub degree: usize,
    /// Also advance `w = curl A - H` (Hodge formulation only).
    pub track_w: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            kappa: 10.0,
            h_field: 0.0,
            tau: 0.1,
            t_final: 1.0,
            solver: SolverKind::HodgeReformulated,
            degree: 1,
            track_w: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !self.h_field.is_finite() {
            return bad(format!("H must be finite, got {}", self.h_field));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.tau * (1.0 - 1e-9)) {
            return bad(format!("T must be at least tau, got T = {} and tau = {}", self.t_final, self.tau));
        }
        if !(1..=2).contains(&self.degree) {
            return bad(format!("degree must be 1 or 2, got {}", self.degree));
        }
        Ok(())
    }

    /// Number of uniform steps, `round(T / tau)`.
    pub fn num_steps(&self) -> usize {
        (self.t_final / self.tau).round() as usize
    }
}

/// Magnetic unknowns of a state.
#[derive(Debug, Clone, PartialEq)]
pub enum Potentials {
    Hodge {
        pair: PotentialPair,
        /// `curl A - H`, zero on the boundary, when tracked.
        w: Option<Vec<f64>>,
    },
    /// Nodal components of `A` for the gauge solvers.
    Vector { ax: Vec<f64>, ay: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub psi: Vec<Complex64>,
    pub potentials: Potentials,
    /// Magnetic potential at the quadrature points.
    pub a_quad: QuadVectorField,
    /// Supercurrent of the last step.
    pub current: Option<QuadVectorField>,
    /// Nodal `(A^{n+1} - A^n) / tau` of the last gauge step.
    pub a_rate: Option<[Vec<f64>; 2]>,
}

impl SimState {
    pub fn w(&self) -> Option<&[f64]> {
        match &self.potentials {
            Potentials::Hodge { w: Some(w), .. } => Some(w),
            _ => None,
        }
    }
}

/// Iteration counts of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub psi_iters: usize,
    pub field_iters: usize,
}

fn curl_at(a0: &impl Fn(Point2) -> [f64; 2], p: Point2) -> f64 {
    let h = 1e-6 * (1.0 + p.x.abs().max(p.y.abs()));
    let dx = (a0(Point2::new(p.x + h, p.y))[1] - a0(Point2::new(p.x - h, p.y))[1]) / (2.0 * h);
    let dy = (a0(Point2::new(p.x, p.y + h))[0] - a0(Point2::new(p.x, p.y - h))[0]) / (2.0 * h);
    dx - dy
}

/// Initial state: interpolated `psi0`, and the magnetic unknowns of `a0` in
/// the representation of the configured solver.
pub fn init_state(
    space: &FeSpace,
    params: &SimParams,
    psi0: impl Fn(Point2) -> Complex64,
    a0: impl Fn(Point2) -> [f64; 2] + Sync,
) -> Result<SimState> {
    params.validate()?;
    if space.degree() != params.degree {
        return Err(Error::InvalidSpec(format!(
            "space has degree {} but the parameters ask for {}",
            space.degree(),
            params.degree
        )));
    }
    let psi = space.interpolate(&psi0);
    let n = space.ndofs();
    let (potentials, a_quad) = match params.solver {
        SolverKind::HodgeReformulated => {
            let samples = space.sample(&a0);
            let pair = if samples.iter().all(|a| a == &[0.0, 0.0]) {
                PotentialPair::zeros(n)
            } else {
                decompose_vector(space, &samples)?
            };
            let w = params.track_w.then(|| {
                space
                    .dof_coords()
                    .iter()
                    .enumerate()
                    .map(|(d, &p)| if space.is_boundary_dof(d) { 0.0 } else { curl_at(&a0, p) - params.h_field })
                    .collect()
            });
            let a_quad = reconstruct(space, &pair);
            (Potentials::Hodge { pair, w }, a_quad)
        }
        _ => {
            let mut ax: Vec<f64> = space.interpolate(|p| a0(p)[0]);
            let mut ay: Vec<f64> = space.interpolate(|p| a0(p)[1]);
            vector::constrain_nodal(space, &mut ax, &mut ay);
            let a_quad = vector_quad(space, &ax, &ay);
            (Potentials::Vector { ax, ay }, a_quad)
        }
    };
    Ok(SimState { t: 0.0, step: 0, psi, potentials, a_quad, current: None, a_rate: None })
}

pub(crate) fn vector_quad(space: &FeSpace, ax: &[f64], ay: &[f64]) -> QuadVectorField {
    let x = space.eval_quad(ax);
    let y = space.eval_quad(ay);
    x.into_iter().zip(y).map(|(a, b)| [a, b]).collect()
}

/// Backward-Euler heat step `(u - u^n)/tau + (grad u, grad theta) = (g, theta)`
/// on the full space or with homogeneous Dirichlet values.
#[derive(Debug, Clone)]
pub struct HeatSolver {
    solver: SpdSolver,
    mass: CsrMatrix<f64>,
    boundary: Option<Vec<usize>>,
    tau: f64,
}

impl HeatSolver {
    pub fn new(space: &FeSpace, tau: f64, dirichlet: bool) -> Result<Self> {
        let mass = space.mass_matrix();
        Self::from_matrices(space, &mass, &space.stiffness_matrix(), tau, dirichlet)
    }

    pub fn from_matrices(
        space: &FeSpace,
        mass: &CsrMatrix<f64>,
        stiffness: &CsrMatrix<f64>,
        tau: f64,
        dirichlet: bool,
    ) -> Result<Self> {
        let heat = mass.scaled(1.0 / tau).add_scaled(1.0, stiffness)?;
        let (solver, boundary) = if dirichlet {
            let mut mask = vec![false; space.ndofs()];
            for &d in space.boundary_dofs() {
                mask[d] = true;
            }
            (SpdSolver::new(&crate::fem::eliminate(&heat, &mask))?, Some(space.boundary_dofs().to_vec()))
        } else {
            (SpdSolver::new(&heat)?, None)
        };
        Ok(Self { solver, mass: mass.clone(), boundary, tau })
    }

    /// One step from `u` with the load vector `(g, theta)` already assembled.
    pub fn step(&self, u: &[f64], load: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let mut rhs = self.mass.mul_vec(u);
        for (r, l) in rhs.iter_mut().zip(load) {
            *r = *r / self.tau + l;
        }
        if let Some(bd) = &self.boundary {
            for &d in bd {
                rhs[d] = 0.0;
            }
        }
        let (mut x, stats) = self.solver.solve(&rhs, Some(u))?;
        if let Some(bd) = &self.boundary {
            for &d in bd {
                x[d] = 0.0;
            }
        }
        Ok((x, stats))
    }
}

/// Cached operators of the Hodge formulation.
#[derive(Debug, Clone)]
struct HodgeField {
    ops: HodgeOperators,
    heat_dirichlet: HeatSolver,
    heat_full: HeatSolver,
    mass_ones: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Field {
    Hodge(Box<HodgeField>),
    Vector(Box<VectorSystem>),
}

/// One configured scheme on one space, with all constant operators factored.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    space: &'a FeSpace,
    params: SimParams,
    mass: CsrMatrix<f64>,
    field: Field,
}

impl<'a> Stepper<'a> {
    pub fn new(space: &'a FeSpace, params: &SimParams) -> Result<Self> {
        params.validate()?;
        let mass = space.mass_matrix();
        let stiffness = space.stiffness_matrix();
        let field = match params.solver {
            SolverKind::HodgeReformulated => {
                let ops = HodgeOperators::from_matrices(space, &stiffness, &mass)?;
                Field::Hodge(Box::new(HodgeField {
                    heat_dirichlet: HeatSolver::from_matrices(space, &mass, &stiffness, params.tau, true)?,
                    heat_full: HeatSolver::from_matrices(space, &mass, &stiffness, params.tau, false)?,
                    mass_ones: ops.weights().to_vec(),
                    ops,
                }))
            }
            kind => Field::Vector(Box::new(VectorSystem::new(space, params, kind == SolverKind::LorentzGauge)?)),
        };
        Ok(Self { space, params: *params, mass, field })
    }

    pub fn space(&self) -> &FeSpace {
        self.space
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn mass(&self) -> &CsrMatrix<f64> {
        &self.mass
    }

    /// Advance `state` by one step of length `tau`.
    pub fn step(&self, state: &mut SimState) -> Result<StepReport> {
        let n = state.step + 1;
        let out = match &self.field {
            Field::Hodge(h) => self.step_hodge(h, state),
            Field::Vector(v) => self.step_vector(v, state),
        };
        out.map_err(|e| e.at_step(n))
    }

    fn step_hodge(&self, h: &HodgeField, state: &mut SimState) -> Result<StepReport> {
        let space = self.space;
        let p = &self.params;
        let Potentials::Hodge { pair, w } = &state.potentials else {
            return Err(Error::InvalidSpec("Hodge stepper needs a Hodge state".into()));
        };
        debug_assert!(reconstruct(space, pair) == state.a_quad, "A cache out of sync with (u, v)");
        let (psi_new, ps) = psi::step_psi_with(space, &self.mass, &state.psi, &state.a_quad, p).map_err(|e| e.in_equation("psi"))?;
        let f = compute_supercurrent(space, &psi_new, &state.psi, &state.a_quad, p.kappa);

        let (pp, sp) = h.ops.solve_dirichlet(space, space.curl_load(&f), None).map_err(|e| e.in_equation("p"))?;
        let qload = neumann_load(space, &f).map_err(|e| e.in_equation("q"))?;
        let (qq, sq) = h.ops.solve_neumann(&qload, None).map_err(|e| e.in_equation("q"))?;

        let tau = p.tau;
        let mp = self.mass.mul_vec(&pp);
        let load: Vec<f64> = mp.iter().zip(&h.mass_ones).map(|(m, o)| p.h_field * o - m).collect();
        let (u, su) = h.heat_dirichlet.step(&pair.u, &load).map_err(|e| e.in_equation("u"))?;

        let load: Vec<f64> = self.mass.mul_vec(&qq).iter().map(|x| -x).collect();
        let (mut v, sv) = h.heat_full.step(&pair.v, &load).map_err(|e| e.in_equation("v"))?;
        shift_mean(&mut v, &h.mass_ones);

        let mut field_iters = sp.iterations + sq.iterations + su.iterations + sv.iterations;
        let w_new = match w {
            Some(w) => {
                let load: Vec<f64> = space.curl_load(&f).iter().map(|x| -x).collect();
                let (wn, sw) = h.heat_dirichlet.step(w, &load).map_err(|e| e.in_equation("w"))?;
                field_iters += sw.iterations;
                Some(wn)
            }
            None => None,
        };
        let pair = PotentialPair { u, v };
        state.a_quad = reconstruct(space, &pair);
        state.potentials = Potentials::Hodge { pair, w: w_new };
        state.psi = psi_new;
        state.current = Some(f);
        state.a_rate = None;
        state.step += 1;
        state.t = state.step as f64 * tau;
        Ok(StepReport { psi_iters: ps.iterations, field_iters })
    }

    fn step_vector(&self, sys: &VectorSystem, state: &mut SimState) -> Result<StepReport> {
        let space = self.space;
        let p = &self.params;
        let Potentials::Vector { ax, ay } = &state.potentials else {
            return Err(Error::InvalidSpec("gauge stepper needs a nodal vector state".into()));
        };
        let (psi_new, ps) = psi::step_psi_with(space, &self.mass, &state.psi, &state.a_quad, p).map_err(|e| e.in_equation("psi"))?;
        let f = compute_supercurrent(space, &psi_new, &state.psi, &state.a_quad, p.kappa);
        let (nx, ny, sa) = sys.solve(space, &self.mass, ax, ay, &f).map_err(|e| e.in_equation("A"))?;
        let rate = [
            nx.iter().zip(ax).map(|(a, b)| (a - b) / p.tau).collect(),
            ny.iter().zip(ay).map(|(a, b)| (a - b) / p.tau).collect(),
        ];
        state.a_quad = vector_quad(space, &nx, &ny);
        state.potentials = Potentials::Vector { ax: nx, ay: ny };
        state.psi = psi_new;
        state.current = Some(f);
        state.a_rate = Some(rate);
        state.step += 1;
        state.t = state.step as f64 * p.tau;
        Ok(StepReport { psi_iters: ps.iterations, field_iters: sa.iterations })
    }
}

fn checked(state: &SimState, kind: SolverKind, params: &SimParams) -> Result<()> {
    if params.solver != kind {
        return Err(Error::InvalidSpec(format!("parameters select {}, not {}", params.solver, kind)));
    }
    let hodge = matches!(state.potentials, Potentials::Hodge { .. });
    if hodge != (kind == SolverKind::HodgeReformulated) {
        return Err(Error::InvalidSpec(format!("state does not match the {kind} formulation")));
    }
    Ok(())
}

fn one_step(space: &FeSpace, state: &SimState, params: &SimParams, kind: SolverKind) -> Result<SimState> {
    checked(state, kind, params)?;
    let mut next = state.clone();
    Stepper::new(space, params)?.step(&mut next)?;
    Ok(next)
}

/// One step of the Hodge-reformulated scheme. Builds the operators afresh;
/// use [`Stepper`] for repeated steps.
pub fn step_hodge(space: &FeSpace, state: &SimState, params: &SimParams) -> Result<SimState> {
    one_step(space, state, params, SolverKind::HodgeReformulated)
}

/// One step of the temporal-gauge scheme.
pub fn step_temporal(space: &FeSpace, state: &SimState, params: &SimParams) -> Result<SimState> {
    one_step(space, state, params, SolverKind::TemporalGauge)
}

/// One step of the Lorentz-gauge scheme.
pub fn step_lorentz(space: &FeSpace, state: &SimState, params: &SimParams) -> Result<SimState> {
    one_step(space, state, params, SolverKind::LorentzGauge)
}

#[cfg(test)]
mod tests;
