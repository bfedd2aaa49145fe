//! Run, compare and mesh commands as library calls.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use glvortex_core::mesh::{write_mesh, DomainKind, MeshSpec};
use glvortex_core::post::{compare_fields, vortex_regions, FieldSnapshot};
use glvortex_core::tdgl::{run_with, RunOutput};
use glvortex_core::{FeSpace, Point2, SolverKind, TriMesh};
use rayon::prelude::*;

use crate::config::{InitialA, RunConfig};
use crate::output::{diagnostics_csv, fmt_g17, write_atomic, write_snapshot};

/// Absolute density threshold for vortex counts in comparison reports.
pub const REPORT_VORTEX_THRESHOLD: f64 = 0.1;

pub fn build_mesh(spec: &MeshSpec) -> Result<TriMesh> {
    spec.build().with_context(|| format!("building {:?} mesh", spec.domain))
}

/// One finished simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub space: FeSpace,
    pub output: RunOutput,
    pub elapsed: Duration,
}

/// Run one configuration without writing anything.
pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    simulate_with(cfg, |_, _| Ok(()))
}

/// As [`simulate`] with a per-step observer.
pub fn simulate_with(
    cfg: &RunConfig,
    observer: impl FnMut(&glvortex_core::SimState, &glvortex_core::post::Diagnostics) -> glvortex_core::Result<()>,
) -> Result<Simulation> {
    cfg.validate()?;
    let mesh = Arc::new(build_mesh(&cfg.mesh)?);
    let space = FeSpace::new(mesh, cfg.params.degree)?;
    let psi0 = cfg.psi0.value();
    let InitialA::Zero = cfg.a0;
    let start = Instant::now();
    let output = run_with(&space, &cfg.params, |_| psi0, |_| [0.0, 0.0], &cfg.snapshot_times, observer)
        .with_context(|| format!("{} run", cfg.params.solver))?;
    Ok(Simulation { space, output, elapsed: start.elapsed() })
}

/// Write snapshots and `diagnostics_{solver}.csv` into `dir`.
pub fn write_outputs(cfg: &RunConfig, sim: &Simulation, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for snap in &sim.output.snapshots {
        files.extend(write_snapshot(snap, dir, cfg.formats)?);
    }
    let diag = dir.join(format!("diagnostics_{}.csv", cfg.params.solver.name()));
    write_atomic(&diag, &diagnostics_csv(&sim.output.diagnostics))?;
    files.push(diag);
    Ok(files)
}

/// `run`: simulate and write all outputs into the configured directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<(Simulation, Vec<PathBuf>)> {
    let sim = simulate(cfg)?;
    let files = write_outputs(cfg, &sim, &cfg.output_dir)?;
    Ok((sim, files))
}

/// Relative L2 difference of `|psi|^2` between two snapshots, as P1 fields on
/// their own meshes, integrated on `g`'s mesh.
pub fn density_difference(f: &FieldSnapshot, g: &FieldSnapshot, subdomain: impl Fn(Point2) -> bool + Sync) -> Result<f64> {
    let fs = FeSpace::new(f.mesh.clone(), 1)?;
    let gs = if Arc::ptr_eq(&f.mesh, &g.mesh) { fs.clone() } else { FeSpace::new(g.mesh.clone(), 1)? };
    Ok(compare_fields(&fs, &f.density, &gs, &g.density, subdomain)?)
}

/// Predicate for points farther than `margin` from every corner of `mesh`.
pub fn away_from_corners(mesh: &TriMesh, margin: f64) -> impl Fn(Point2) -> bool + Sync {
    let corners: Vec<Point2> = mesh.corner_nodes().iter().map(|&v| mesh.nodes()[v]).collect();
    move |p| corners.iter().all(|c| c.dist(p) > margin)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub solver: SolverKind,
    pub m: usize,
    pub seconds: f64,
    pub max_abs_psi: f64,
    /// `(t, vortex count)` at each snapshot.
    pub vortices: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDiff {
    pub m: usize,
    pub t: f64,
    pub a: SolverKind,
    pub b: SolverKind,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDiff {
    pub solver: SolverKind,
    pub t: f64,
    pub m_coarse: usize,
    pub m_fine: usize,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CompareReport {
    pub runs: Vec<RunSummary>,
    pub pairs: Vec<PairDiff>,
    pub sweep: Vec<SweepDiff>,
}

impl CompareReport {
    pub fn pair(&self, m: usize, t: f64, a: SolverKind, b: SolverKind) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.m == m && (p.t - t).abs() < 1e-9 && ((p.a, p.b) == (a, b) || (p.a, p.b) == (b, a)))
            .map(|p| p.rel_l2)
    }

    pub fn sweep_diff(&self, solver: SolverKind, t: f64, m_coarse: usize, m_fine: usize) -> Option<f64> {
        self.sweep
            .iter()
            .find(|d| d.solver == solver && (d.t - t).abs() < 1e-9 && d.m_coarse == m_coarse && d.m_fine == m_fine)
            .map(|d| d.rel_l2)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("runs\n");
        for r in &self.runs {
            let v: Vec<String> = r.vortices.iter().map(|(t, n)| format!("t={t}:{n}")).collect();
            let _ = writeln!(
                out,
                "  {:<8} m={:<4} {:>9.2}s  max|psi|={:.6}  vortices {}",
                r.solver.name(),
                r.m,
                r.seconds,
                r.max_abs_psi,
                v.join(" ")
            );
        }
        if !self.pairs.is_empty() {
            out.push_str("pairwise relative L2 difference of |psi|^2 (away from corners)\n");
            for p in &self.pairs {
                let _ = writeln!(out, "  m={:<4} t={:<8} {}-{}: {:.6e}", p.m, p.t, p.a.name(), p.b.name(), p.rel_l2);
            }
        }
        if !self.sweep.is_empty() {
            out.push_str("mesh sweep relative L2 difference of |psi|^2 (coarse interpolated to fine)\n");
            for d in &self.sweep {
                let _ = writeln!(out, "  {:<8} t={:<8} m {} -> {}: {:.6e}", d.solver.name(), d.t, d.m_coarse, d.m_fine, d.rel_l2);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,m,m_fine,t,a,b,value\n");
        for p in &self.pairs {
            let _ = writeln!(out, "pair,{},,{},{},{},{}", p.m, fmt_g17(p.t), p.a.name(), p.b.name(), fmt_g17(p.rel_l2));
        }
        for d in &self.sweep {
            let _ = writeln!(
                out,
                "sweep,{},{},{},{},,{}",
                d.m_coarse,
                d.m_fine,
                fmt_g17(d.t),
                d.solver.name(),
                fmt_g17(d.rel_l2)
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub solvers: Vec<SolverKind>,
    pub mesh_sweep: Option<Vec<usize>>,
    /// Exclusion radius around corners in units of the mesh size.
    pub corner_margin: f64,
    /// Write each run's snapshots and diagnostics below the output directory.
    pub write_runs: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { solvers: SolverKind::ALL.to_vec(), mesh_sweep: None, corner_margin: 2.0, write_runs: false }
    }
}

fn with_m(spec: &MeshSpec, m: usize) -> Result<MeshSpec> {
    match spec.domain {
        DomainKind::UnitSquare | DomainKind::LShape => Ok(MeshSpec { m, ..spec.clone() }),
        _ => bail!("--mesh-sweep needs a unit_square or lshape mesh"),
    }
}

/// `compare`: run `cfg` under every solver (and mesh size), then compare.
pub fn cmd_compare(cfg: &RunConfig, opts: &CompareOptions) -> Result<CompareReport> {
    if opts.solvers.is_empty() {
        bail!("no solvers to compare");
    }
    let ms: Vec<usize> = match &opts.mesh_sweep {
        Some(ms) if ms.is_empty() => bail!("empty mesh sweep"),
        Some(ms) => ms.clone(),
        None => vec![cfg.mesh.m],
    };
    let mut jobs = Vec::new();
    for &m in &ms {
        let mesh = if opts.mesh_sweep.is_some() { with_m(&cfg.mesh, m)? } else { cfg.mesh.clone() };
        for &solver in &opts.solvers {
            let mut c = cfg.clone();
            c.mesh = mesh.clone();
            c.params.solver = solver;
            c.validate()?;
            jobs.push((m, c));
        }
    }
    let sims: Vec<Simulation> = jobs.par_iter().map(|(_, c)| simulate(c)).collect::<Result<_>>()?;

    let mut report = CompareReport::default();
    for ((m, c), sim) in jobs.iter().zip(&sims) {
        let snaps = &sim.output.snapshots;
        let vortices = snaps
            .iter()
            .map(|s| (s.time, vortex_regions(&s.mesh, &s.density, REPORT_VORTEX_THRESHOLD).count()))
            .collect();
        let max_abs_psi = sim.output.diagnostics.iter().map(|d| d.max_abs_psi).fold(0.0, f64::max);
        report.runs.push(RunSummary {
            solver: c.params.solver,
            m: *m,
            seconds: sim.elapsed.as_secs_f64(),
            max_abs_psi,
            vortices,
        });
        if opts.write_runs {
            let sub = if opts.mesh_sweep.is_some() {
                format!("m{}_{}", m, c.params.solver.name())
            } else {
                c.params.solver.name().to_string()
            };
            write_outputs(c, sim, &cfg.output_dir.join(sub))?;
        }
    }

    let find = |m: usize, s: SolverKind| jobs.iter().position(|(jm, c)| *jm == m && c.params.solver == s).map(|i| &sims[i]);
    for &m in &ms {
        for (i, &a) in opts.solvers.iter().enumerate() {
            for &b in &opts.solvers[i + 1..] {
                let (sa, sb) = (find(m, a).expect("run"), find(m, b).expect("run"));
                let mesh = sb.space.mesh();
                let keep = away_from_corners(mesh, opts.corner_margin * mesh.max_edge_length());
                for (fa, fb) in sa.output.snapshots.iter().zip(&sb.output.snapshots) {
                    let rel_l2 = density_difference(fa, fb, &keep)?;
                    report.pairs.push(PairDiff { m, t: fb.time, a, b, rel_l2 });
                }
            }
        }
    }
    for &s in &opts.solvers {
        for w in ms.windows(2) {
            let (coarse, fine) = (find(w[0], s).expect("run"), find(w[1], s).expect("run"));
            for (fc, ff) in coarse.output.snapshots.iter().zip(&fine.output.snapshots) {
                let rel_l2 = density_difference(fc, ff, |_| true)?;
                report.sweep.push(SweepDiff { solver: s, t: ff.time, m_coarse: w[0], m_fine: w[1], rel_l2 });
            }
        }
    }
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    write_atomic(&cfg.output_dir.join("compare_report.txt"), &report.to_text())?;
    write_atomic(&cfg.output_dir.join("compare.csv"), &report.to_csv())?;
    Ok(report)
}

/// Summary lines describing a validated mesh.
pub fn mesh_summary(mesh: &TriMesh) -> String {
    let (lo, hi) = mesh.bounding_box();
    format!(
        "nodes {}\ntriangles {}\nboundary edges {}\ncorners {}\narea {:.12}\nh {:.6}\nmin angle {:.3} deg\nbounding box [{}, {}] x [{}, {}]",
        mesh.num_nodes(),
        mesh.num_triangles(),
        mesh.boundary_edges().len(),
        mesh.corner_nodes().len(),
        mesh.total_area(),
        mesh.max_edge_length(),
        mesh.min_angle().to_degrees(),
        lo.x,
        hi.x,
        lo.y,
        hi.y
    )
}

/// `mesh --out`: generate and write a mesh file.
pub fn cmd_mesh_generate(spec: &MeshSpec, out: &Path) -> Result<TriMesh> {
    let mesh = build_mesh(spec)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut partial = out.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    write_mesh(&mesh, &partial).with_context(|| format!("writing {}", partial.display()))?;
    fs::rename(&partial, out).with_context(|| format!("renaming to {}", out.display()))?;
    Ok(mesh)
}

/// `mesh --check`: read and validate a mesh file.
pub fn cmd_mesh_check(path: &Path) -> Result<TriMesh> {
    let mesh = glvortex_core::mesh::read_mesh(path).with_context(|| format!("reading {}", path.display()))?;
    mesh.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(mesh)
}
