//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 3 7`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use glvortex::commands::{cmd_compare, CompareOptions};
use glvortex::selftest::{all_studies, RateStudy};
use glvortex::Preset;
use glvortex_core::hodge::{compatibility_residual, reconstruct};
use glvortex_core::post::{density, gauge_transform, vortex_regions};
use glvortex_core::tdgl::{init_state, run, run_with, Potentials, Stepper};
use glvortex_core::{FeSpace, MeshSpec, Point2, SimParams, SolverKind, TriMesh};
use num_complex::Complex64;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    check: fn() -> Outcome,
}

fn studies_line(studies: &[RateStudy]) -> String {
    studies
        .iter()
        .map(|s| format!("{} rate {:.3} (pairwise {:?})", s.label, s.rate(), s.pairwise().iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()))
        .collect::<Vec<_>>()
        .join("; ")
}

fn hodge_round_trip() -> Outcome {
    let start = Instant::now();
    let studies = all_studies(false).map_err(|e| e.to_string())?;
    let rt: Vec<RateStudy> = studies.into_iter().filter(|s| s.label.starts_with("hodge")).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = rt.len() == 2 && rt.iter().all(RateStudy::passed) && secs < 30.0;
    Ok((ok, format!("{}; {secs:.1}s (limit 30s)", studies_line(&rt))))
}

fn heat_rates() -> Outcome {
    let start = Instant::now();
    let studies = all_studies(false).map_err(|e| e.to_string())?;
    let heat: Vec<RateStudy> = studies.into_iter().filter(|s| s.label.starts_with("heat")).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = heat.len() == 2 && heat.iter().all(RateStudy::passed) && secs < 60.0;
    Ok((ok, format!("{}; {secs:.1}s (limit 60s)", studies_line(&heat))))
}

const LORENTZ_TOL: f64 = 0.05;
const TEMPORAL_TOL: f64 = 0.02;

fn convex_agreement() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = Preset::Example33.expand(false);
    cfg.output_dir = dir.path().to_path_buf();
    let report = cmd_compare(&cfg, &CompareOptions::default()).map_err(|e| format!("{e:#}"))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [5.0, 20.0, 40.0] {
        let l = report.pair(32, t, SolverKind::LorentzGauge, SolverKind::HodgeReformulated).ok_or("missing lorentz pair")?;
        let tg = report.pair(32, t, SolverKind::TemporalGauge, SolverKind::HodgeReformulated).ok_or("missing temporal pair")?;
        ok &= l < LORENTZ_TOL && tg < TEMPORAL_TOL;
        parts.push(format!("t={t}: lorentz {l:.4}, temporal {tg:.4}"));
    }
    Ok((ok, format!("{} (limits {LORENTZ_TOL}, {TEMPORAL_TOL})", parts.join("; "))))
}

fn lshape_refinement() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = Preset::Example31.expand(false);
    cfg.output_dir = dir.path().to_path_buf();
    let opts = CompareOptions {
        solvers: vec![SolverKind::TemporalGauge, SolverKind::HodgeReformulated],
        mesh_sweep: Some(vec![32, 64]),
        ..CompareOptions::default()
    };
    let report = cmd_compare(&cfg, &opts).map_err(|e| format!("{e:#}"))?;
    let dh = report.sweep_diff(SolverKind::HodgeReformulated, 40.0, 32, 64).ok_or("missing hodge sweep")?;
    let dt = report.sweep_diff(SolverKind::TemporalGauge, 40.0, 32, 64).ok_or("missing temporal sweep")?;
    Ok((dh < dt && dh < 0.5 * dt, format!("d(hodge) {dh:.5}, d(temporal) {dt:.5}, ratio {:.3} (limit 0.5)", dh / dt)))
}

/// Area of the low-density component touching the vertex nearest `apex`,
/// sampled every `every` steps up to `t_final`.
fn apex_areas(solver: SolverKind, t_final: f64, every: usize) -> Result<Vec<(f64, f64)>, String> {
    let mut cfg = Preset::Example32H08.expand(false);
    cfg.params.solver = solver;
    cfg.params.t_final = t_final;
    let mesh = Arc::new(cfg.mesh.build().map_err(|e| e.to_string())?);
    let space = FeSpace::new(mesh.clone(), 1).map_err(|e| e.to_string())?;
    let apex = nearest_node(&mesh, Point2::new(1.0 - cfg.mesh.notch_depth, 0.0));
    let ring = one_ring(&mesh, apex);
    let area = |psi: &[Complex64]| {
        let regions = vortex_regions(&mesh, &density(psi), 0.1);
        regions
            .regions
            .iter()
            .filter(|r| ring.iter().any(|v| r.nodes.binary_search(v).is_ok()))
            .fold(0.0, |acc, r| acc + r.area)
    };
    let psi0 = cfg.psi0.value();
    let mut out = Vec::new();
    run_with(&space, &cfg.params, |_| psi0, |_| [0.0, 0.0], &[], |st, _| {
        if st.step % every == 0 {
            out.push((st.t, area(&st.psi)));
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(out)
}

fn nearest_node(mesh: &TriMesh, p: Point2) -> usize {
    (0..mesh.num_nodes())
        .min_by(|&a, &b| mesh.nodes()[a].dist(p).total_cmp(&mesh.nodes()[b].dist(p)))
        .expect("nonempty mesh")
}

fn one_ring(mesh: &TriMesh, v: usize) -> Vec<usize> {
    let mut ring: Vec<usize> = mesh.triangles().iter().filter(|t| t.contains(&v)).flatten().copied().collect();
    ring.sort_unstable();
    ring.dedup();
    ring
}

fn at(series: &[(f64, f64)], t: f64) -> f64 {
    series.iter().find(|(s, _)| (s - t).abs() < 1e-6).map(|x| x.1).unwrap_or(f64::NAN)
}

fn corner_divergence() -> Outcome {
    let (temporal, hodge) = rayon::join(
        || apex_areas(SolverKind::TemporalGauge, 1000.0, 10),
        || apex_areas(SolverKind::HodgeReformulated, 1000.0, 10),
    );
    let (temporal, hodge) = (temporal?, hodge?);
    let (a20, a100, a1000) = (at(&temporal, 20.0), at(&temporal, 100.0), at(&temporal, 1000.0));
    let transient = hodge.iter().filter(|(t, _)| *t <= 50.0 + 1e-9).map(|x| x.1).fold(0.0, f64::max);
    let a_max = 3.0 * transient;
    let hodge_peak = hodge.iter().map(|x| x.1).fold(0.0, f64::max);
    let ok = a100 > a20 && a1000 > a100 && hodge_peak <= a_max;
    Ok((
        ok,
        format!(
            "temporal a(20)={a20:.5} a(100)={a100:.5} a(1000)={a1000:.5}; hodge max a={hodge_peak:.5}, a_max={a_max:.5} (3x transient max {transient:.5})"
        ),
    ))
}

fn invariants() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    // stationarity of the superconducting state
    let mut worst_step = 0.0f64;
    for r in [1, 2] {
        let space = FeSpace::new(Arc::new(MeshSpec::unit_square(8).build().map_err(|e| e.to_string())?), r)
            .map_err(|e| e.to_string())?;
        for solver in SolverKind::ALL {
            let p = SimParams { solver, degree: r, kappa: 10.0, h_field: 0.0, t_final: 1.0, ..SimParams::default() };
            let mut st = init_state(&space, &p, |_| Complex64::new(1.0, 0.0), |_| [0.0, 0.0]).map_err(|e| e.to_string())?;
            let stepper = Stepper::new(&space, &p).map_err(|e| e.to_string())?;
            for _ in 0..10 {
                let before = st.psi.clone();
                stepper.step(&mut st).map_err(|e| e.to_string())?;
                let d = before.iter().zip(&st.psi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                worst_step = worst_step.max(d);
            }
        }
    }
    notes.push(format!("max ||dpsi|| per step {worst_step:.2e}"));

    // gauge invariance of the density
    let space = FeSpace::new(Arc::new(MeshSpec::lshape(8).build().map_err(|e| e.to_string())?), 2).map_err(|e| e.to_string())?;
    let psi = space.interpolate(|p| Complex64::new(0.3 + p.x * p.y, (3.0 * p.x).sin() - 0.2 * p.y));
    let chi = space.interpolate(|p| (5.0 * p.x).cos() * p.y + p.x * p.x);
    let a = space.sample(|p| [p.y, -p.x]);
    let moved = gauge_transform(&space, &psi, &a, &vec![0.0; space.ndofs()], &chi, None, 10.0);
    let gauge_err = density(&psi).iter().zip(density(&moved.psi)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    notes.push(format!("gauge density change {gauge_err:.1e}"));

    // Hodge invariants along an L-shape run
    let space = FeSpace::new(Arc::new(MeshSpec::lshape(16).build().map_err(|e| e.to_string())?), 1).map_err(|e| e.to_string())?;
    let p = SimParams { kappa: 10.0, h_field: 5.0, track_w: true, t_final: 2.0, ..SimParams::default() };
    let mut st = init_state(&space, &p, |_| Complex64::new(0.6, 0.8), |_| [0.0, 0.0]).map_err(|e| e.to_string())?;
    let stepper = Stepper::new(&space, &p).map_err(|e| e.to_string())?;
    let weights = space.mass_matrix().mul_vec(&vec![1.0; space.ndofs()]);
    let (mut worst_mean, mut worst_trace, mut worst_compat) = (0.0f64, 0.0f64, 0.0f64);
    let mut coherent = true;
    for _ in 0..20 {
        stepper.step(&mut st).map_err(|e| e.to_string())?;
        let Potentials::Hodge { pair, w } = &st.potentials else { return Err("not a Hodge state".into()) };
        coherent &= reconstruct(&space, pair) == st.a_quad;
        let scale = pair.v.iter().map(|x| x.abs()).fold(1.0, f64::max);
        worst_mean = worst_mean.max(pair.v.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>().abs() / scale);
        for &d in space.boundary_dofs() {
            worst_trace = worst_trace.max(pair.u[d].abs()).max(w.as_ref().map_or(0.0, |w| w[d].abs()));
        }
        let f = st.current.as_ref().ok_or("no current")?;
        worst_compat = worst_compat.max(compatibility_residual(&space, f));
    }
    notes.push(format!("mean(v) {worst_mean:.1e}, trace(u,w) {worst_trace:.1e}, compatibility {worst_compat:.1e}"));
    let secs = start.elapsed().as_secs_f64();
    notes.push(format!("{secs:.1}s (limit 60s)"));
    let ok = worst_step < 1e-9
        && gauge_err < 1e-14
        && coherent
        && worst_mean < 1e-12
        && worst_trace == 0.0
        && worst_compat < 1e-10
        && secs < 60.0;
    Ok((ok, notes.join("; ")))
}

const MODULUS_BOUND: f64 = 1.05;

fn modulus_bound() -> Outcome {
    let cfg = Preset::Example33.expand(false);
    let space = FeSpace::new(Arc::new(cfg.mesh.build().map_err(|e| e.to_string())?), cfg.params.degree).map_err(|e| e.to_string())?;
    let psi0 = cfg.psi0.value();
    let out = run(&space, &cfg.params, |_| psi0, |_| [0.0, 0.0], &[]).map_err(|e| e.to_string())?;
    let (t, m) = out.diagnostics.iter().map(|d| (d.t, d.max_abs_psi)).fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok((m <= MODULUS_BOUND, format!("max |psi_h| = {m:.6} at t = {t:.1} over {} steps (bound {MODULUS_BOUND})", out.diagnostics.len())))
}

fn run_binary(out: &Path, threads: Option<&str>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glvortex"));
    cmd.args(["run", "--preset", "example33", "--out"]).arg(out);
    match threads {
        Some(n) => cmd.env("GLVORTEX_THREADS", n),
        None => cmd.env_remove("GLVORTEX_THREADS"),
    };
    let o = cmd.output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_binary(&a, None)?;
    run_binary(&b, Some("1"))?;
    let mut names: Vec<String> = fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    let csv = names.iter().filter(|n| n.ends_with(".csv")).count();
    let mut differing = Vec::new();
    for n in &names {
        let x = fs::read(a.join(n)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(n)).map_err(|e| format!("{n}: {e}"))?;
        if x != y {
            differing.push(n.clone());
        }
    }
    let ok = csv >= 4 && differing.is_empty();
    Ok((ok, format!("{} files ({csv} CSV) compared across two runs (default and 1 thread), differing: {differing:?}", names.len())))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "Hodge round-trip convergence rates", check: hodge_round_trip },
        Criterion { id: 2, name: "manufactured heat equation rates", check: heat_rates },
        Criterion { id: 3, name: "convex-domain solver agreement", check: convex_agreement },
        Criterion { id: 4, name: "L-shape refinement stability ordering", check: lshape_refinement },
        Criterion { id: 5, name: "notch corner artifact divergence", check: corner_divergence },
        Criterion { id: 6, name: "fixed point and invariance suite", check: invariants },
        Criterion { id: 7, name: "modulus bound", check: modulus_bound },
        Criterion { id: 8, name: "deterministic CSV output", check: determinism },
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let (ok, detail) = match (c.check)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {}: {}: {} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
