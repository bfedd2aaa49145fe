use std::sync::Arc;

use num_complex::Complex64;

use super::*;
use crate::fem::{constrain_dirichlet, solve_spd, DofKind};
use crate::mesh::{gen_lshape, gen_unit_square};
use crate::post::Projector;

fn square(m: usize, r: usize) -> FeSpace {
    FeSpace::new(Arc::new(gen_unit_square(m).unwrap()), r).unwrap()
}

fn params(solver: SolverKind, h: f64) -> SimParams {
    SimParams { solver, h_field: h, kappa: 4.0, tau: 0.1, t_final: 1.0, ..SimParams::default() }
}

fn zero(_: Point2) -> [f64; 2] {
    [0.0, 0.0]
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn superconducting_state_is_a_fixed_point() {
    for r in [1, 2] {
        let s = square(4, r);
        for kind in SolverKind::ALL {
            let p = SimParams { degree: r, track_w: kind == SolverKind::HodgeReformulated, ..params(kind, 0.0) };
            let st = init_state(&s, &p, |_| Complex64::new(1.0, 0.0), zero).unwrap();
            let stepper = Stepper::new(&s, &p).unwrap();
            let mut next = st.clone();
            for _ in 0..3 {
                stepper.step(&mut next).unwrap();
            }
            assert!(max_diff(&next.psi, &st.psi) < 1e-9, "{kind}");
            assert_eq!(next.potentials, st.potentials, "{kind}");
            assert!((next.t - 0.3).abs() < 1e-15 && next.step == 3);
        }
    }
}

#[test]
fn zero_order_parameter_stays_zero() {
    let s = square(4, 1);
    for kind in SolverKind::ALL {
        let p = params(kind, 1.0);
        let st = init_state(&s, &p, |_| Complex64::new(0.0, 0.0), zero).unwrap();
        let next = match kind {
            SolverKind::TemporalGauge => step_temporal(&s, &st, &p),
            SolverKind::LorentzGauge => step_lorentz(&s, &st, &p),
            SolverKind::HodgeReformulated => step_hodge(&s, &st, &p),
        }
        .unwrap();
        assert!(next.psi.iter().all(|z| z.norm() == 0.0));
    }
}

#[test]
fn uniform_unit_modulus_state_matches_scalar_step() {
    let s = square(5, 1);
    let c0 = Complex64::new(0.6, 0.8);
    for kind in SolverKind::ALL {
        let p = SimParams { eta: 1.7, ..params(kind, 0.0) };
        let st = init_state(&s, &p, |_| c0, zero).unwrap();
        assert!(st.psi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        let (psi, _) = step_psi(&s, &st.psi, &st.a_quad, &p).unwrap();
        // (c - c0) eta / tau + (|c0|^2 - 1) c = 0
        let c = c0 * (p.eta / p.tau) / (p.eta / p.tau + c0.norm_sqr() - 1.0);
        for z in psi {
            assert!((z - c).norm() < 1e-9);
        }
    }
}

#[test]
fn psi_matrix_depends_only_on_state() {
    let s = square(4, 2);
    let p = params(SolverKind::LorentzGauge, 0.0);
    let psi: Vec<Complex64> = s.interpolate(|q| Complex64::new(q.x, q.y * q.y));
    let a: Vec<[f64; 2]> = s.sample(|q| [q.y, -q.x]);
    let m1 = assemble_psi_matrix(&s, &psi, &a, &p);
    let m2 = assemble_psi_matrix(&s, &psi, &a, &p);
    assert_eq!(m1, m2);
}

/// Without the gauge term and with `A = 0` the matrix is real symmetric; the
/// gauge and magnetic terms together keep it Hermitian only when the gauge
/// term is absent.
#[test]
fn psi_matrix_structure() {
    let s = square(4, 1);
    let psi = vec![Complex64::new(0.5, 0.1); s.ndofs()];
    let a: Vec<[f64; 2]> = s.sample(|q| [q.y, -q.x]);
    let t = assemble_psi_matrix(&s, &psi, &a, &params(SolverKind::TemporalGauge, 0.0));
    assert!(t.hermitian_defect() < 1e-12);
    let l = assemble_psi_matrix(&s, &psi, &a, &params(SolverKind::LorentzGauge, 0.0));
    assert!(l.hermitian_defect() > 1e-6);
}

#[test]
fn supercurrent_of_constant_state() {
    let s = square(3, 1);
    let c = Complex64::new(0.3, -0.4);
    let psi = vec![c; s.ndofs()];
    let a = vec![[0.7, -1.1]; s.nquad()];
    for f in compute_supercurrent(&s, &psi, &psi, &a, 3.0) {
        assert!((f[0] - 0.25 * 0.7).abs() < 1e-14 && (f[1] + 0.25 * 1.1).abs() < 1e-14);
    }
    let one = vec![Complex64::new(1.0, 0.0); s.ndofs()];
    let zero_a = vec![[0.0; 2]; s.nquad()];
    assert!(compute_supercurrent(&s, &one, &one, &zero_a, 3.0).iter().all(|f| f == &[0.0, 0.0]));
}

#[test]
fn plane_wave_supercurrent_converges() {
    let kappa = 2.0;
    let mut errs = Vec::new();
    for m in [8, 16, 32] {
        let s = square(m, 2);
        let psi: Vec<Complex64> = s.interpolate(|p| Complex64::from_polar(1.0, kappa * p.x));
        let f = compute_supercurrent(&s, &psi, &psi, &vec![[0.0; 2]; s.nquad()], kappa);
        let d: Vec<f64> = f.iter().map(|v| (v[0] + 1.0).powi(2) + v[1].powi(2)).collect();
        errs.push(s.integrate(&d).sqrt());
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
    }
}

#[test]
fn hodge_step_under_applied_field_is_a_heat_step() {
    let s = square(8, 1);
    let h = 0.7;
    let p = params(SolverKind::HodgeReformulated, h);
    let st = init_state(&s, &p, |_| Complex64::new(1.0, 0.0), zero).unwrap();
    let next = step_hodge(&s, &st, &p).unwrap();
    let Potentials::Hodge { pair, .. } = &next.potentials else { panic!() };

    // (M/tau + K) u = H M 1 with u = 0 on the boundary
    let mass = s.mass_matrix();
    let a = mass.scaled(1.0 / p.tau).add_scaled(1.0, &s.stiffness_matrix()).unwrap();
    let b: Vec<f64> = mass.mul_vec(&vec![h; s.ndofs()]);
    let bd = s.boundary_dofs().to_vec();
    let (a, b) = constrain_dirichlet(&s, &a, &b, &bd, &vec![0.0; bd.len()]).unwrap();
    let exact = solve_spd(&a, &b, 1e-13).unwrap();
    for (d, (x, y)) in pair.u.iter().zip(&exact).enumerate() {
        assert!((x - y).abs() < 1e-10);
        if s.is_boundary_dof(d) {
            assert_eq!(*x, 0.0);
        } else {
            assert!(*x > 0.0);
        }
    }
    assert!(pair.v.iter().all(|v| v.abs() < 1e-12));
    assert!(max_diff(&next.psi, &st.psi) < 1e-9);
}

#[test]
fn hodge_invariants_hold_along_a_run() {
    let s = FeSpace::new(Arc::new(gen_lshape(8).unwrap()), 1).unwrap();
    let p = SimParams { track_w: true, ..params(SolverKind::HodgeReformulated, 2.0) };
    let mut st = init_state(&s, &p, |q| Complex64::new(1.0, 0.2 * q.x), zero).unwrap();
    let stepper = Stepper::new(&s, &p).unwrap();
    let weights = s.mass_matrix().mul_vec(&vec![1.0; s.ndofs()]);
    for _ in 0..5 {
        stepper.step(&mut st).unwrap();
        let Potentials::Hodge { pair, w } = &st.potentials else { panic!() };
        assert!(reconstruct(&s, pair) == st.a_quad);
        let mean: f64 = pair.v.iter().zip(&weights).map(|(a, b)| a * b).sum();
        assert!(mean.abs() < 1e-12);
        for &d in s.boundary_dofs() {
            assert_eq!(pair.u[d], 0.0);
            assert_eq!(w.as_ref().unwrap()[d], 0.0);
        }
        let f = st.current.as_ref().unwrap();
        assert!(crate::hodge::compatibility_residual(&s, f) < 1e-10);
    }
}

#[test]
fn initial_w_is_curl_minus_field() {
    let s = square(4, 1);
    let p = SimParams { track_w: true, ..params(SolverKind::HodgeReformulated, 0.8) };
    let st = init_state(&s, &p, |_| Complex64::new(1.0, 0.0), zero).unwrap();
    let w = st.w().unwrap();
    for d in 0..s.ndofs() {
        let expect = if s.is_boundary_dof(d) { 0.0 } else { -0.8 };
        assert!((w[d] - expect).abs() < 1e-15);
    }
    let st = init_state(&s, &p, |_| Complex64::new(1.0, 0.0), |q| [-q.y, q.x]).unwrap();
    for (d, w) in st.w().unwrap().iter().enumerate() {
        let expect = if s.is_boundary_dof(d) { 0.0 } else { 2.0 - 0.8 };
        assert!((w - expect).abs() < 1e-8);
    }
}

#[test]
fn gauge_solvers_respect_tangential_constraint() {
    let s = FeSpace::new(Arc::new(gen_lshape(8).unwrap()), 2).unwrap();
    for kind in [SolverKind::TemporalGauge, SolverKind::LorentzGauge] {
        let p = SimParams { degree: 2, ..params(kind, 1.5) };
        let mut st = init_state(&s, &p, |q| Complex64::new(0.8, 0.3 * q.y), |q| [q.y, q.x * q.x]).unwrap();
        let stepper = Stepper::new(&s, &p).unwrap();
        for _ in 0..3 {
            stepper.step(&mut st).unwrap();
            let Potentials::Vector { ax, ay } = &st.potentials else { panic!() };
            for (d, k) in s.dof_kind().iter().enumerate() {
                match *k {
                    DofKind::Interior => {}
                    DofKind::Boundary(n) => assert!((ax[d] * n[0] + ay[d] * n[1]).abs() < 1e-13),
                    DofKind::Corner => assert!(ax[d] == 0.0 && ay[d] == 0.0),
                }
            }
        }
        assert!(st.a_rate.is_some());
    }
}

#[test]
fn normal_state_magnetic_diffusion_approaches_applied_field() {
    let s = square(8, 1);
    let proj = Projector::new(&s).unwrap();
    for kind in SolverKind::ALL {
        let p = SimParams { tau: 0.05, ..params(kind, 1.0) };
        let mut st = init_state(&s, &p, |_| Complex64::new(0.0, 0.0), zero).unwrap();
        let stepper = Stepper::new(&s, &p).unwrap();
        let gap = |st: &SimState| {
            let b = proj.induction(st, &p).unwrap();
            let d: Vec<f64> = s.eval_quad(&b).iter().map(|x| (x - 1.0).powi(2)).collect();
            s.integrate(&d).sqrt()
        };
        let mut last = gap(&st);
        for _ in 0..8 {
            stepper.step(&mut st).unwrap();
            let g = gap(&st);
            assert!(g < last, "{kind}: {g} >= {last}");
            last = g;
        }
    }
}

#[test]
fn w_tracks_the_curl_of_the_reconstructed_potential() {
    let mut errs = Vec::new();
    for m in [8, 16, 32] {
        let s = square(m, 1);
        let p = SimParams { track_w: true, tau: 0.05, t_final: 0.25, ..params(SolverKind::HodgeReformulated, 1.0) };
        let mut st = init_state(&s, &p, |_| Complex64::new(1.0, 0.0), zero).unwrap();
        let stepper = Stepper::new(&s, &p).unwrap();
        for _ in 0..p.num_steps() {
            stepper.step(&mut st).unwrap();
        }
        let proj = Projector::new(&s).unwrap();
        let Potentials::Hodge { pair, w } = &st.potentials else { panic!() };
        let curl = proj.stream_induction(&pair.u, p.h_field).unwrap();
        let d: Vec<f64> = w.as_ref().unwrap().iter().zip(&curl).map(|(w, c)| w + p.h_field - c).collect();
        let dq: Vec<f64> = s.eval_quad(&d).iter().map(|x| x * x).collect();
        errs.push(s.integrate(&dq).sqrt());
    }
    assert!(errs[2] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn parameters_are_validated() {
    let ok = SimParams::default();
    assert!(ok.validate().is_ok());
    for bad in [
        SimParams { tau: 0.0, ..ok },
        SimParams { eta: -1.0, ..ok },
        SimParams { kappa: 0.0, ..ok },
        SimParams { t_final: 0.05, ..ok },
        SimParams { degree: 3, ..ok },
    ] {
        assert!(bad.validate().is_err());
    }
    assert_eq!(SimParams { t_final: 40.0, ..ok }.num_steps(), 400);
    for k in SolverKind::ALL {
        assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
    }
    assert!("coulomb".parse::<SolverKind>().is_err());
}

#[test]
fn mismatched_state_is_rejected() {
    let s = square(3, 1);
    let p = params(SolverKind::TemporalGauge, 0.0);
    let st = init_state(&s, &p, |_| Complex64::new(1.0, 0.0), zero).unwrap();
    assert!(step_hodge(&s, &st, &SimParams { solver: SolverKind::HodgeReformulated, ..p }).is_err());
    assert!(step_lorentz(&s, &st, &p).is_err());
}

#[test]
fn single_step_run_emits_one_snapshot() {
    let s = square(4, 1);
    let p = SimParams { t_final: 0.1, ..params(SolverKind::HodgeReformulated, 0.5) };
    let out = run(&s, &p, |_| Complex64::new(1.0, 0.0), zero, &[0.1]).unwrap();
    assert_eq!(out.diagnostics.len(), 1);
    assert_eq!(out.snapshots.len(), 1);
    assert_eq!(out.state.step, 1);
    assert!((out.snapshots[0].time - 0.1).abs() < 1e-15);
    assert!(run(&s, &p, |_| Complex64::new(1.0, 0.0), zero, &[0.05]).is_err());
    assert!(run(&s, &p, |_| Complex64::new(1.0, 0.0), zero, &[0.2]).is_err());
}

#[test]
fn runs_are_deterministic() {
    let s = FeSpace::new(Arc::new(gen_lshape(6).unwrap()), 1).unwrap();
    for kind in SolverKind::ALL {
        let p = SimParams { t_final: 0.5, ..params(kind, 2.0) };
        let go = || run(&s, &p, |q| Complex64::new(1.0, q.x), zero, &[0.5]).unwrap();
        let (a, b) = (go(), go());
        assert_eq!(a.state.psi, b.state.psi);
        assert_eq!(a.snapshots[0].b, b.snapshots[0].b);
        assert_eq!(a.diagnostics, b.diagnostics);
    }
}
