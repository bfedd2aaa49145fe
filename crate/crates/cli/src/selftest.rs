//! Convergence studies with closed-form solutions: the Hodge round trip and a
//! manufactured heat equation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use anyhow::Result;
use glvortex_core::hodge::{decompose_vector, reconstruct};
use glvortex_core::mesh::gen_unit_square;
use glvortex_core::tdgl::HeatSolver;
use glvortex_core::{FeSpace, Point2};

/// Errors over a sequence of step sizes and the fitted rate.
#[derive(Debug, Clone)]
pub struct RateStudy {
    pub label: String,
    /// Mesh size or time step, decreasing.
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub expected: f64,
    pub tol: f64,
}

impl RateStudy {
    /// Rates between consecutive entries.
    pub fn pairwise(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .zip(self.errors.windows(2))
            .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            .collect()
    }

    /// Least-squares slope of `log e` against `log h`.
    pub fn rate(&self) -> f64 {
        let x: Vec<f64> = self.steps.iter().map(|h| h.ln()).collect();
        let y: Vec<f64> = self.errors.iter().map(|e| e.ln()).collect();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    }

    pub fn passed(&self) -> bool {
        (self.rate() - self.expected).abs() <= self.tol
    }
}

impl fmt::Display for RateStudy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let errs: Vec<String> = self.errors.iter().map(|e| format!("{e:.3e}")).collect();
        let pw: Vec<String> = self.pairwise().iter().map(|r| format!("{r:.3}")).collect();
        write!(
            f,
            "{} {}: rate {:.3} (expected {} +/- {}), errors [{}], pairwise [{}]",
            if self.passed() { "PASS" } else { "FAIL" },
            self.label,
            self.rate(),
            self.expected,
            self.tol,
            errs.join(", "),
            pw.join(", ")
        )
    }
}

fn square_space(m: usize, degree: usize) -> Result<FeSpace> {
    Ok(FeSpace::new(Arc::new(gen_unit_square(m)?), degree)?)
}

/// `curl(sin pi x sin pi y) + grad(cos pi x cos pi y)`
pub fn roundtrip_field(p: Point2) -> [f64; 2] {
    let (sx, cx) = (PI * p.x).sin_cos();
    let (sy, cy) = (PI * p.y).sin_cos();
    let curl = [PI * sx * cy, -PI * cx * sy];
    let grad = [-PI * sx * cy, -PI * cx * sy];
    [curl[0] + grad[0], curl[1] + grad[1]]
}

/// L2 error of `reconstruct(decompose_vector(A))` on the unit square.
pub fn roundtrip_error(m: usize, degree: usize) -> Result<f64> {
    let space = square_space(m, degree)?;
    let a = space.sample(roundtrip_field);
    let back = reconstruct(&space, &decompose_vector(&space, &a)?);
    let d: Vec<f64> = a.iter().zip(&back).map(|(x, y)| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).collect();
    Ok(space.integrate(&d).sqrt())
}

pub fn roundtrip_study(degree: usize, ms: &[usize]) -> Result<RateStudy> {
    let errors = ms.iter().map(|&m| roundtrip_error(m, degree)).collect::<Result<Vec<_>>>()?;
    Ok(RateStudy {
        label: format!("hodge round trip r={degree} m={ms:?}"),
        steps: ms.iter().map(|&m| 1.0 / m as f64).collect(),
        errors,
        expected: degree as f64,
        tol: 0.25,
    })
}

pub const HEAT_T: f64 = 0.5;

/// `u = exp(-t) sin pi x sin pi y`, solving `u_t - Lap u = (2 pi^2 - 1) u`.
pub fn heat_exact(p: Point2, t: f64) -> f64 {
    (-t).exp() * (PI * p.x).sin() * (PI * p.y).sin()
}

/// L2 error at `T = 0.5` of backward Euler with homogeneous Dirichlet data.
pub fn heat_error(m: usize, degree: usize, tau: f64) -> Result<f64> {
    let space = square_space(m, degree)?;
    let heat = HeatSolver::new(&space, tau, true)?;
    let n = (HEAT_T / tau).round() as usize;
    let mut u = space.interpolate(|p| heat_exact(p, 0.0));
    for k in 1..=n {
        let t = k as f64 * tau;
        let f = space.sample(|p| (2.0 * PI * PI - 1.0) * heat_exact(p, t));
        u = heat.step(&u, &space.load(&f))?.0;
    }
    Ok(space.l2_error(&u, |p| heat_exact(p, n as f64 * tau)))
}

/// Spatial study with `r = 1` and `tau = 2 h^2`.
pub fn heat_space_study(ms: &[usize]) -> Result<RateStudy> {
    let errors = ms
        .iter()
        .map(|&m| heat_error(m, 1, 2.0 / (m * m) as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateStudy {
        label: format!("heat space r=1 tau=2h^2 m={ms:?}"),
        steps: ms.iter().map(|&m| 1.0 / m as f64).collect(),
        errors,
        expected: 2.0,
        tol: 0.25,
    })
}

/// Temporal study on a fixed quadratic mesh.
pub fn heat_time_study(m: usize, taus: &[f64]) -> Result<RateStudy> {
    let errors = taus.iter().map(|&tau| heat_error(m, 2, tau)).collect::<Result<Vec<_>>>()?;
    Ok(RateStudy {
        label: format!("heat time r=2 m={m} tau={taus:?}"),
        steps: taus.to_vec(),
        errors,
        expected: 1.0,
        tol: 0.25,
    })
}

/// The four studies; `quick` uses coarser meshes.
pub fn all_studies(quick: bool) -> Result<Vec<RateStudy>> {
    let ms: &[usize] = if quick { &[8, 16, 32] } else { &[16, 32, 64] };
    let heat_ms: &[usize] = if quick { &[8, 16, 32] } else { &[16, 32, 64] };
    let (tm, taus): (usize, &[f64]) = if quick { (16, &[0.1, 0.05, 0.025]) } else { (32, &[0.1, 0.05, 0.025, 0.0125]) };
    Ok(vec![
        roundtrip_study(1, ms)?,
        roundtrip_study(2, ms)?,
        heat_space_study(heat_ms)?,
        heat_time_study(tm, taus)?,
    ])
}
