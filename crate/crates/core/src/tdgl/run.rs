use num_complex::Complex64;

use super::{init_state, SimParams, SimState, Stepper};
use crate::error::{Error, Result};
use crate::fem::FeSpace;
use crate::mesh::Point2;
use crate::post::{Diagnostics, FieldSnapshot, Projector};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SimState,
    pub snapshots: Vec<FieldSnapshot>,
    pub diagnostics: Vec<Diagnostics>,
}

/// Step indices of the requested snapshot times.
fn snapshot_steps(params: &SimParams, times: &[f64]) -> Result<Vec<usize>> {
    let n = params.num_steps();
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        let k = (t / params.tau).round();
        if !(k >= 0.0 && (k * params.tau - t).abs() <= 1e-9 * params.tau && k as usize <= n) {
            return Err(Error::InvalidSpec(format!(
                "snapshot time {t} is not a multiple of tau = {} within [0, {}]",
                params.tau, params.t_final
            )));
        }
        steps.push(k as usize);
    }
    Ok(steps)
}

/// Run `round(T / tau)` steps from the given initial data, collecting the
/// requested snapshots and one diagnostics row per step.
pub fn run(
    space: &FeSpace,
    params: &SimParams,
    psi0: impl Fn(Point2) -> Complex64,
    a0: impl Fn(Point2) -> [f64; 2] + Sync,
    snapshot_times: &[f64],
) -> Result<RunOutput> {
    run_with(space, params, psi0, a0, snapshot_times, |_, _| Ok(()))
}

/// As [`run`], calling `observer` after every step.
pub fn run_with(
    space: &FeSpace,
    params: &SimParams,
    psi0: impl Fn(Point2) -> Complex64,
    a0: impl Fn(Point2) -> [f64; 2] + Sync,
    snapshot_times: &[f64],
    mut observer: impl FnMut(&SimState, &Diagnostics) -> Result<()>,
) -> Result<RunOutput> {
    let steps = snapshot_steps(params, snapshot_times)?;
    let mut state = init_state(space, params, psi0, a0)?;
    let stepper = Stepper::new(space, params)?;
    let proj = Projector::new(space)?;
    let mut snapshots = Vec::new();
    let capture = |state: &SimState, out: &mut Vec<FieldSnapshot>| -> Result<()> {
        for _ in steps.iter().filter(|&&k| k == state.step) {
            out.push(FieldSnapshot::capture(&proj, state, params)?);
        }
        Ok(())
    };
    capture(&state, &mut snapshots)?;
    let n = params.num_steps();
    let mut diagnostics = Vec::with_capacity(n);
    for _ in 0..n {
        let report = stepper.step(&mut state)?;
        let d = Diagnostics::measure(&proj, &state, params, report).map_err(|e| e.at_step(state.step))?;
        capture(&state, &mut snapshots).map_err(|e| e.at_step(state.step))?;
        observer(&state, &d)?;
        diagnostics.push(d);
    }
    Ok(RunOutput { state, snapshots, diagnostics })
}
