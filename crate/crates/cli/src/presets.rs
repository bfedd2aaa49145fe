//! Built-in run configurations for the three reference experiments.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use glvortex_core::mesh::{DomainKind, MeshSpec, Point2, RefineSpec};
use glvortex_core::{SimParams, SolverKind};
use num_complex::Complex64;

use crate::config::{Formats, InitialA, InitialPsi, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// L-shape, `h = 1/16`, `kappa = 10`, `H = 5`.
    Example31,
    /// Notched disk, `kappa = 4`, `H = 0.8`.
    Example32H08,
    /// Notched disk, `kappa = 4`, `H = 0.9`.
    Example32H09,
    /// Notched disk, `H = 2.02`, quadratic elements on a locally refined mesh.
    Example32H202,
    /// Unit square, `m = 32`, `kappa = 10`, `H = 5`.
    Example33,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::Example31, Preset::Example32H08, Preset::Example32H09, Preset::Example32H202, Preset::Example33];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Example31 => "example31",
            Preset::Example32H08 => "example32_h08",
            Preset::Example32H09 => "example32_h09",
            Preset::Example32H202 => "example32_h202",
            Preset::Example33 => "example33",
        }
    }

    /// Expand to a full configuration. `full` selects the long horizon of
    /// the `H = 0.8` disk run; the other presets ignore it.
    pub fn expand(self, full: bool) -> RunConfig {
        let base = SimParams {
            eta: 1.0,
            tau: 0.1,
            degree: 1,
            solver: SolverKind::HodgeReformulated,
            track_w: false,
            ..SimParams::default()
        };
        let disk = MeshSpec { notch_depth: 0.25, notch_halfangle: 0.1 * PI, ..MeshSpec::disk_notch(256) };
        let vortex_psi = InitialPsi::Constant(Complex64::new(0.6, 0.8));
        let unit_psi = InitialPsi::Constant(Complex64::new(1.0, 0.0));
        let (mesh, params, psi0, snapshot_times) = match self {
            Preset::Example31 => (
                MeshSpec::lshape(16),
                SimParams { kappa: 10.0, h_field: 5.0, t_final: 40.0, ..base },
                vortex_psi,
                vec![5.0, 20.0, 40.0],
            ),
            Preset::Example32H08 => {
                let t = if full { 15000.0 } else { 5000.0 };
                (disk, SimParams { kappa: 4.0, h_field: 0.8, t_final: t, ..base }, unit_psi, vec![20.0, 100.0, t])
            }
            Preset::Example32H09 => (
                disk,
                SimParams { kappa: 4.0, h_field: 0.9, t_final: 5000.0, ..base },
                unit_psi,
                vec![25.0, 30.0, 5000.0],
            ),
            Preset::Example32H202 => (
                MeshSpec {
                    refine: Some(RefineSpec { center: Point2::new(0.75, 0.0), radius: 0.2, levels: 2 }),
                    ..disk
                },
                SimParams { kappa: 4.0, h_field: 2.02, t_final: 100.0, degree: 2, ..base },
                unit_psi,
                vec![25.0, 50.0, 100.0],
            ),
            Preset::Example33 => (
                MeshSpec::unit_square(32),
                SimParams { kappa: 10.0, h_field: 5.0, t_final: 40.0, ..base },
                vortex_psi,
                vec![5.0, 20.0, 40.0],
            ),
        };
        debug_assert!(!matches!(mesh.domain, DomainKind::File(_)));
        RunConfig {
            mesh,
            params,
            psi0,
            a0: InitialA::Zero,
            snapshot_times,
            output_dir: PathBuf::from("out").join(self.name()),
            formats: Formats::ALL,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            format!("unknown preset `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Row {
        name: &'static str,
        domain: DomainKind,
        m: usize,
        boundary_points: usize,
        degree: usize,
        eta: f64,
        kappa: f64,
        h: f64,
        tau: f64,
        t: f64,
        psi0: (f64, f64),
        snapshots: &'static [f64],
        refined: bool,
    }

    #[test]
    fn presets_match_reference_table() {
        let table = [
            Row { name: "example31", domain: DomainKind::LShape, m: 16, boundary_points: 256, degree: 1, eta: 1.0, kappa: 10.0, h: 5.0, tau: 0.1, t: 40.0, psi0: (0.6, 0.8), snapshots: &[5.0, 20.0, 40.0], refined: false },
            Row { name: "example32_h08", domain: DomainKind::DiskNotch, m: 16, boundary_points: 256, degree: 1, eta: 1.0, kappa: 4.0, h: 0.8, tau: 0.1, t: 5000.0, psi0: (1.0, 0.0), snapshots: &[20.0, 100.0, 5000.0], refined: false },
            Row { name: "example32_h09", domain: DomainKind::DiskNotch, m: 16, boundary_points: 256, degree: 1, eta: 1.0, kappa: 4.0, h: 0.9, tau: 0.1, t: 5000.0, psi0: (1.0, 0.0), snapshots: &[25.0, 30.0, 5000.0], refined: false },
            Row { name: "example32_h202", domain: DomainKind::DiskNotch, m: 16, boundary_points: 256, degree: 2, eta: 1.0, kappa: 4.0, h: 2.02, tau: 0.1, t: 100.0, psi0: (1.0, 0.0), snapshots: &[25.0, 50.0, 100.0], refined: true },
            Row { name: "example33", domain: DomainKind::UnitSquare, m: 32, boundary_points: 256, degree: 1, eta: 1.0, kappa: 10.0, h: 5.0, tau: 0.1, t: 40.0, psi0: (0.6, 0.8), snapshots: &[5.0, 20.0, 40.0], refined: false },
        ];
        for row in table {
            let p: Preset = row.name.parse().unwrap();
            let c = p.expand(false);
            assert_eq!(c.mesh.domain, row.domain, "{}", row.name);
            assert_eq!(c.mesh.m, row.m);
            assert_eq!(c.mesh.boundary_points, row.boundary_points);
            assert_eq!(c.mesh.refine.is_some(), row.refined);
            assert_eq!(c.params.degree, row.degree);
            assert_eq!(c.params.eta, row.eta);
            assert_eq!(c.params.kappa, row.kappa);
            assert_eq!(c.params.h_field, row.h);
            assert_eq!(c.params.tau, row.tau);
            assert_eq!(c.params.t_final, row.t);
            assert_eq!(c.psi0.value(), Complex64::new(row.psi0.0, row.psi0.1));
            assert_eq!(c.a0, InitialA::Zero);
            assert_eq!(c.snapshot_times, row.snapshots);
            c.validate().unwrap();
        }
    }

    #[test]
    fn full_horizon_only_changes_the_long_run() {
        let c = Preset::Example32H08.expand(true);
        assert_eq!(c.params.t_final, 15000.0);
        assert_eq!(c.snapshot_times, vec![20.0, 100.0, 15000.0]);
        assert_eq!(Preset::Example33.expand(true), Preset::Example33.expand(false));
    }

    #[test]
    fn unknown_preset_lists_names() {
        let e = "example34".parse::<Preset>().unwrap_err();
        assert!(e.contains("example33"));
    }
}
