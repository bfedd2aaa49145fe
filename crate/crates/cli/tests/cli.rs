use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use glvortex::commands::{cmd_compare, cmd_run, CompareOptions};
use glvortex::config::parse_config_str;
use glvortex::output::write_snapshot;
use glvortex::Formats;
use glvortex_core::SolverKind;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glvortex")).args(args).output().expect("spawn glvortex")
}

fn small_config(dir: &Path, extra: &str) -> String {
    format!(
        "[mesh]\ndomain = unit_square\nm = 6\n[params]\nkappa = 4\nH = 1\npsi0 = 0.6+0.8i\n{extra}\n[time]\ntau = 0.1\nT = 0.3\nsnapshots = 0.1, 0.3\n[output]\ndir = {}\nformats = csv, vtk\n",
        dir.display()
    )
}

fn stderr_line(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).trim_end().to_string()
}

#[test]
fn run_writes_named_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, small_config(&out, "")).unwrap();
    let o = bin(&["run", cfg_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    for name in ["snap_t0.100_hodge.csv", "snap_t0.300_hodge.csv", "snap_t0.300_hodge.vtk", "diagnostics_hodge.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let leftovers: Vec<_> = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().to_string_lossy().ends_with(".partial")).collect();
    assert!(leftovers.is_empty());

    let csv = fs::read_to_string(out.join("snap_t0.300_hodge.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,y,re_psi,im_psi,density,B,Ax,Ay");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 49);
    for r in &rows {
        assert_eq!(r.len(), 8);
        assert!((r[4] - (r[2] * r[2] + r[3] * r[3])).abs() < 1e-14);
    }

    let diag = fs::read_to_string(out.join("diagnostics_hodge.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(lines.next().unwrap(), "t,mean_density,min_density,max_abs_psi,energy,vortices,psi_iters,field_iters");
    assert_eq!(lines.count(), 3);
}

#[test]
fn vtk_is_a_legacy_triangle_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let cfg = parse_config_str(&small_config(&out, ""), dir.path()).unwrap();
    let (sim, _) = cmd_run(&cfg).unwrap();
    let vtk = fs::read_to_string(out.join("snap_t0.100_hodge.vtk")).unwrap();
    let lines: Vec<&str> = vtk.lines().collect();
    assert_eq!(lines[0], "# vtk DataFile Version 3.0");
    assert_eq!(lines[2], "ASCII");
    assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
    let mesh = sim.space.mesh();
    let (nv, nt) = (mesh.num_nodes(), mesh.num_triangles());
    assert_eq!(lines[4], format!("POINTS {nv} double"));
    assert!(vtk.contains(&format!("CELLS {nt} {}", 4 * nt)));
    let types = vtk.split(&format!("CELL_TYPES {nt}\n")).nth(1).unwrap();
    assert!(types.lines().take(nt).all(|l| l == "5"));
    for field in [
        format!("POINT_DATA {nv}"),
        "SCALARS density double 1".into(),
        "SCALARS B double 1".into(),
        "VECTORS A double".into(),
    ] {
        assert!(vtk.contains(&field), "{field}");
    }
    // the density block holds one value per node matching the CSV
    let dens: Vec<f64> = vtk
        .split("SCALARS density double 1\nLOOKUP_TABLE default\n")
        .nth(1)
        .unwrap()
        .lines()
        .take(nv)
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(dens, sim.output.snapshots[0].density);
}

#[test]
fn empty_format_set_writes_no_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(&small_config(&dir.path().join("x"), ""), dir.path()).unwrap();
    let (sim, _) = cmd_run(&cfg).unwrap();
    let target = dir.path().join("none");
    let files = write_snapshot(&sim.output.snapshots[0], &target, Formats::default()).unwrap();
    assert!(files.is_empty());
    assert!(!target.exists());
}

#[test]
fn electric_field_columns_follow_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let cfg_path = dir.path().join("t.cfg");
    fs::write(&cfg_path, small_config(&out, "")).unwrap();
    let o = bin(&["run", cfg_path.to_str().unwrap(), "--solver", "temporal", "--formats", "csv"]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    let csv = fs::read_to_string(out.join("snap_t0.300_temporal.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,y,re_psi,im_psi,density,B,Ax,Ay,Ex,Ey");
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 10));
    assert!(!out.join("snap_t0.300_temporal.vtk").exists());

    fs::write(&cfg_path, small_config(&out, "track_w = true")).unwrap();
    let o = bin(&["run", cfg_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    let csv = fs::read_to_string(out.join("snap_t0.300_hodge.csv")).unwrap();
    assert!(csv.starts_with("x,y,re_psi,im_psi,density,B,Ax,Ay,Ex,Ey\n"));
    assert!(fs::read_to_string(out.join("snap_t0.300_hodge.vtk")).unwrap().contains("VECTORS E double"));
}

#[test]
fn config_errors_exit_nonzero_with_one_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    fs::write(&cfg_path, small_config(dir.path(), "").replace("tau = 0.1", "tau = 0")).unwrap();
    let o = bin(&["run", cfg_path.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr_line(&o);
    assert!(err.starts_with("error:") && !err.contains('\n'), "{err}");
    assert!(err.contains("tau"), "{err}");

    fs::write(&cfg_path, small_config(dir.path(), "colour = red")).unwrap();
    let err = stderr_line(&bin(&["run", cfg_path.to_str().unwrap()]));
    assert!(err.starts_with("error:") && err.contains("params.colour") && err.contains("line"), "{err}");

    let o = bin(&["run", "--preset", "example99"]);
    assert!(!o.status.success());
    let o = bin(&["run", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr_line(&o).starts_with("error:"));
}

#[test]
fn invalid_thread_count_is_an_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_glvortex"))
        .args(["selftest", "--quick"])
        .env("GLVORTEX_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr_line(&o).starts_with("error: GLVORTEX_THREADS"));
}

#[test]
fn mesh_generate_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l16.glmesh");
    let o = bin(&["mesh", "--domain", "lshape", "--m", "16", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("glmesh 1"));
    let o = bin(&["mesh", "--check", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("valid") && stdout.contains("area 0.75"), "{stdout}");

    fs::write(&path, text.replacen("triangles", "triangels", 1)).unwrap();
    let o = bin(&["mesh", "--check", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr_line(&o).starts_with("error:"));
}

#[test]
fn quick_selftest_passes() {
    let o = bin(&["selftest", "--quick"]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{stdout}");
}

#[test]
fn compare_reports_every_pair_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(&small_config(&dir.path().join("cmp"), ""), dir.path()).unwrap();
    let report = cmd_compare(&cfg, &CompareOptions { write_runs: true, ..CompareOptions::default() }).unwrap();
    assert_eq!(report.runs.len(), 3);
    assert_eq!(report.pairs.len(), 3 * 2);
    assert!(report.sweep.is_empty());
    for p in &report.pairs {
        assert!(p.rel_l2.is_finite() && p.rel_l2 >= 0.0);
    }
    let same = report.pair(6, 0.3, SolverKind::HodgeReformulated, SolverKind::TemporalGauge).unwrap();
    assert!(same < 0.1, "{same}");
    assert!(dir.path().join("cmp/compare_report.txt").is_file());
    assert!(dir.path().join("cmp/compare.csv").is_file());
    assert!(dir.path().join("cmp/lorentz/snap_t0.300_lorentz.csv").is_file());
}

#[test]
fn mesh_sweep_compares_consecutive_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(&small_config(&dir.path().join("sw"), ""), dir.path()).unwrap();
    let opts = CompareOptions {
        solvers: vec![SolverKind::HodgeReformulated],
        mesh_sweep: Some(vec![4, 8, 16]),
        ..CompareOptions::default()
    };
    let report = cmd_compare(&cfg, &opts).unwrap();
    assert_eq!(report.sweep.len(), 2 * 2);
    let coarse = report.sweep_diff(SolverKind::HodgeReformulated, 0.3, 4, 8).unwrap();
    let fine = report.sweep_diff(SolverKind::HodgeReformulated, 0.3, 8, 16).unwrap();
    assert!(fine < coarse, "{fine} >= {coarse}");

    let disk = parse_config_str(
        &small_config(&dir.path().join("d"), "").replace("domain = unit_square", "domain = disk_notch"),
        dir.path(),
    )
    .unwrap();
    assert!(cmd_compare(&disk, &opts).is_err());
}

#[test]
fn preset_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&dir.path().join("a"), "");
    let a = parse_config_str(&cfg, dir.path()).unwrap();
    let b = parse_config_str(&cfg.replace(&dir.path().join("a").display().to_string(), &dir.path().join("b").display().to_string()), dir.path()).unwrap();
    cmd_run(&a).unwrap();
    cmd_run(&b).unwrap();
    for name in ["snap_t0.300_hodge.csv", "snap_t0.300_hodge.vtk", "diagnostics_hodge.csv"] {
        assert_eq!(fs::read(a.output_dir.join(name)).unwrap(), fs::read(b.output_dir.join(name)).unwrap(), "{name}");
    }
}
