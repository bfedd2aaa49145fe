//! Snapshot and diagnostics writers (CSV, legacy ASCII VTK).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use glvortex_core::post::{Diagnostics, FieldSnapshot};

use crate::config::Formats;

/// C `%.17g`: 17 significant digits, shortest of fixed/exponential form,
/// trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let e = format!("{x:.16e}");
    let (mant, exp) = e.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `snap_t{time:.3}_{solver}`
pub fn snapshot_stem(snap: &FieldSnapshot) -> String {
    format!("snap_t{:.3}_{}", snap.time, snap.solver.name())
}

/// Write `contents` to `path` through a `.partial` sibling, renamed on success.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    fs::write(&partial, contents).with_context(|| format!("writing {}", partial.display()))?;
    fs::rename(&partial, path).with_context(|| format!("renaming {} to {}", partial.display(), path.display()))?;
    Ok(())
}

pub fn snapshot_csv(snap: &FieldSnapshot) -> String {
    let mut out = String::from("x,y,re_psi,im_psi,density,B,Ax,Ay");
    if snap.e.is_some() {
        out.push_str(",Ex,Ey");
    }
    out.push('\n');
    for (i, p) in snap.mesh.nodes().iter().enumerate().take(snap.len()) {
        let mut row = vec![p.x, p.y, snap.re_psi[i], snap.im_psi[i], snap.density[i], snap.b[i], snap.ax[i], snap.ay[i]];
        if let Some([ex, ey]) = &snap.e {
            row.push(ex[i]);
            row.push(ey[i]);
        }
        let cells: Vec<String> = row.into_iter().map(fmt_g17).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn snapshot_vtk(snap: &FieldSnapshot) -> String {
    let mesh = &snap.mesh;
    let n = snap.len();
    let tris = mesh.triangles();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "glvortex t={} solver={}", fmt_g17(snap.time), snap.solver.name());
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {n} double");
    for p in &mesh.nodes()[..n] {
        let _ = writeln!(out, "{} {} 0", fmt_g17(p.x), fmt_g17(p.y));
    }
    let _ = writeln!(out, "\nCELLS {} {}", tris.len(), 4 * tris.len());
    for t in tris {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "\nCELL_TYPES {}", tris.len());
    for _ in tris {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "\nPOINT_DATA {n}");
    let scalars = |out: &mut String, name: &str, v: &[f64]| {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for &x in v {
            out.push_str(&fmt_g17(x));
            out.push('\n');
        }
    };
    let vectors = |out: &mut String, name: &str, x: &[f64], y: &[f64]| {
        let _ = writeln!(out, "VECTORS {name} double");
        for (a, b) in x.iter().zip(y) {
            let _ = writeln!(out, "{} {} 0", fmt_g17(*a), fmt_g17(*b));
        }
    };
    scalars(&mut out, "density", &snap.density);
    scalars(&mut out, "B", &snap.b);
    scalars(&mut out, "re_psi", &snap.re_psi);
    scalars(&mut out, "im_psi", &snap.im_psi);
    vectors(&mut out, "A", &snap.ax, &snap.ay);
    if let Some([ex, ey]) = &snap.e {
        vectors(&mut out, "E", ex, ey);
    }
    out
}

/// Write one snapshot in each requested format; returns the written paths.
pub fn write_snapshot(snap: &FieldSnapshot, dir: &Path, formats: Formats) -> Result<Vec<PathBuf>> {
    if formats.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = snapshot_stem(snap);
    let mut paths = Vec::new();
    if formats.csv {
        let p = dir.join(format!("{stem}.csv"));
        write_atomic(&p, &snapshot_csv(snap))?;
        paths.push(p);
    }
    if formats.vtk {
        let p = dir.join(format!("{stem}.vtk"));
        write_atomic(&p, &snapshot_vtk(snap))?;
        paths.push(p);
    }
    Ok(paths)
}

pub const DIAGNOSTICS_HEADER: &str = "t,mean_density,min_density,max_abs_psi,energy,vortices,psi_iters,field_iters";

pub fn diagnostics_row(d: &Diagnostics) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        fmt_g17(d.t),
        fmt_g17(d.mean_density),
        fmt_g17(d.min_density),
        fmt_g17(d.max_abs_psi),
        fmt_g17(d.energy),
        d.vortices,
        d.psi_iters,
        d.field_iters
    )
}

pub fn diagnostics_csv(rows: &[Diagnostics]) -> String {
    let mut out = String::with_capacity(96 * (rows.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in rows {
        out.push_str(&diagnostics_row(d));
        out.push('\n');
    }
    out
}
