//! `key = value` run configuration with `[mesh]`, `[params]`, `[time]` and
//! `[output]` sections.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use glvortex_core::mesh::{DomainKind, MeshSpec, Point2, RefineSpec};
use glvortex_core::{SimParams, SolverKind};
use num_complex::Complex64;

/// Text shown by `--help` describing every key and its default.
pub const CONFIG_HELP: &str = "\
Configuration file keys (`key = value`, `#` starts a comment):
  [mesh]   domain = unit_square | lshape | disk_notch | file   (required)
           m = 16                  nodes per unit length (square, lshape)
           boundary_points = 256   boundary nodes (disk_notch)
           notch_depth = 0.25      notch depth as a fraction of the radius
           notch_halfangle = 0.31415926535897931   radians
           file = PATH             mesh file (domain = file)
           refine_center = X, Y    local refinement center (optional)
           refine_radius = 0.25
           refine_levels = 1
  [params] eta = 1   kappa = 10   H = 0   degree = 1
           solver = hodge | lorentz | temporal   (default hodge)
           track_w = false
           psi0 = 1                complex constant, e.g. 0.6+0.8i
           A0 = zero
  [time]   tau (required)   T (required)
           snapshots = T           comma-separated times, multiples of tau
  [output] dir = out   formats = csv, vtk   (or none)";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config key `{}`: {}", self.key, self.message)
        } else {
            write!(f, "config line {}, key `{}`: {}", self.line, self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Formats {
    pub csv: bool,
    pub vtk: bool,
}

impl Formats {
    pub const ALL: Formats = Formats { csv: true, vtk: true };

    pub fn is_empty(&self) -> bool {
        !self.csv && !self.vtk
    }
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut f = Formats::default();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item.to_ascii_lowercase().as_str() {
                "csv" => f.csv = true,
                "vtk" => f.vtk = true,
                "none" => {}
                other => return Err(format!("unknown format `{other}` (expected csv, vtk or none)")),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPsi {
    Constant(Complex64),
}

impl InitialPsi {
    pub fn value(&self) -> Complex64 {
        match *self {
            InitialPsi::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialA {
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub params: SimParams,
    pub psi0: InitialPsi,
    pub a0: InitialA,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub formats: Formats,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, e: glvortex_core::Error| ConfigError { line: 0, key: key.into(), message: e.to_string() };
        self.mesh.validate().map_err(|e| err("mesh", e))?;
        self.params.validate().map_err(|e| err("params", e))?;
        let tau = self.params.tau;
        let n = self.params.num_steps();
        for &t in &self.snapshot_times {
            let k = (t / tau).round();
            if !(k >= 0.0 && (k * tau - t).abs() <= 1e-9 * tau && k as usize <= n) {
                return Err(ConfigError {
                    line: 0,
                    key: "time.snapshots".into(),
                    message: format!("{t} is not a multiple of tau = {tau} within [0, {}]", self.params.t_final),
                });
            }
        }
        Ok(())
    }
}

/// Parse a complex literal such as `1`, `-0.5`, `0.6+0.8i`, `2i`, `-i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse `{s}` as a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse::<f64>().map_err(|_| bad())?,
        };
        let re = re.parse::<f64>().map_err(|_| bad())?;
        Ok(Complex64::new(re, im))
    } else {
        t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad())
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Table {
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| ConfigError {
                line: e.line,
                key: key.into(),
                message: format!("invalid value `{}`: {err}", e.value),
            }),
        }
    }

    fn with<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|message| ConfigError { line: e.line, key: key.into(), message }),
        }
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?.ok_or_else(|| ConfigError { line: 0, key: key.into(), message: "missing required key".into() })
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| format!("cannot parse `{x}` as a number")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

const SECTIONS: [&str; 4] = ["mesh", "params", "time", "output"];

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError { line, key: format!("[{name}]"), message: "unknown section".into() });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(ConfigError { line, key: s.into(), message: "expected `key = value`".into() });
        };
        let Some(sec) = &section else {
            return Err(ConfigError { line, key: k.trim().into(), message: "key outside of a section".into() });
        };
        let key = format!("{sec}.{}", k.trim());
        if entries.contains_key(&key) {
            return Err(ConfigError { line, key, message: "duplicate key".into() });
        }
        entries.insert(key, Entry { line, value: v.trim().to_string() });
    }
    let mut t = Table { entries };

    let mut mesh = MeshSpec::default();
    let domain: String = t.required("mesh.domain")?;
    let file = t.take("mesh.file");
    mesh.domain = match domain.as_str() {
        "unit_square" | "square" => DomainKind::UnitSquare,
        "lshape" | "l_shape" => DomainKind::LShape,
        "disk_notch" | "disk" => DomainKind::DiskNotch,
        "file" => {
            let f = file.ok_or_else(|| ConfigError { line: 0, key: "mesh.file".into(), message: "required for domain = file".into() })?;
            DomainKind::File(base_dir.join(f.value))
        }
        other => {
            return Err(ConfigError { line: 0, key: "mesh.domain".into(), message: format!("unknown domain `{other}`") })
        }
    };
    if let Some(m) = t.parse("mesh.m")? {
        mesh.m = m;
    }
    if let Some(b) = t.parse("mesh.boundary_points")? {
        mesh.boundary_points = b;
    }
    if let Some(d) = t.parse("mesh.notch_depth")? {
        mesh.notch_depth = d;
    }
    if let Some(a) = t.parse("mesh.notch_halfangle")? {
        mesh.notch_halfangle = a;
    }
    let center = t.with("mesh.refine_center", |v| {
        let xs = parse_list(v)?;
        match xs[..] {
            [x, y] => Ok(Point2::new(x, y)),
            _ => Err("expected two coordinates `x, y`".into()),
        }
    })?;
    let radius: Option<f64> = t.parse("mesh.refine_radius")?;
    let levels: Option<usize> = t.parse("mesh.refine_levels")?;
    if let Some(center) = center {
        mesh.refine = Some(RefineSpec { center, radius: radius.unwrap_or(0.25), levels: levels.unwrap_or(1) });
    } else if radius.is_some() || levels.is_some() {
        return Err(ConfigError { line: 0, key: "mesh.refine_center".into(), message: "required when refining".into() });
    }

    let mut params = SimParams::default();
    if let Some(x) = t.parse("params.eta")? {
        params.eta = x;
    }
    if let Some(x) = t.parse("params.kappa")? {
        params.kappa = x;
    }
    if let Some(x) = t.parse("params.H")? {
        params.h_field = x;
    }
    if let Some(x) = t.parse("params.degree")? {
        params.degree = x;
    }
    if let Some(x) = t.parse::<SolverKind>("params.solver")? {
        params.solver = x;
    }
    if let Some(x) = t.with("params.track_w", parse_bool)? {
        params.track_w = x;
    }
    let psi0 = InitialPsi::Constant(t.with("params.psi0", parse_complex)?.unwrap_or(Complex64::new(1.0, 0.0)));
    let a0 = t
        .with("params.A0", |v| match v {
            "zero" | "0" => Ok(InitialA::Zero),
            _ => Err(format!("only `zero` is supported, got `{v}`")),
        })?
        .unwrap_or(InitialA::Zero);
    params.tau = t.required("time.tau")?;
    params.t_final = t.required("time.T")?;
    let snapshot_times = t.with("time.snapshots", parse_list)?.unwrap_or_else(|| vec![params.t_final]);
    let output_dir = t.take("output.dir").map_or_else(|| PathBuf::from("out"), |e| base_dir.join(e.value));
    let formats = t.parse::<Formats>("output.formats")?.unwrap_or(Formats { csv: true, vtk: false });

    if let Some((key, e)) = t.entries.into_iter().next() {
        return Err(ConfigError { line: e.line, key, message: "unknown key".into() });
    }
    let cfg = RunConfig { mesh, params, psi0, a0, snapshot_times, output_dir, formats };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(parse_config_str(&text, base).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?)
}
