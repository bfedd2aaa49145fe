use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use glvortex::commands::{self, CompareOptions};
use glvortex::config::CONFIG_HELP;
use glvortex::{parse_config, selftest, Formats, Preset, RunConfig};
use glvortex_core::mesh::{DomainKind, MeshSpec, Point2, RefineSpec};
use glvortex_core::SolverKind;

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "glvortex", version, about = "Finite element simulation of Ginzburg-Landau vortex dynamics")]
#[command(after_help = "Environment: GLVORTEX_THREADS caps the number of worker threads (default: all cores).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write snapshots and diagnostics.
    #[command(after_help = CONFIG_HELP)]
    Run(RunArgs),
    /// Run one configuration under several solvers and compare the results.
    #[command(after_help = CONFIG_HELP)]
    Compare(CompareArgs),
    /// Generate or check a mesh file.
    Mesh(MeshArgs),
    /// Run the convergence self-tests.
    Selftest {
        /// Coarser meshes and fewer time steps.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Configuration file.
    config: Option<PathBuf>,
    /// Built-in configuration: example31, example32_h08, example32_h09,
    /// example32_h202, example33.
    #[arg(long, conflicts_with = "config")]
    preset: Option<Preset>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats, e.g. `csv,vtk` or `none`.
    #[arg(long)]
    formats: Option<Formats>,
    /// Use the full time horizon of the long disk run.
    #[arg(long)]
    full: bool,
}

impl Source {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), None) => parse_config(path)?,
            (None, Some(p)) => p.expand(self.full),
            _ => bail!("give a configuration file or --preset NAME"),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(f) = self.formats {
            cfg.formats = f;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// temporal, lorentz or hodge (overrides the configuration).
    #[arg(long)]
    solver: Option<SolverKind>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated solvers.
    #[arg(long, value_delimiter = ',', default_value = "temporal,lorentz,hodge")]
    solvers: Vec<SolverKind>,
    /// Comma-separated mesh parameters `m` to run each solver on.
    #[arg(long, value_delimiter = ',')]
    mesh_sweep: Option<Vec<usize>>,
    /// Points closer than this many mesh sizes to a corner are excluded from
    /// the pairwise comparison.
    #[arg(long, default_value_t = 2.0)]
    corner_margin: f64,
    /// Also write each run's snapshots and diagnostics.
    #[arg(long)]
    write_runs: bool,
}

#[derive(Args)]
struct MeshArgs {
    /// Validate an existing mesh file instead of generating one.
    #[arg(long, conflicts_with_all = ["domain", "out"])]
    check: Option<PathBuf>,
    /// unit_square, lshape or disk_notch.
    #[arg(long)]
    domain: Option<String>,
    /// Nodes per unit length (unit_square, lshape).
    #[arg(long, default_value_t = 16)]
    m: usize,
    /// Boundary nodes (disk_notch).
    #[arg(long, default_value_t = 256)]
    boundary_points: usize,
    /// Local refinement center `X,Y`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    refine_center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.25)]
    refine_radius: f64,
    #[arg(long, default_value_t = 1)]
    refine_levels: usize,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("GLVORTEX_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).with_context(|| format!("GLVORTEX_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.source.load()?;
    if let Some(s) = args.solver {
        cfg.params.solver = s;
    }
    let (sim, files) = commands::cmd_run(&cfg)?;
    let last = sim.output.diagnostics.last();
    say!(
        "{} solver, {} steps in {:.2}s",
        cfg.params.solver,
        sim.output.state.step,
        sim.elapsed.as_secs_f64()
    );
    if let Some(d) = last {
        say!(
            "t={} mean|psi|^2={:.6} max|psi|={:.6} vortices={}",
            d.t, d.mean_density, d.max_abs_psi, d.vortices
        );
    }
    for f in files {
        say!("wrote {}", f.display());
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let cfg = args.source.load()?;
    let opts = CompareOptions {
        solvers: args.solvers,
        mesh_sweep: args.mesh_sweep,
        corner_margin: args.corner_margin,
        write_runs: args.write_runs,
    };
    let report = commands::cmd_compare(&cfg, &opts)?;
    say!("{}", report.to_text().trim_end());
    say!("wrote {}", cfg.output_dir.join("compare_report.txt").display());
    Ok(())
}

fn mesh(args: MeshArgs) -> Result<()> {
    if let Some(path) = args.check {
        let m = commands::cmd_mesh_check(&path)?;
        say!("{}\nvalid", commands::mesh_summary(&m));
        return Ok(());
    }
    let (Some(domain), Some(out)) = (args.domain, args.out) else {
        bail!("mesh needs --check FILE, or --domain and --out");
    };
    let domain = match domain.as_str() {
        "unit_square" => DomainKind::UnitSquare,
        "lshape" => DomainKind::LShape,
        "disk_notch" => DomainKind::DiskNotch,
        other => bail!("unknown domain `{other}` (expected unit_square, lshape or disk_notch)"),
    };
    let refine = args.refine_center.map(|c| RefineSpec {
        center: Point2::new(c[0], c[1]),
        radius: args.refine_radius,
        levels: args.refine_levels,
    });
    let spec = MeshSpec { domain, m: args.m, boundary_points: args.boundary_points, refine, ..MeshSpec::default() };
    let m = commands::cmd_mesh_generate(&spec, &out)?;
    say!("{}\nwrote {}", commands::mesh_summary(&m), out.display());
    Ok(())
}

fn selftest_cmd(quick: bool) -> Result<()> {
    let mut failed = 0;
    for s in selftest::all_studies(quick)? {
        say!("{s}");
        failed += usize::from(!s.passed());
    }
    if failed > 0 {
        bail!("{failed} self-test(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Mesh(a) => mesh(a),
        Command::Selftest { quick } => selftest_cmd(quick),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
