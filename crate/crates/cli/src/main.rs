//! `hww`: meshing, simulation, spectral certification and invariant checks.
//!
//! Exit codes: 0 success, 2 bad input or guard, 3 invariant violated,
//! 4 numerical breakdown.

mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hww_core::assembly::{Fault, OperatorPencil};
use hww_core::checks::{run_checks, CheckSettings};
use hww_core::diagnostics::{
    decoupled_eig_reference, recover_interface_flux, solid_dirichlet_ground_state,
};
use hww_core::geometry::{FsiMesh, MAX_REFINEMENT};
use hww_core::hspace::{write_snapshot, EnergySpace};
use hww_core::spectral::{compute_spectrum, parse_betas, resolvent_scan};
use hww_core::stepper::simulate_theta;
use hww_core::{build_default_geometry, load_mesh, save_mesh, Error, Region, State};

use config::{ConfigError, Geometry, RunConfig};

#[derive(Parser)]
#[command(
    name = "hww",
    version,
    about = "Heat / thin-wave / thick-wave interface solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or validate) a mesh and print its summary.
    Mesh {
        /// Validate this mesh file instead of building the default geometry.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Backward Euler / θ-scheme run with an energy ledger.
    Simulate {
        #[arg(long)]
        svg: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Dense spectrum and resolvent-norm scan along the imaginary axis.
    Spectrum {
        #[arg(long)]
        svg: bool,
        /// Also write M.coo and K.coo.
        #[arg(long)]
        export_matrices: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the invariant battery.
    Check {
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solid eigenvalue convergence and spectral-abscissa trend.
    Convergence {
        /// Highest refinement level of the eigenvalue ladder.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Highest refinement level of the abscissa trend.
        #[arg(long, default_value_t = 2)]
        spectrum_levels: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Overrides; each maps onto a config key and wins over `--config`.
#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `default` or a mesh file.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    refinement: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// `default`, a comma list, and/or `log:<lo>:<hi>:<per decade>` items.
    #[arg(long)]
    betas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `random` (unit energy) or `zero`.
    #[arg(long)]
    initial: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        let overrides = [
            ("geometry", &self.geometry),
            ("refinement", &self.refinement),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("theta", &self.theta),
            ("lambda", &self.lambda),
            ("betas", &self.betas),
            ("seed", &self.seed),
            ("initial", &self.initial),
            ("out", &self.out),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invariant(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invariant(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Consistency { .. } => Failure::Invariant(msg),
            Error::Numeric { .. } | Error::Factorization { .. } => Failure::Numeric(msg),
            _ => Failure::Usage(msg),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::Usage(format!("writing {}: {e}", path.display())))
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| Failure::Usage(format!("creating {}: {e}", cfg.out.display())))?;
    write(&cfg.out, "resolved.config", &cfg.resolved())?;
    Ok(cfg.out.clone())
}

fn read_mesh(path: &Path) -> Result<FsiMesh<f64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
    Ok(load_mesh(&text)?)
}

/// The default geometry at the configured level, or a mesh file. A file is
/// used as given unless `refinement` was set explicitly.
fn build_mesh(cfg: &RunConfig) -> Result<FsiMesh<f64>, Failure> {
    match &cfg.geometry {
        Geometry::Default => Ok(build_default_geometry(cfg.refinement)?),
        Geometry::File(path) => {
            let mut mesh = read_mesh(path)?;
            if !cfg.defaulted.contains(&"refinement") {
                if cfg.refinement > MAX_REFINEMENT {
                    return Err(Failure::Usage(format!(
                        "refinement {} out of range (<= {MAX_REFINEMENT})",
                        cfg.refinement
                    )));
                }
                for _ in 0..cfg.refinement {
                    mesh = mesh.refine()?;
                }
            }
            Ok(mesh)
        }
    }
}

fn build_pencil(cfg: &RunConfig, fault: Option<Fault>) -> Result<OperatorPencil<f64>, Failure> {
    let mesh = build_mesh(cfg)?;
    Ok(OperatorPencil::with_fault(EnergySpace::new(mesh), fault)?)
}

fn mesh_summary(mesh: &FsiMesh<f64>) -> String {
    let fluid = mesh.triangles_in(Region::Fluid).count();
    let solid = mesh.triangles_in(Region::Solid).count();
    let graph = mesh.interface();
    let dofs = hww_core::DofMap::new(mesh).sizes();
    format!(
        "nodes {}, triangles {} (fluid {fluid}, solid {solid}), interface edges {}, junctions {}, h = {:.6}\n\
         dofs {} (u_interior {}, gamma {}, w0 {}, w1_interior {})",
        mesh.num_nodes(),
        mesh.triangles().len(),
        graph.edges().len(),
        graph.junctions().len(),
        mesh.mesh_size(),
        dofs.total(),
        dofs.u_interior,
        dofs.gamma,
        dofs.w0_all,
        dofs.w1_interior,
    )
}

fn cmd_mesh(input: Option<PathBuf>, run: &RunArgs) -> Result<(), Failure> {
    let cfg = run.resolve()?;
    if let Some(path) = input {
        let mesh = read_mesh(&path)?;
        println!("valid mesh {}", path.display());
        println!("{}", mesh_summary(&mesh));
        return Ok(());
    }
    let mesh = build_mesh(&cfg)?;
    let out = prepare_out(&cfg)?;
    write(&out, "mesh.txt", &save_mesh(&mesh))?;
    println!("{}", mesh_summary(&mesh));
    Ok(())
}

fn initial_state(cfg: &RunConfig, space: &EnergySpace<f64>) -> Result<State, Failure> {
    if cfg.initial == "zero" {
        return Ok(space.zero_state());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(space.random_unit_energy(&mut rng))
}

fn cmd_simulate(svg_out: bool, run: &RunArgs) -> Result<(), Failure> {
    let cfg = run.resolve()?;
    let pencil = build_pencil(&cfg, None)?;
    let x0 = initial_state(&cfg, pencil.space())?;
    let (trace, last) = simulate_theta(&pencil, &x0, cfg.dt, cfg.t_end, cfg.theta)?;
    let out = prepare_out(&cfg)?;
    write(&out, "trace.csv", &trace.to_csv())?;
    write(&out, "final_state.txt", &write_snapshot(&last))?;
    let flux = recover_interface_flux(&last, &pencil)?;
    write(&out, "flux.csv", &flux.to_csv())?;
    if svg_out {
        let energy: Vec<f64> = trace
            .total_energy
            .iter()
            .map(|e| e.max(1e-300).log10())
            .collect();
        write(
            &out,
            "trace.svg",
            &svg::line_plot(&trace.times, &energy, "energy", "t", "log10 E"),
        )?;
    }
    let e0 = trace.total_energy[0];
    let e1 = *trace
        .total_energy
        .last()
        .expect("trace has the initial row");
    println!(
        "steps {}, E(0) = {e0:.6e}, E(T) = {e1:.6e}, ratio = {:.6e}",
        trace.len() - 1,
        if e0 > 0.0 { e1 / e0 } else { 0.0 }
    );
    println!("flux residual dual norm = {:.6e}", flux.residual_dual_norm);
    if let Some(v) = trace.first_violation(1e-9) {
        return Err(Failure::Invariant(format!(
            "energy ledger violated at step {}: {}",
            v.step, v.detail
        )));
    }
    Ok(())
}

fn cmd_spectrum(svg_out: bool, export: bool, run: &RunArgs) -> Result<(), Failure> {
    let cfg = run.resolve()?;
    let betas = parse_betas(&cfg.betas).map_err(Failure::Usage)?;
    let pencil = build_pencil(&cfg, None)?;
    let mut report = compute_spectrum(&pencil)?;
    report.refinement_level = match cfg.geometry {
        Geometry::Default => Some(cfg.refinement),
        Geometry::File(_) => None,
    };
    report.resolvent_scan = resolvent_scan(&pencil, &betas)?;
    let out = prepare_out(&cfg)?;
    write(&out, "spectrum.csv", &report.spectrum_csv())?;
    write(&out, "scan.csv", &report.scan_csv())?;
    if export {
        for (name, m) in [("M.coo", pencil.m()), ("K.coo", pencil.k())] {
            let mut buf = Vec::new();
            m.write_coordinate(&mut buf)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            write(&out, name, &String::from_utf8_lossy(&buf))?;
        }
    }
    if svg_out {
        let pts: Vec<(f64, f64)> = report.eigenvalues.iter().map(|z| (z.re, z.im)).collect();
        write(
            &out,
            "spectrum.svg",
            &svg::scatter(&pts, "spectrum", "Re", "Im"),
        )?;
    }
    let sigma = report
        .resolvent_scan
        .iter()
        .min_by(|a, b| a.sigma_min.total_cmp(&b.sigma_min))
        .expect("beta grid is non-empty");
    println!(
        "dim {}, spectral abscissa {:.6e}, min |lambda| {:.6e}, axis distance {:.6e}",
        pencil.dim(),
        report.spectral_abscissa,
        report.min_modulus,
        report.axis_distance
    );
    println!(
        "min sigma_min(i beta M - K) = {:.6e} at beta = {:.6e} over {} points",
        sigma.sigma_min,
        sigma.beta,
        betas.len()
    );
    if !report.is_stable() {
        return Err(Failure::Invariant(format!(
            "spectrum not in the open left half-plane (abscissa {:e}, min modulus {:e})",
            report.spectral_abscissa, report.min_modulus
        )));
    }
    Ok(())
}

fn cmd_check(fault: Option<Fault>, run: &RunArgs) -> Result<(), Failure> {
    let cfg = run.resolve()?;
    if !cfg.defaulted.is_empty() {
        println!("note: defaults used for {}", cfg.defaulted.join(", "));
    }
    let pencil = build_pencil(&cfg, fault)?;
    let settings = CheckSettings {
        seed: cfg.seed,
        dt: cfg.dt,
        ..CheckSettings::default()
    };
    let outcomes = run_checks(&pencil, &settings);
    let mut report = String::new();
    for o in &outcomes {
        println!("{o}");
        report.push_str(&format!("{o}\n"));
    }
    let out = prepare_out(&cfg)?;
    write(&out, "check.txt", &report)?;
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_convergence(levels: usize, spectrum_levels: usize, run: &RunArgs) -> Result<(), Failure> {
    let cfg = run.resolve()?;
    let exact = decoupled_eig_reference(Region::Solid, 1)?[0];
    let mut csv = String::from("refinement,h,mu,error,ratio\n");
    let mut prev: Option<f64> = None;
    for level in 0..=levels {
        let mesh = build_default_geometry::<f64>(level)?;
        let h = mesh.mesh_size();
        let mu = solid_dirichlet_ground_state(&EnergySpace::new(mesh))?;
        let err = (mu - exact).abs();
        let ratio = prev.map(|p| p / err);
        let ratio_s = ratio.map(|r| format!("{r:.17e}")).unwrap_or_default();
        csv.push_str(&format!(
            "{level},{h:.17e},{mu:.17e},{err:.17e},{ratio_s}\n"
        ));
        println!(
            "level {level}: mu = {mu:.10}, error = {err:.4e}{}",
            ratio.map(|r| format!(", ratio {r:.3}")).unwrap_or_default()
        );
        prev = Some(err);
    }
    let mut abscissa = String::from("refinement,dim,spectral_abscissa,min_modulus\n");
    let mut magnitudes = Vec::new();
    for level in 0..=spectrum_levels {
        let pencil = OperatorPencil::new(EnergySpace::new(build_default_geometry::<f64>(level)?))?;
        let r = compute_spectrum(&pencil)?;
        abscissa.push_str(&format!(
            "{level},{},{:.17e},{:.17e}\n",
            pencil.dim(),
            r.spectral_abscissa,
            r.min_modulus
        ));
        println!(
            "level {level}: spectral abscissa {:.6e}",
            r.spectral_abscissa
        );
        magnitudes.push(r.spectral_abscissa.abs());
    }
    let monotone = magnitudes.windows(2).all(|w| w[1] <= w[0]);
    println!("|abscissa| nonincreasing with refinement: {monotone}");
    let out = prepare_out(&cfg)?;
    write(&out, "convergence.csv", &csv)?;
    write(&out, "abscissa.csv", &abscissa)?;
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("HWW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Usage(format!(
            "HWW_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Mesh { input, run } => cmd_mesh(input, &run),
        Command::Simulate { svg, run } => cmd_simulate(svg, &run),
        Command::Spectrum {
            svg,
            export_matrices,
            run,
        } => cmd_spectrum(svg, export_matrices, &run),
        Command::Check { inject_fault, run } => cmd_check(inject_fault, &run),
        Command::Convergence {
            levels,
            spectrum_levels,
            run,
        } => cmd_convergence(levels, spectrum_levels, &run),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
