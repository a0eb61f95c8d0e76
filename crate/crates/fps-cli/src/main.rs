//! Batch front door for the screw workbench.
//!
//! Subcommands: generate | simulate | sweep | calibrate | validate |
//! plot. Exit codes: 0 success, 2 config error, 3 solver error,
//! 4 data error.

mod config;

use clap::{Parser, Subcommand};
use config::RunConfig;
use fps::geometry::{
    build_profile, generate_surface_mesh, section_properties, transform_for_build,
    write_stl_file,
};
use fps::material::MaterialModel;
use fps::solver::{calibrate_kappa, sweep};
use fps::validation::{
    average_runs, compute_metrics, curve_to_csv, emit_overlay_svg, load_curve_file,
    render_report, resample, zero_offset, FDCurve,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fps", about = "Flexible screw design and verification workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the screw STL and a per-station section-property CSV.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Build-plate angle in degrees; omitted leaves the model frame.
        #[arg(long)]
        orient: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Circumferential resolution (segments per turn).
        #[arg(long, default_value_t = 64)]
        segments: usize,
        /// Axial subdivisions of the shaft.
        #[arg(long, default_value_t = 256)]
        axial: usize,
    },
    /// Run the displacement protocol for a single material.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the four-material sweep and write one curve CSV per
    /// material plus the overlay SVG.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the flexure knock-down factor and print it.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare predicted curves against experimental runs and render
    /// the metrics table.
    Validate {
        /// Predicted curve CSVs (label taken from the file stem).
        #[arg(long = "fe", required = true, num_args = 1..)]
        fe: Vec<PathBuf>,
        /// Experimental run CSVs; runs are zeroed and averaged.
        #[arg(long = "exp", required = true, num_args = 1..)]
        exp: Vec<PathBuf>,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay curve CSVs into an SVG plot.
    Plot {
        #[arg(long = "curve", required = true, num_args = 1..)]
        curves: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CmdError {
    Config(String),
    Solver(String),
    Data(String),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Solver(_) => 3,
            CmdError::Data(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Solver(m) | CmdError::Data(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CmdError> {
    match command {
        Command::Generate {
            config,
            orient,
            out,
            segments,
            axial,
        } => cmd_generate(&config, orient, out.as_deref(), segments, axial),
        Command::Simulate { config, out } => cmd_simulate(&config, out.as_deref()),
        Command::Sweep { config, out } => cmd_sweep(&config, out.as_deref()),
        Command::Calibrate { config } => cmd_calibrate(&config),
        Command::Validate { fe, exp, out } => cmd_validate(&fe, &exp, out.as_deref()),
        Command::Plot { curves, out } => cmd_plot(&curves, &out),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CmdError> {
    RunConfig::load(path).map_err(CmdError::Config)
}

/// Resolves the flexure knock-down factor: either given directly or
/// calibrated against the configured force target using the first
/// configured material.
fn resolve_kappa(config: &RunConfig) -> Result<f64, CmdError> {
    if let Some(k) = config.solver.kappa_f {
        if !(k > 0.0 && k <= 1.0) {
            return Err(CmdError::Config(format!("kappa_f = {k} outside (0, 1]")));
        }
        return Ok(k);
    }
    let target = config.solver.calibration.as_ref().ok_or_else(|| {
        CmdError::Config("solver must set kappa_f or a calibration target".into())
    })?;
    let materials = config.materials().map_err(CmdError::Config)?;
    let reference = materials
        .first()
        .ok_or_else(|| CmdError::Config("no material configured".into()))?;
    calibrate_kappa(&config.screw, reference, target.delta_mm, target.force_n)
        .map_err(|e| CmdError::Solver(e.to_string()))
}

fn ensure_dir(dir: &Path) -> Result<(), CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_generate(
    config_path: &Path,
    orient: Option<f64>,
    out: Option<&Path>,
    segments: usize,
    axial: usize,
) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    let dir = config.output_dir(out);
    ensure_dir(&dir)?;

    let mesh = generate_surface_mesh(&config.screw, segments, axial)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let mesh = match orient {
        Some(angle) => transform_for_build(&mesh, angle),
        None => mesh,
    };
    let stl_path = dir.join("screw.stl");
    write_stl_file(&mesh, &stl_path).map_err(|e| CmdError::Data(e.to_string()))?;

    let profile = build_profile(&config.screw).map_err(|e| CmdError::Config(e.to_string()))?;
    let mut csv = String::from("z_mm,outer_d_mm,inner_d_mm,region,area_mm2,second_moment_mm4\n");
    for s in &profile.stations {
        let (area, second_moment) =
            section_properties(s.outer_d, s.inner_d).map_err(|e| CmdError::Config(e.to_string()))?;
        writeln!(
            csv,
            "{:.6},{:.6},{:.6},{},{:.6},{:.6}",
            s.z, s.outer_d, s.inner_d, s.region, area, second_moment
        )
        .unwrap();
    }
    let csv_path = dir.join("sections.csv");
    std::fs::write(&csv_path, csv)
        .map_err(|e| CmdError::Data(format!("cannot write {}: {e}", csv_path.display())))?;

    let volume = mesh
        .volume()
        .map_err(|e| CmdError::Data(e.to_string()))?;
    println!(
        "generate: wrote {} ({} triangles, volume {:.1} mm^3) and {}",
        stl_path.display(),
        mesh.triangles.len(),
        volume,
        csv_path.display()
    );
    Ok(())
}

fn curve_file_name(m: &MaterialModel) -> String {
    format!("{}.csv", m.label().replace('/', "_"))
}

fn write_curves(
    dir: &Path,
    results: &[(MaterialModel, FDCurve)],
) -> Result<Vec<PathBuf>, CmdError> {
    let mut paths = Vec::new();
    for (m, curve) in results {
        let path = dir.join(curve_file_name(m));
        std::fs::write(&path, curve_to_csv(curve))
            .map_err(|e| CmdError::Data(format!("cannot write {}: {e}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}

fn cmd_simulate(config_path: &Path, out: Option<&Path>) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    let materials = config.materials().map_err(CmdError::Config)?;
    if config.is_sweep() {
        return Err(CmdError::Config(
            "simulate expects an inline material; use the sweep command for \"paper-sweep\"".into(),
        ));
    }
    let kappa = resolve_kappa(&config)?;
    let dir = config.output_dir(out);
    ensure_dir(&dir)?;
    let results = sweep(
        &config.screw,
        &materials,
        kappa,
        config.solver.n_elements,
        &config.solver_settings(),
    )
    .map_err(|e| CmdError::Solver(e.to_string()))?;
    let paths = write_curves(&dir, &results)?;
    println!(
        "simulate: kappa_f = {:.6e}, wrote {}",
        kappa,
        paths[0].display()
    );
    Ok(())
}

fn cmd_sweep(config_path: &Path, out: Option<&Path>) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    if !config.is_sweep() {
        return Err(CmdError::Config(
            "sweep requires material = \"paper-sweep\"".into(),
        ));
    }
    let materials = config.materials().map_err(CmdError::Config)?;
    let kappa = resolve_kappa(&config)?;
    let dir = config.output_dir(out);
    ensure_dir(&dir)?;
    let results = sweep(
        &config.screw,
        &materials,
        kappa,
        config.solver.n_elements,
        &config.solver_settings(),
    )
    .map_err(|e| CmdError::Solver(e.to_string()))?;
    let paths = write_curves(&dir, &results)?;
    let curves: Vec<FDCurve> = results.iter().map(|(_, c)| c.clone()).collect();
    let svg_path = dir.join("overlay.svg");
    let svg = emit_overlay_svg(&curves).map_err(|e| CmdError::Data(e.to_string()))?;
    std::fs::write(&svg_path, svg)
        .map_err(|e| CmdError::Data(format!("cannot write {}: {e}", svg_path.display())))?;
    println!(
        "sweep: kappa_f = {:.6e}, wrote {} curve files and {}",
        kappa,
        paths.len(),
        svg_path.display()
    );
    Ok(())
}

fn cmd_calibrate(config_path: &Path) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    if config.solver.calibration.is_none() {
        return Err(CmdError::Config(
            "calibrate requires a solver.calibration target".into(),
        ));
    }
    let kappa = resolve_kappa(&config)?;
    println!("kappa_f = {kappa:.6e}");
    Ok(())
}

fn cmd_validate(fe: &[PathBuf], exp: &[PathBuf], out: Option<&Path>) -> Result<(), CmdError> {
    let data_err = |e: fps::validation::ValidationError| CmdError::Data(e.to_string());
    let fe_curves: Vec<FDCurve> = fe
        .iter()
        .map(|p| load_curve_file(p).map_err(data_err))
        .collect::<Result<_, _>>()?;
    let runs: Vec<FDCurve> = exp
        .iter()
        .map(|p| load_curve_file(p).map(|c| zero_offset(&c)).map_err(data_err))
        .collect::<Result<_, _>>()?;
    let averaged = average_runs(&runs).map_err(data_err)?;

    let mut reports = Vec::new();
    for curve in &fe_curves {
        // Common grid: the predicted curve's displacements that fall
        // inside the experimental range.
        let (exp_lo, exp_hi) = (
            averaged.samples[0].0,
            averaged.samples.last().unwrap().0,
        );
        let grid: Vec<f64> = curve
            .displacements()
            .into_iter()
            .filter(|&d| d >= exp_lo && d <= exp_hi)
            .collect();
        let fe_on_grid = resample(curve, &grid).map_err(data_err)?;
        let exp_on_grid = resample(&averaged, &grid).map_err(data_err)?;
        reports.push(compute_metrics(&fe_on_grid, &exp_on_grid).map_err(data_err)?);
    }
    let table = render_report(&reports).map_err(data_err)?;
    match out {
        Some(path) => {
            std::fs::write(path, &table)
                .map_err(|e| CmdError::Data(format!("cannot write {}: {e}", path.display())))?;
            println!("validate: wrote {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn cmd_plot(curve_paths: &[PathBuf], out: &Path) -> Result<(), CmdError> {
    let data_err = |e: fps::validation::ValidationError| CmdError::Data(e.to_string());
    let curves: Vec<FDCurve> = curve_paths
        .iter()
        .map(|p| load_curve_file(p).map_err(data_err))
        .collect::<Result<_, _>>()?;
    let svg = emit_overlay_svg(&curves).map_err(data_err)?;
    std::fs::write(out, svg)
        .map_err(|e| CmdError::Data(format!("cannot write {}: {e}", out.display())))?;
    println!("plot: wrote {}", out.display());
    Ok(())
}
