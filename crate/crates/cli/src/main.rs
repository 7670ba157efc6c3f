//! Command-line driver: matrix functions, coincidence landscapes, output
//! distributions, rate matrices, mesh composition, dip fitting and network
//! reconstruction.
//!
//! Exit codes: 0 success, 2 input error, 3 insufficient data, 4 numeric
//! failure. Every command validates its inputs fully before creating any
//! output file, and identical inputs with the same seed produce
//! byte-identical outputs.

use clap::{Parser, Subcommand};
use multiphoton_cli::formats::{self, read_mesh, read_scan, read_unitary, read_visibilities, RunConfig, UnitaryFile};
use multiphoton_cli::CliError;
use multiphoton::interference::{
    basis_vector, landscape, output_distribution, quadratic_form, rate_matrix, submatrix,
    DelayMap, GridSpec, PortSelection,
};
use multiphoton::matfunc::{determinant, immanant, permanent, ComplexMatrix};
use multiphoton::mesh::mesh_to_unitary;
use multiphoton::reconstruct::{
    fit_dip, optimize_mesh, OptimizeOptions, ReconstructionProblem,
};
use multiphoton::symgroup::Partition;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "multiphoton", version, about = "Multi-photon interference toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a matrix function of a complex matrix file.
    Matfun {
        /// Unitary/matrix JSON file.
        #[arg(long)]
        matrix: PathBuf,
        /// One of per, det, imm.
        #[arg(long)]
        function: String,
        /// Partition for imm, e.g. "2,1".
        #[arg(long)]
        partition: Option<String>,
        /// Optional input port selection, e.g. "1,2,4" (defaults to all).
        #[arg(long)]
        inputs: Option<String>,
        /// Optional output port selection (defaults to all).
        #[arg(long)]
        outputs: Option<String>,
    },
    /// Evaluate a three-photon coincidence landscape.
    Landscape {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the config's delta_points instead of a grid.
        #[arg(long)]
        points: bool,
        /// Grid size WxH, overriding the config.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Normalized collision-free output distribution with per/imm/det split.
    Distribution {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rate-matrix summary (block structure and symmetry fractions).
    Ratematrix {
        #[arg(long)]
        config: PathBuf,
        /// Write the full matrix as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose a mesh file into its unitary.
    Mesh {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a dip model to a two-photon delay scan.
    Fitdip {
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover mesh parameters from visibilities (or raw scans).
    Reconstruct {
        /// Visibility CSV (i,j,k,l,visibility,sigma).
        #[arg(long)]
        visibilities: Option<PathBuf>,
        /// Directory of scan CSVs to fit first.
        #[arg(long)]
        scans: Option<PathBuf>,
        /// Mesh template with the free topology and starting values.
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn parse_mode_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::input(format!("{p:?} is not a mode index")))
        })
        .collect()
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Matfun { matrix, function, partition, inputs, outputs } => {
            cmd_matfun(&matrix, &function, partition.as_deref(), inputs.as_deref(), outputs.as_deref())
        }
        Command::Landscape { config, out, points, grid, seed } => {
            cmd_landscape(&config, out.as_deref(), points, grid.as_deref(), seed)
        }
        Command::Distribution { config, out, seed } => cmd_distribution(&config, out.as_deref(), seed),
        Command::Ratematrix { config, out } => cmd_ratematrix(&config, out.as_deref()),
        Command::Mesh { mesh, out } => cmd_mesh(&mesh, &out),
        Command::Fitdip { scan, out } => cmd_fitdip(&scan, out.as_deref()),
        Command::Reconstruct { visibilities, scans, template, out, seed, starts } => {
            cmd_reconstruct(visibilities.as_deref(), scans.as_deref(), &template, &out, seed, starts)
        }
    }
}

fn select(u: &ComplexMatrix, inputs: Option<&str>, outputs: Option<&str>) -> Result<ComplexMatrix, CliError> {
    match (inputs, outputs) {
        (None, None) => Ok(u.clone()),
        (Some(i), Some(o)) => {
            let sel = PortSelection::new(u.n_rows(), parse_mode_list(i)?, parse_mode_list(o)?)?;
            Ok(submatrix(u, &sel)?)
        }
        _ => Err(CliError::input("--inputs and --outputs must be given together".into())),
    }
}

fn cmd_matfun(
    matrix: &Path,
    function: &str,
    partition: Option<&str>,
    inputs: Option<&str>,
    outputs: Option<&str>,
) -> Result<(), CliError> {
    let full = read_unitary(matrix)?;
    let m = select(&full, inputs, outputs)?;
    let value = match function {
        "per" => permanent(&m)?,
        "det" => determinant(&m)?,
        "imm" => {
            let parts = partition
                .ok_or_else(|| CliError::input("imm needs --partition, e.g. 2,1".into()))?;
            let parts: Vec<usize> = parse_mode_list(parts)?;
            let lambda = Partition::new(parts)?;
            immanant(&lambda, &m)?
        }
        other => {
            return Err(CliError::input(format!(
                "unknown function {other:?}; expected per, det or imm"
            )))
        }
    };
    println!("{} = {:.11e} {} {:.11e}i", function, value.re, if value.im < 0.0 { "-" } else { "+" }, value.im.abs());
    Ok(())
}

fn delay_map_from(config: &RunConfig, n: usize) -> Result<DelayMap, CliError> {
    match &config.delay_map {
        Some(coeffs) => {
            if coeffs.len() != n {
                return Err(CliError::input(format!(
                    "delay_map covers {} photons but the config lists {n}",
                    coeffs.len()
                )));
            }
            DelayMap::new(coeffs.clone()).map_err(CliError::from)
        }
        None => Ok(DelayMap::standard(n)),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 2 {
        return Err(CliError::input(format!("grid must look like 81x81, got {s:?}")));
    }
    let w = parts[0].parse().map_err(|_| CliError::input(format!("bad grid width {s:?}")))?;
    let h = parts[1].parse().map_err(|_| CliError::input(format!("bad grid height {s:?}")))?;
    Ok((w, h))
}

fn format_probability_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut text = String::from("dtau1_fs,dtau2_fs,probability\n");
    for (a, b, p) in rows {
        text.push_str(&format!("{a:.12e},{b:.12e},{p:.12e}\n"));
    }
    text
}

fn cmd_landscape(
    config_path: &Path,
    out: Option<&Path>,
    points: bool,
    grid_arg: Option<&str>,
    _seed: Option<u64>,
) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let dir = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let photons = config.photons()?;
    if photons.len() != 3 {
        return Err(CliError::input(format!(
            "landscapes need exactly 3 photons, the config lists {}",
            photons.len()
        )));
    }
    let u = config.network(&dir)?;
    let sel = PortSelection::new(u.n_rows(), config.inputs.clone(), config.outputs.clone())?;
    let map = delay_map_from(&config, photons.len())?;
    let rows: Vec<(f64, f64, f64)>;
    if points {
        if config.delta_points.is_empty() {
            return Err(CliError::input("--points mode needs delta_points in the config".into()));
        }
        let t = submatrix(&u, &sel)?;
        let v = basis_vector(&t)?;
        let mut acc = Vec::new();
        println!("point    dtau1_fs    dtau2_fs   probability      %    F_per   F_det   F_imm");
        for (k, &[dt1, dt2]) in config.delta_points.iter().enumerate() {
            let shifted = map.shift(&photons, dt1, dt2)?;
            let r = rate_matrix(&shifted)?;
            let p = quadratic_form(&r, &v)?;
            let (f_per, f_det, f_imm) = r.fractions();
            println!(
                "P{:<4} {:>11.2} {:>11.2}   {:.9}  {:>6.2}  {:.4}  {:.4}  {:.4}",
                k + 1,
                dt1,
                dt2,
                p,
                100.0 * p,
                f_per,
                f_det,
                f_imm
            );
            acc.push((dt1, dt2, p));
        }
        rows = acc;
    } else {
        let mut grid = match config.grid {
            Some(g) => GridSpec {
                width: g.width,
                height: g.height,
                dt1_min: g.dt1_min,
                dt1_max: g.dt1_max,
                dt2_min: g.dt2_min,
                dt2_max: g.dt2_max,
            },
            None => GridSpec::default(),
        };
        if let Some(s) = grid_arg {
            let (w, h) = parse_grid(s)?;
            grid.width = w;
            grid.height = h;
        }
        let land = landscape(&u, &sel, &photons, &grid, &map)?;
        let f_per_max = land.points.iter().map(|p| p.f_per).fold(0.0, f64::max);
        let p_max = land.points.iter().map(|p| p.probability).fold(0.0, f64::max);
        println!(
            "landscape: {} points, max probability {:.6}, max F_per {:.4}",
            land.points.len(),
            p_max,
            f_per_max
        );
        rows = land.points.iter().map(|p| (p.dt1, p.dt2, p.probability)).collect();
    }
    if let Some(path) = out {
        std::fs::write(path, format_probability_csv(&rows))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_distribution(config_path: &Path, out: Option<&Path>, _seed: Option<u64>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let dir = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let photons = config.photons()?;
    let u = config.network(&dir)?;
    let deltas = if config.deltas.is_empty() {
        vec![0.0; photons.len() - 1]
    } else {
        config.deltas.clone()
    };
    let map = delay_map_from(&config, photons.len())?;
    let shifted = if deltas.len() == 2 {
        map.shift(&photons, deltas[0], deltas[1])?
    } else {
        multiphoton::interference::apply_deltas(&photons, &deltas)?
    };
    let dist = output_distribution(&u, &config.inputs, &shifted, &vec![0.0; photons.len() - 1])?;
    let mut text = String::from("output_ports,p_total,p_per,p_imm,p_det\n");
    println!("ports    p_total%   p_per%   p_imm%   p_det%");
    for e in &dist.elements {
        let label: String = e.outputs.iter().map(|p| p.to_string()).collect();
        println!(
            "{label:<8} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            100.0 * e.p_total,
            100.0 * e.p_per,
            100.0 * e.p_imm,
            100.0 * e.p_det
        );
        text.push_str(&format!(
            "{label},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            e.p_total, e.p_per, e.p_imm, e.p_det
        ));
    }
    if let Some(path) = out {
        std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RateMatrixFile {
    n: usize,
    blocks: Vec<(String, usize, usize)>,
    entries: Vec<[f64; 2]>,
}

fn cmd_ratematrix(config_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let photons = config.photons()?;
    let deltas = if config.deltas.is_empty() {
        vec![0.0; photons.len() - 1]
    } else {
        config.deltas.clone()
    };
    let shifted = multiphoton::interference::apply_deltas(&photons, &deltas)?;
    let r = rate_matrix(&shifted)?;
    let (f_per, f_det, f_imm) = r.fractions();
    println!("n = {} photons, {}x{} rate matrix", photons.len(), r.matrix().n_rows(), r.matrix().n_rows());
    print!("blocks:");
    for b in r.blocks() {
        print!(" {}:{}", b.partition, b.size);
    }
    println!();
    println!("F_per = {f_per:.6}");
    println!("F_det = {f_det:.6}");
    println!("F_imm = {f_imm:.6}");
    if let Some(path) = out {
        let size = r.matrix().n_rows();
        let file = RateMatrixFile {
            n: photons.len(),
            blocks: r
                .blocks()
                .iter()
                .map(|b| (b.partition.to_string(), b.offset, b.size))
                .collect(),
            entries: (0..size * size)
                .map(|k| {
                    let z = r.matrix().get(k / size, k % size);
                    [z.re, z.im]
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_mesh(mesh_path: &Path, out: &Path) -> Result<(), CliError> {
    let mesh = read_mesh(mesh_path)?;
    let u = mesh_to_unitary(&mesh)?;
    formats::write_unitary(out, &u)?;
    let (bs, ps) = mesh.element_counts();
    println!(
        "{} modes, {bs} beam splitters, {ps} phase shifters -> {}",
        mesh.m,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct DipFitFile {
    y0: f64,
    amplitude: f64,
    t_c_fs: f64,
    drift_slope: f64,
    visibility: f64,
    std_errors: [f64; 4],
    chi2_red: f64,
}

fn cmd_fitdip(scan_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let scan = read_scan(scan_path)?;
    let fit = fit_dip(&scan)?;
    println!(
        "y0 = {:.6}  amplitude = {:.6}  t_c = {:.3} fs  drift = {:.3e}",
        fit.y0, fit.amplitude, fit.t_c, fit.drift_slope
    );
    println!("visibility = {:.6} (chi2_red {:.3})", fit.visibility, fit.chi2_red);
    if let Some(path) = out {
        let file = DipFitFile {
            y0: fit.y0,
            amplitude: fit.amplitude,
            t_c_fs: fit.t_c,
            drift_slope: fit.drift_slope,
            visibility: fit.visibility,
            std_errors: fit.std_errors,
            chi2_red: fit.chi2_red,
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
        std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReportFile {
    v_opt: f64,
    start_index: usize,
    parameters: Vec<f64>,
    residuals: Vec<f64>,
    mesh: multiphoton::mesh::InterferometerMesh,
    unitary: UnitaryFile,
}

fn cmd_reconstruct(
    visibilities: Option<&Path>,
    scans: Option<&Path>,
    template_path: &Path,
    out: &Path,
    seed: u64,
    starts: usize,
) -> Result<(), CliError> {
    let template = read_mesh(template_path)?;
    let data = match (visibilities, scans) {
        (Some(path), None) => read_visibilities(path)?,
        (None, Some(dir)) => {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| CliError::input(format!("cannot list {}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            entries.sort();
            if entries.is_empty() {
                return Err(CliError::input(format!("{} holds no scan CSVs", dir.display())));
            }
            let mut data = Vec::new();
            for path in entries {
                let scan = read_scan(&path)?;
                let fit = fit_dip(&scan)?;
                let sigma_v = ((fit.std_errors[1] / fit.y0).powi(2)
                    + (fit.amplitude * fit.std_errors[0] / (fit.y0 * fit.y0)).powi(2))
                .sqrt()
                .max(1e-6);
                data.push(multiphoton::reconstruct::VisibilityDatum {
                    input_pair: scan.input_pair,
                    output_pair: scan.output_pair,
                    visibility: fit.visibility,
                    sigma: sigma_v,
                });
            }
            data
        }
        _ => {
            return Err(CliError::input(
                "reconstruct needs exactly one of --visibilities or --scans".into(),
            ))
        }
    };
    let problem = ReconstructionProblem::new(template, data)?;
    let options = OptimizeOptions { starts, seed, ..Default::default() };
    let fit = optimize_mesh(&problem, &options)?;
    println!(
        "V_opt = {:.6e} from start {} ({} visibilities, {} parameters)",
        fit.v_opt,
        fit.start_index,
        problem.visibilities.len(),
        problem.template.elements.len()
    );
    let parameters = fit
        .mesh
        .elements
        .iter()
        .map(|e| match *e {
            multiphoton::mesh::MeshElement::BeamSplitter { beta, .. } => beta,
            multiphoton::mesh::MeshElement::PhaseShifter { alpha, .. } => alpha,
        })
        .collect();
    let report = FitReportFile {
        v_opt: fit.v_opt,
        start_index: fit.start_index,
        parameters,
        residuals: fit.residuals.clone(),
        mesh: fit.mesh.clone(),
        unitary: UnitaryFile::from_matrix(&fit.unitary),
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
    std::fs::write(out, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", out.display())))?;
    Ok(())
}
