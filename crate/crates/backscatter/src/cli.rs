//! Implementation of the `run`, `plot` and `oracle` subcommands.
//!
//! The binary in `main.rs` only parses arguments and forwards here; every
//! command returns data or a [`CliError`] whose `code()` yields the
//! machine-parsable error identifier printed on stderr.

use crate::forward::FarFieldGrid;
use crate::geometry::ConvexPolygon;
use crate::oracle;
use crate::pipeline::persist::{
    self, load_grid, load_normals, load_peaks, load_result, PersistError,
};
use crate::pipeline::{self, PipelineError, RunOutcome, SceneConfig};
use crate::plot::{overlay_svg, polar_svg, PlotKind, PlotSpec};
use crate::recovery::normal_from_critical;
use crate::vec2::Vec2;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable overriding the output directory of `run`.
pub const OUT_DIR_ENV: &str = "BACKSCATTER_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Persist(#[from] PersistError),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid argument {flag}: {reason}")]
    BadArgument { flag: &'static str, reason: String },
    #[error("invalid polygon file {path}: {reason}")]
    BadPolygonFile { path: String, reason: String },
    #[error("run finished with {failed} failed stage(s); see the record summary")]
    StageFailure { failed: usize },
}

impl CliError {
    /// Stable machine-parsable error code.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Pipeline(PipelineError::Config(_)) => "config-parse",
            CliError::Pipeline(_) => "pipeline",
            CliError::Persist(PersistError::MissingStage { .. }) => "missing-stage",
            CliError::Persist(_) => "record-io",
            CliError::Io { .. } => "io",
            CliError::BadArgument { .. } => "usage",
            CliError::BadPolygonFile { .. } => "polygon-file",
            CliError::StageFailure { .. } => "stage-failure",
        }
    }
}

/// Output of a successful `run`: where the record went and the printed
/// summary.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: String,
    pub failed_stages: usize,
}

/// Runs a scene config end to end and persists the record.
///
/// Output directory precedence: `--out` flag, then the `BACKSCATTER_OUT`
/// environment variable, then the config's `[output] dir`.
pub fn cmd_run(
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<PathBuf>,
) -> Result<RunReport, CliError> {
    let mut config =
        SceneConfig::from_path(config_path).map_err(PipelineError::Config)?;
    if let Some(seed) = seed_override {
        config.noise.seed = seed;
    }
    let out_dir = out_override
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    config.output.dir = out_dir.display().to_string();

    let record = pipeline::run_pipeline(&config)?;
    persist::persist_record(&record, &out_dir)?;

    let mut summary = String::new();
    summary.push_str(&format!("record written to {}\n", out_dir.display()));
    let summary_path = out_dir.join("summary.txt");
    let table = std::fs::read_to_string(&summary_path).map_err(|source| CliError::Io {
        path: summary_path.display().to_string(),
        source,
    })?;
    summary.push_str(&table);
    let failed_stages = record
        .runs
        .iter()
        .filter(|r| matches!(r.outcome, RunOutcome::Failed { .. }))
        .count();
    Ok(RunReport { out_dir, summary, failed_stages })
}

/// Re-renders plots from a persisted record into `<record>/plots/`.
pub fn cmd_plot(
    record_dir: &Path,
    kind: PlotKind,
    no_normals: bool,
    size: u32,
) -> Result<Vec<PathBuf>, CliError> {
    let config_path = record_dir.join("config.toml");
    if !config_path.exists() {
        return Err(PersistError::MissingStage {
            stage: "config".into(),
            path: config_path.display().to_string(),
        }
        .into());
    }
    let config = SceneConfig::from_path(&config_path).map_err(PipelineError::Config)?;
    let truth = config.truth().map_err(PipelineError::Config)?;
    let x0 = config.x0().map_err(PipelineError::Config)?;
    let plots_dir = record_dir.join("plots");
    std::fs::create_dir_all(&plots_dir).map_err(|source| CliError::Io {
        path: plots_dir.display().to_string(),
        source,
    })?;

    let mut written = Vec::new();
    for run in persist::list_runs(record_dir)? {
        match kind {
            PlotKind::PolarSquaredModulus => {
                let spec = PlotSpec {
                    show_normals: !no_normals,
                    size,
                    ..PlotSpec::polar()
                };
                for &octant in &config.measurement.incident_indices {
                    let grid: FarFieldGrid = load_grid(record_dir, &run, octant, "filtered")?;
                    let peaks = load_peaks(record_dir, &run, octant)?;
                    let normals: Vec<Vec2> = peaks
                        .peaks
                        .iter()
                        .filter_map(|p| normal_from_critical(grid.d, grid.x_hat(p.index)).ok())
                        .collect();
                    let svg = polar_svg(&grid, &peaks.peaks, &normals, &spec);
                    let path = plots_dir.join(format!("{run}_polar_d{octant}.svg"));
                    std::fs::write(&path, svg).map_err(|source| CliError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    written.push(path);
                }
            }
            PlotKind::ReconstructionOverlay => {
                let spec = PlotSpec { size, ..PlotSpec::overlay() };
                let result = load_result(record_dir, &run)?;
                let polygon = persist::polygon_from_result(&result)?;
                let svg = overlay_svg(Some(&truth), Some(&polygon), Some(x0), &spec);
                let path = plots_dir.join(format!("{run}_overlay.svg"));
                std::fs::write(&path, svg).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn parse_vec2(flag: &'static str, text: &str) -> Result<Vec2, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::BadArgument {
            flag,
            reason: format!("expected x,y but got {text:?}"),
        });
    }
    let x: f64 = parts[0].trim().parse().map_err(|e| CliError::BadArgument {
        flag,
        reason: format!("{e}"),
    })?;
    let y: f64 = parts[1].trim().parse().map_err(|e| CliError::BadArgument {
        flag,
        reason: format!("{e}"),
    })?;
    Ok(Vec2::new(x, y))
}

/// Reads a polygon file: one `x y` pair per line; `#` starts a comment.
pub fn read_polygon_file(path: &Path) -> Result<ConvexPolygon, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut vertices = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let x = it.next().and_then(|s| s.parse::<f64>().ok());
        let y = it.next().and_then(|s| s.parse::<f64>().ok());
        match (x, y) {
            (Some(x), Some(y)) => vertices.push(Vec2::new(x, y)),
            _ => {
                return Err(CliError::BadPolygonFile {
                    path: path.display().to_string(),
                    reason: format!("line {}: expected `x y`", ln + 1),
                })
            }
        }
    }
    ConvexPolygon::new(vertices).map_err(|e| CliError::BadPolygonFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// The `oracle` subcommands: reference values at full precision.
pub enum OracleRequest<'a> {
    SegInt { a: &'a str, b: &'a str, k: f64, w: &'a str, panels: usize },
    Reflect { d: &'a str, nu: &'a str },
    Hausdorff { poly_a: &'a Path, poly_b: &'a Path, samples_per_edge: usize },
}

pub fn cmd_oracle(request: OracleRequest<'_>) -> Result<String, CliError> {
    match request {
        OracleRequest::SegInt { a, b, k, w, panels } => {
            let a = parse_vec2("--a", a)?;
            let b = parse_vec2("--b", b)?;
            let w = parse_vec2("--w", w)?;
            let v = oracle::dense_segment_integral(a, b, k, w, panels);
            Ok(format!("{:.17e} {:+.17e}i", v.re, v.im))
        }
        OracleRequest::Reflect { d, nu } => {
            let d = parse_vec2("--d", d)?;
            let nu = parse_vec2("--nu", nu)?.normalized().ok_or(CliError::BadArgument {
                flag: "--nu",
                reason: "normal must be nonzero".into(),
            })?;
            let r = oracle::householder_reflect(d, nu);
            Ok(format!("{:.17e} {:.17e}", r.x, r.y))
        }
        OracleRequest::Hausdorff { poly_a, poly_b, samples_per_edge } => {
            let a = read_polygon_file(poly_a)?;
            let b = read_polygon_file(poly_b)?;
            Ok(format!("{:.17e}", oracle::dense_hausdorff(&a, &b, samples_per_edge)))
        }
    }
}

/// Sanity cross-check used by tests: the normals persisted in a record are
/// consistent with its own peak documents.
pub fn record_normal_angles(record_dir: &Path, run: &str) -> Result<Vec<f64>, CliError> {
    let normals = load_normals(record_dir, run)?;
    Ok(normals
        .effective
        .normals
        .iter()
        .map(|e| e.normal.angle().to_degrees())
        .collect())
}
