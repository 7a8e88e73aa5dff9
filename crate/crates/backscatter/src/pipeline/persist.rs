//! Record persistence: a run directory of diffable text artifacts.
//!
//! Layout per record:
//!
//! ```text
//! <out>/
//!   config.toml            resolved configuration
//!   summary.txt            one line per (k, δ) run
//!   hashes.txt             sha256 of every stage input
//!   runs/k<i>_delta<j>/
//!     d<octant>_clean.csv      angle_deg,re,im  (+ # metadata header)
//!     d<octant>_noisy.csv
//!     d<octant>_filtered.csv
//!     d<octant>_peaks.toml
//!     pairs.toml
//!     normals.toml
//!     inversion.toml
//!     result.toml | failure.toml
//!     metrics.toml
//!     polar_d<octant>.svg
//!     overlay.svg
//! ```
//!
//! Floats are written with the shortest round-trip representation, so
//! reloading a CSV reproduces the exact f64 bits and replaying a persisted
//! intermediate through the downstream stages is bit-identical.

use super::{RunOutcome, RunRecord, SingleRun};
use crate::forward::{BoundaryCondition, FarFieldGrid};
use crate::geometry::ConvexPolygon;
use crate::plot::{overlay_svg, polar_svg, PlotSpec};
use crate::recovery::{CriticalPair, EffectiveNormalSet};
use crate::signal::{Peak, PeakSet};
use crate::vec2::Vec2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("record is missing the {stage} artifact: {path}")]
    MissingStage { stage: String, path: String },
    #[error("cannot parse {path}: {reason}")]
    Parse { path: String, reason: String },
}

fn io_err(path: &Path, source: std::io::Error) -> PersistError {
    PersistError::Io { path: path.display().to_string(), source }
}

// ---------------------------------------------------------------------------
// CSV grids

/// Serializes a far-field grid as CSV with a metadata comment header.
pub fn grid_to_csv(grid: &FarFieldGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# k = {}", grid.k);
    let _ = writeln!(out, "# d = {} {}", grid.d.x, grid.d.y);
    let _ = writeln!(out, "# bc = {}", grid.bc);
    out.push_str("angle_deg,re,im\n");
    for (i, v) in grid.values.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", grid.angle_deg(i), v.re, v.im);
    }
    out
}

/// Parses [`grid_to_csv`] output back into a grid, bit-exact.
pub fn grid_from_csv(text: &str, path: &str) -> Result<FarFieldGrid, PersistError> {
    let parse_err = |reason: &str| PersistError::Parse {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    let mut k = None;
    let mut d = None;
    let mut bc = None;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line == "angle_deg,re,im" {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let mut parts = meta.splitn(2, '=');
            let key = parts.next().unwrap_or("").trim();
            let value = parts.next().unwrap_or("").trim();
            match key {
                "k" => k = value.parse::<f64>().ok(),
                "d" => {
                    let mut it = value.split_whitespace();
                    let x = it.next().and_then(|s| s.parse::<f64>().ok());
                    let y = it.next().and_then(|s| s.parse::<f64>().ok());
                    if let (Some(x), Some(y)) = (x, y) {
                        d = Some(Vec2::new(x, y));
                    }
                }
                "bc" => {
                    bc = match value {
                        "sound-soft" => Some(BoundaryCondition::SoundSoft),
                        "sound-hard" => Some(BoundaryCondition::SoundHard),
                        _ => None,
                    }
                }
                _ => {}
            }
            continue;
        }
        let mut cols = line.split(',');
        let _angle = cols.next();
        let re: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad re column"))?;
        let im: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad im column"))?;
        values.push(Complex64::new(re, im));
    }
    Ok(FarFieldGrid {
        k: k.ok_or_else(|| parse_err("missing # k header"))?,
        d: d.ok_or_else(|| parse_err("missing # d header"))?,
        bc: bc.ok_or_else(|| parse_err("missing # bc header"))?,
        values,
    })
}

// ---------------------------------------------------------------------------
// TOML documents

#[derive(Debug, Serialize, Deserialize)]
pub struct PeaksDoc {
    pub incident: [f64; 2],
    pub window: usize,
    pub prominence: f64,
    pub peaks: Vec<Peak>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PairsDoc {
    pub pairs: Vec<CriticalPair>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NormalsDoc {
    pub clusters_found: usize,
    pub effective: EffectiveNormalSet,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectedDoc {
    pub cell_index: usize,
    pub incident_index: usize,
    pub peak_index: usize,
    pub x_hat: [f64; 2],
    pub magnitude2: f64,
    pub data_re: f64,
    pub data_im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InversionDoc {
    pub x0: [f64; 2],
    pub k: f64,
    pub bc: BoundaryCondition,
    pub quadrature_step: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub selected: Vec<SelectedDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResultDoc {
    pub distances: Vec<f64>,
    pub vertices: Vec<[f64; 2]>,
    pub final_cost: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub final_step: f64,
    pub converged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FailureDoc {
    pub stage: String,
    pub reason: String,
}

fn toml_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    toml::to_string_pretty(value)
        .expect("record documents serialize")
        .into_bytes()
}

// ---------------------------------------------------------------------------
// Rendering a record into artifacts

fn run_artifacts(record: &RunRecord, run: &SingleRun) -> Vec<(String, Vec<u8>)> {
    let base = format!("runs/{}", run.name());
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for dir in &run.directions {
        let prefix = format!("{base}/d{}", dir.octant);
        files.push((format!("{prefix}_clean.csv"), grid_to_csv(&dir.clean).into_bytes()));
        files.push((format!("{prefix}_noisy.csv"), grid_to_csv(&dir.noisy).into_bytes()));
        files.push((
            format!("{prefix}_filtered.csv"),
            grid_to_csv(&dir.filtered).into_bytes(),
        ));
        files.push((
            format!("{prefix}_peaks.toml"),
            toml_bytes(&PeaksDoc {
                incident: dir.d.into(),
                window: record.config.peaks.window,
                prominence: record.config.peaks.prominence,
                peaks: dir.peaks.peaks.clone(),
            }),
        ));
        // Polar plot annotated with this direction's peaks and normals.
        let normals: Vec<Vec2> = run
            .pairs
            .iter()
            .filter(|p| p.incident_index == dir.incident_index)
            .map(|p| p.normal)
            .collect();
        files.push((
            format!("{base}/polar_d{}.svg", dir.octant),
            polar_svg(&dir.filtered, &dir.peaks.peaks, &normals, &PlotSpec::polar()).into_bytes(),
        ));
    }
    files.push((format!("{base}/pairs.toml"), toml_bytes(&PairsDoc { pairs: run.pairs.clone() })));
    files.push((
        format!("{base}/normals.toml"),
        toml_bytes(&NormalsDoc {
            clusters_found: run.clusters_found,
            effective: run.effective.clone(),
        }),
    ));
    match &run.outcome {
        RunOutcome::Reconstructed { result, metrics } => {
            // The assembled inverse problem, for replay.
            if let Ok(problem) = super::assemble_problem(
                &record.config,
                record.x0,
                run.k,
                &run.directions,
                &run.effective,
            ) {
                let selected = problem
                    .selected
                    .iter()
                    .map(|s| SelectedDoc {
                        cell_index: s.cell_index,
                        incident_index: s.pair.incident_index,
                        peak_index: s.pair.peak_index,
                        x_hat: s.pair.x_hat.into(),
                        magnitude2: s.pair.magnitude2,
                        data_re: s.data.re,
                        data_im: s.data.im,
                    })
                    .collect();
                files.push((
                    format!("{base}/inversion.toml"),
                    toml_bytes(&InversionDoc {
                        x0: record.x0.into(),
                        k: problem.k,
                        bc: problem.bc,
                        quadrature_step: problem.quadrature_step,
                        l_min: problem.l_min,
                        l_max: problem.l_max,
                        selected,
                    }),
                ));
            }
            files.push((
                format!("{base}/result.toml"),
                toml_bytes(&ResultDoc {
                    distances: result.distances.clone(),
                    vertices: result.polygon.vertices().iter().map(|&v| v.into()).collect(),
                    final_cost: result.final_cost,
                    evaluations: result.evaluations,
                    iterations: result.iterations,
                    final_step: result.final_step,
                    converged: result.converged,
                }),
            ));
            files.push((format!("{base}/metrics.toml"), toml_bytes(metrics)));
            files.push((
                format!("{base}/overlay.svg"),
                overlay_svg(
                    Some(&record.truth),
                    Some(&result.polygon),
                    Some(record.x0),
                    &PlotSpec::overlay(),
                )
                .into_bytes(),
            ));
        }
        RunOutcome::Failed { stage, reason } => {
            files.push((
                format!("{base}/failure.toml"),
                toml_bytes(&FailureDoc { stage: stage.clone(), reason: reason.clone() }),
            ));
            files.push((
                format!("{base}/overlay.svg"),
                overlay_svg(Some(&record.truth), None, Some(record.x0), &PlotSpec::overlay())
                    .into_bytes(),
            ));
        }
    }
    files
}

fn summary_text(record: &RunRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>12} {:>12} {:>14} {:>10} {:>8}",
        "run", "hausdorff", "rel_diam", "max_norm_err", "cost", "evals");
    for run in &record.runs {
        match &run.outcome {
            RunOutcome::Reconstructed { result, metrics } => {
                let _ = writeln!(
                    out,
                    "{:<14} {:>12.6} {:>11.2}% {:>13.4}° {:>10.3e} {:>8}",
                    run.name(),
                    metrics.hausdorff,
                    100.0 * metrics.hausdorff_rel_diameter,
                    metrics.max_normal_error_deg(),
                    result.final_cost,
                    result.evaluations,
                );
            }
            RunOutcome::Failed { stage, reason } => {
                let _ = writeln!(out, "{:<14} FAILED at {stage}: {reason}", run.name());
            }
        }
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// Renders the whole record as (relative path, bytes) pairs, sorted by
/// path. Pure: rendering the same record twice yields identical bytes.
pub fn render_record(record: &RunRecord) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let config_bytes = toml_bytes(&record.config);
    files.push(("config.toml".into(), config_bytes.clone()));
    for run in &record.runs {
        files.extend(run_artifacts(record, run));
    }
    files.push(("summary.txt".into(), summary_text(record).into_bytes()));
    files.sort_by(|a, b| a.0.cmp(&b.0));

    // Stage-input hashes: each stage is keyed by the artifact it consumes.
    let lookup = |name: &str| -> Option<&[u8]> {
        files
            .iter()
            .find(|(p, _)| p == name)
            .map(|(_, b)| b.as_slice())
    };
    let mut hashes = String::new();
    for run in &record.runs {
        let base = format!("runs/{}", run.name());
        let _ = writeln!(
            hashes,
            "{} forward-input sha256 {}",
            run.name(),
            sha256_hex(&config_bytes)
        );
        for dir in &run.directions {
            for (stage, suffix) in [
                ("noise-input", "clean"),
                ("filter-input", "noisy"),
                ("peaks-input", "filtered"),
            ] {
                let path = format!("{base}/d{}_{suffix}.csv", dir.octant);
                if let Some(bytes) = lookup(&path) {
                    let _ = writeln!(
                        hashes,
                        "{} d{} {stage} sha256 {}",
                        run.name(),
                        dir.octant,
                        sha256_hex(bytes)
                    );
                }
            }
        }
        if let Some(bytes) = lookup(&format!("{base}/inversion.toml")) {
            let _ = writeln!(
                hashes,
                "{} inversion-input sha256 {}",
                run.name(),
                sha256_hex(bytes)
            );
        }
    }
    files.push(("hashes.txt".into(), hashes.into_bytes()));
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

/// Writes the rendered record under `dir`, creating directories as needed.
pub fn persist_record(record: &RunRecord, dir: &Path) -> Result<(), PersistError> {
    for (rel, bytes) in render_record(record) {
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Loading pieces of a persisted record

fn read_to_string(path: &Path, stage: &str) -> Result<String, PersistError> {
    if !path.exists() {
        return Err(PersistError::MissingStage {
            stage: stage.to_string(),
            path: path.display().to_string(),
        });
    }
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T, PersistError> {
    toml::from_str(text).map_err(|e| PersistError::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Sorted names of the run subdirectories of a record.
pub fn list_runs(record_dir: &Path) -> Result<Vec<String>, PersistError> {
    let runs_dir = record_dir.join("runs");
    if !runs_dir.exists() {
        return Err(PersistError::MissingStage {
            stage: "runs directory".into(),
            path: runs_dir.display().to_string(),
        });
    }
    let mut names: Vec<String> = std::fs::read_dir(&runs_dir)
        .map_err(|e| io_err(&runs_dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    Ok(names)
}

/// Loads a persisted grid of one direction within a run.
pub fn load_grid(
    record_dir: &Path,
    run: &str,
    octant: u32,
    stage: &str,
) -> Result<FarFieldGrid, PersistError> {
    let path = record_dir.join(format!("runs/{run}/d{octant}_{stage}.csv"));
    let text = read_to_string(&path, &format!("{stage} grid d{octant} ({run})"))?;
    grid_from_csv(&text, &path.display().to_string())
}

/// Loads the persisted peaks of one direction within a run.
pub fn load_peaks(record_dir: &Path, run: &str, octant: u32) -> Result<PeaksDoc, PersistError> {
    let path = record_dir.join(format!("runs/{run}/d{octant}_peaks.toml"));
    let text = read_to_string(&path, &format!("peaks d{octant} ({run})"))?;
    parse_toml(&text, &path)
}

/// Loads the reconstruction result of a run.
pub fn load_result(record_dir: &Path, run: &str) -> Result<ResultDoc, PersistError> {
    let path = record_dir.join(format!("runs/{run}/result.toml"));
    let text = read_to_string(&path, &format!("reconstruction result ({run})"))?;
    parse_toml(&text, &path)
}

/// Loads the effective-normal record of a run.
pub fn load_normals(record_dir: &Path, run: &str) -> Result<NormalsDoc, PersistError> {
    let path = record_dir.join(format!("runs/{run}/normals.toml"));
    let text = read_to_string(&path, &format!("effective normals ({run})"))?;
    parse_toml(&text, &path)
}

/// Rebuilds a polygon from a persisted result document.
pub fn polygon_from_result(doc: &ResultDoc) -> Result<ConvexPolygon, PersistError> {
    ConvexPolygon::new(doc.vertices.iter().map(|&v| Vec2::from(v)).collect()).map_err(|e| {
        PersistError::Parse {
            path: "result.toml".into(),
            reason: e.to_string(),
        }
    })
}

/// Reconstructs a [`PeakSet`]-shaped view from a peaks document (the
/// aperture index list is not persisted; only the peaks are).
pub fn peaks_from_doc(doc: &PeaksDoc) -> PeakSet {
    PeakSet {
        incident: Vec2::from(doc.incident),
        peaks: doc.peaks.clone(),
        aperture: Vec::new(),
    }
}
