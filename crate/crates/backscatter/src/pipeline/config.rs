//! Scene configuration: a TOML file with nested sections describing the
//! obstacle, the measurements, and every processing knob. All fields carry
//! defaults so a minimal file only names the polygon and the output
//! directory; the README documents the full schema.

use crate::forward::BoundaryCondition;
use crate::geometry::{ConvexPolygon, GeometryError};
use crate::recovery::OptimizerKind;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid polygon in config: {0}")]
    Polygon(#[from] GeometryError),
    #[error("x0 must be a [x, y] point or the string \"centroid\", got {0:?}")]
    BadLocation(String),
    #[error("filter cutoff must be an integer or the string \"auto\", got {0:?}")]
    BadCutoff(String),
    #[error("config needs at least one {0}")]
    EmptyList(&'static str),
}

/// The obstacle and its a-priori scene bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSection {
    /// Polygon vertices, counterclockwise.
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryCondition,
    /// A-priori bound on |y| over the obstacle (from the coordinate
    /// origin); controls the automatic filter cutoff and the distance box.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_boundary() -> BoundaryCondition {
    BoundaryCondition::SoundSoft
}

fn default_radius() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasurementSection {
    /// Wavenumbers to run, one reconstruction per entry.
    pub wavenumbers: Vec<f64>,
    /// Indices j of the detecting directions d_j = (cos(jπ/4), sin(jπ/4)).
    pub incident_indices: Vec<u32>,
    pub n_angles: usize,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        MeasurementSection {
            wavenumbers: vec![6.0 * std::f64::consts::PI],
            incident_indices: vec![2, 4, 6, 8],
            n_angles: 360,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSection {
    /// Noise levels to run, one reconstruction per entry (0 = clean).
    pub deltas: Vec<f64>,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { deltas: vec![0.0], seed: 42 }
    }
}

/// `cutoff = "auto"` resolves to ⌈1.5·k·radius⌉ (clamped to n/2, where the
/// filter is the identity); an integer pins the cutoff directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Fixed(usize),
    Named(String),
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSection {
    pub cutoff: CutoffSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeaksSection {
    /// Half-width of the local-maximum window in grid steps.
    pub window: usize,
    /// Required factor over the aperture's median squared modulus.
    pub prominence: f64,
}

impl Default for PeaksSection {
    fn default() -> Self {
        PeaksSection { window: 5, prominence: 2.0 }
    }
}

/// `x0 = [x, y]` or `x0 = "centroid"` (the true polygon's centroid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocationSpec {
    Point([f64; 2]),
    Named(String),
}

impl Default for LocationSpec {
    fn default() -> Self {
        LocationSpec::Named("centroid".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverySection {
    /// Grouping tolerance for candidate normals, degrees.
    pub angle_tol_deg: f64,
    /// Expected number of sides m; the m strongest normal groups are used.
    pub expected_sides: usize,
    pub x0: LocationSpec,
    pub l_min: f64,
    /// Upper distance bound; 0 means "use scene.radius".
    pub l_max: f64,
    /// Uniform initial distance; 0 means "use scene.radius / 2".
    pub initial_distance: f64,
    pub quadrature_points_per_wavelength: f64,
    pub optimizer: OptimizerKind,
    pub max_evals: usize,
    pub scan_cycles: usize,
}

impl Default for RecoverySection {
    fn default() -> Self {
        RecoverySection {
            angle_tol_deg: 10.0,
            expected_sides: 3,
            x0: LocationSpec::default(),
            l_min: 0.05,
            l_max: 0.0,
            initial_distance: 0.0,
            quadrature_points_per_wavelength: 20.0,
            optimizer: OptimizerKind::TrustRegion,
            max_evals: 4000,
            scan_cycles: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// Everything a pipeline run needs, as parsed from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub scene: SceneSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub peaks: PeaksSection,
    #[serde(default)]
    pub recovery: RecoverySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl SceneConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: SceneConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.truth()?;
        if self.measurement.wavenumbers.is_empty() {
            return Err(ConfigError::EmptyList("wavenumber"));
        }
        if self.measurement.incident_indices.is_empty() {
            return Err(ConfigError::EmptyList("incident direction"));
        }
        if self.noise.deltas.is_empty() {
            return Err(ConfigError::EmptyList("noise level"));
        }
        self.x0()?;
        self.cutoff_for(1.0, self.measurement.n_angles)?;
        Ok(())
    }

    /// The true obstacle described by the config.
    pub fn truth(&self) -> Result<ConvexPolygon, ConfigError> {
        Ok(ConvexPolygon::new(
            self.scene.vertices.iter().map(|&v| Vec2::from(v)).collect(),
        )?)
    }

    /// Resolved location point.
    pub fn x0(&self) -> Result<Vec2, ConfigError> {
        match &self.recovery.x0 {
            LocationSpec::Point(p) => Ok(Vec2::from(*p)),
            LocationSpec::Named(s) if s == "centroid" => Ok(self.truth()?.centroid()),
            LocationSpec::Named(s) => Err(ConfigError::BadLocation(s.clone())),
        }
    }

    /// Resolved filter cutoff for wavenumber `k`.
    pub fn cutoff_for(&self, k: f64, n_angles: usize) -> Result<usize, ConfigError> {
        let half = n_angles / 2;
        match &self.filter.cutoff {
            CutoffSpec::Fixed(c) => Ok((*c).min(half)),
            CutoffSpec::Named(s) if s == "auto" => {
                Ok(((1.5 * k * self.scene.radius).ceil() as usize).min(half))
            }
            CutoffSpec::Named(s) => Err(ConfigError::BadCutoff(s.clone())),
        }
    }

    pub fn l_max(&self) -> f64 {
        if self.recovery.l_max > 0.0 { self.recovery.l_max } else { self.scene.radius }
    }

    pub fn initial_distance(&self) -> f64 {
        if self.recovery.initial_distance > 0.0 {
            self.recovery.initial_distance
        } else {
            self.scene.radius / 2.0
        }
    }

    /// Trapezoid step λ/points-per-wavelength for wavenumber `k`.
    pub fn quadrature_step(&self, k: f64) -> f64 {
        std::f64::consts::TAU / k / self.recovery.quadrature_points_per_wavelength
    }
}
