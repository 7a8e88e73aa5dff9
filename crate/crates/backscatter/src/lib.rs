//! Recovery of convex polygonal obstacles from a few high-frequency
//! acoustic far-field measurements.
//!
//! The crate implements a two-stage scheme in 2D:
//!
//! 1. **Normals.** The modulus of the backscattered far-field pattern of a
//!    convex polygon peaks at the specular direction of each illuminated
//!    side. Detecting those peaks over a few incident plane waves and
//!    inverting the reflection relation x̂ = d − 2(d·ν)ν yields the exterior
//!    unit normal of every side.
//! 2. **Distances.** With the normals fixed, the polygon is parameterized by
//!    the distance of each side from a location point x₀. Those distances
//!    are recovered by derivative-free least squares that match complex
//!    far-field values at the selected peak directions against a
//!    physical-optics model of the corresponding side.
//!
//! The forward data is produced by the same physical-optics model
//! (closed-form oscillatory segment integrals, with an independent dense
//! trapezoid oracle in [`oracle`]), optionally perturbed by uniform noise
//! and smoothed by Fourier low-pass filtering.
//!
//! Entry points: [`pipeline::run_pipeline`] runs a whole scene described by
//! a [`pipeline::SceneConfig`]; the `backscatter` binary wraps it with
//! `run`, `plot` and `oracle` subcommands; the `examples/` directory holds
//! one runnable example per capability.

pub mod cli;
pub mod forward;
pub mod geometry;
pub mod optim;
pub mod oracle;
pub mod pipeline;
pub mod plot;
pub mod recovery;
pub mod signal;
pub mod vec2;

pub use forward::{BoundaryCondition, DimensionalConstant, FarFieldGrid};
pub use geometry::{AdmissibilityReport, AdmissibilityThresholds, Cell, ConvexPolygon, IncidentWave};
pub use recovery::{CriticalPair, EffectiveNormalSet, InversionProblem, ReconstructionResult};
pub use signal::{NoiseSpec, PeakSet};
pub use vec2::Vec2;
