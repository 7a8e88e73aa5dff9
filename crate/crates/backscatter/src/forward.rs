//! Physical-optics far-field model for sound-soft and sound-hard convex
//! polygons.
//!
//! In the high-frequency regime the total field near an illuminated side is
//! the incident plane wave plus its specular reflection, and shadowed sides
//! carry no field. The far-field pattern then reduces to a sum of
//! oscillatory line integrals over the illuminated sides:
//!
//! ```text
//! sound-soft:  u∞(x̂) ≈ γ̃ Σ_front (ν_j·d)  ∫_{C_j} e^{iky·(d−x̂)} ds(y)
//! sound-hard:  u∞(x̂) ≈ γ̃ Σ_front (ν_j·x̂) ∫_{C_j} e^{iky·(d−x̂)} ds(y)
//! ```
//!
//! with γ̃ = −2ikγ and, in 2D, γ = e^{iπ/4}/√(8πk). Each segment integral
//! has the closed form L·e^{ikm·w}·sinc(k(b−a)·w/2) used throughout; a
//! composite trapezoid version of the same integral is kept both as an
//! independent oracle and as the quadrature required by the inversion cost.

use crate::geometry::{classify_faces, Cell, ConvexPolygon, IncidentWave};
use crate::vec2::Vec2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

/// Boundary condition on the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Dirichlet: u = 0 on the boundary.
    SoundSoft,
    /// Neumann: ∂u/∂ν = 0 on the boundary.
    SoundHard,
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::SoundSoft => write!(f, "sound-soft"),
            BoundaryCondition::SoundHard => write!(f, "sound-hard"),
        }
    }
}

/// The dimensional far-field constants γ and γ̃ = −2ikγ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalConstant {
    pub gamma: Complex64,
    pub gamma_tilde: Complex64,
}

impl DimensionalConstant {
    /// 2D branch: γ = e^{iπ/4}/√(8πk).
    pub fn new_2d(k: f64) -> Self {
        let gamma = Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), FRAC_PI_4);
        DimensionalConstant {
            gamma,
            gamma_tilde: Complex64::new(0.0, -2.0 * k) * gamma,
        }
    }

    /// 3D branch of γ, kept for reference only: the far-field evaluation in
    /// this crate is strictly two-dimensional.
    pub const GAMMA_3D: f64 = 1.0 / (4.0 * PI);
}

/// sin(t)/t continuously extended by 1 at 0; series below 1e-4 to avoid
/// cancellation.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Closed form of ∫ over the segment [a, b] of e^{iky·w} ds(y):
/// L·e^{ikm·w}·sinc(k(b−a)·w/2) with m the midpoint and L the length.
pub fn segment_oscillatory_integral(a: Vec2, b: Vec2, k: f64, w: Vec2) -> Complex64 {
    let length = (b - a).norm();
    debug_assert!(length > 0.0, "degenerate segment");
    let mid = (a + b) * 0.5;
    let half_phase = 0.5 * k * (b - a).dot(w);
    Complex64::from_polar(1.0, k * mid.dot(w)) * (length * sinc(half_phase))
}

/// Composite trapezoid evaluation of the same segment integral with
/// `panels` uniform panels. This is the production quadrature of the
/// inversion cost and, with a dense panel count, the independent oracle
/// for the closed form.
pub fn trapezoid_segment_integral(a: Vec2, b: Vec2, k: f64, w: Vec2, panels: usize) -> Complex64 {
    let n = panels.max(1);
    let length = (b - a).norm();
    let step = (b - a) / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let y = a + step * i as f64;
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += Complex64::from_polar(weight, k * y.dot(w));
    }
    sum * (length / n as f64)
}

/// The reflected plane wave of e^{ikx·d} with respect to a cell:
/// e^{ik(x−x₀)·(Πd)}·e^{ikx₀·d}, where Π reflects across the cell's line
/// translated through the origin and x₀ is a point on the cell (its
/// midpoint here). Together with the incident wave it satisfies
/// u − v = 0 and ∂(u + v)/∂ν = 0 on the cell line.
pub fn reflected_plane_wave(cell: &Cell, wave: &IncidentWave, x: Vec2) -> Complex64 {
    let d_reflected = wave.direction().reflect(cell.normal);
    let x0 = cell.midpoint();
    let k = wave.k();
    Complex64::from_polar(1.0, k * (x - x0).dot(d_reflected))
        * Complex64::from_polar(1.0, k * x0.dot(wave.direction()))
}

/// Physical-optics far-field pattern of `poly` at observation direction
/// `x_hat` (unit vector).
pub fn po_far_field(
    poly: &ConvexPolygon,
    wave: &IncidentWave,
    bc: BoundaryCondition,
    x_hat: Vec2,
) -> Complex64 {
    let (front, _) = classify_faces(poly, wave.direction());
    po_far_field_cells(&front, wave, bc, x_hat)
}

/// Same as [`po_far_field`] but over precomputed front cells, so a whole
/// grid can reuse the classification.
pub fn po_far_field_cells(
    front: &[Cell],
    wave: &IncidentWave,
    bc: BoundaryCondition,
    x_hat: Vec2,
) -> Complex64 {
    debug_assert!((x_hat.norm() - 1.0).abs() < 1e-9, "x_hat must be unit");
    let k = wave.k();
    let d = wave.direction();
    let w = d - x_hat;
    let gamma_tilde = DimensionalConstant::new_2d(k).gamma_tilde;
    let mut sum = Complex64::new(0.0, 0.0);
    for cell in front {
        let kernel = match bc {
            BoundaryCondition::SoundSoft => cell.normal.dot(d),
            BoundaryCondition::SoundHard => cell.normal.dot(x_hat),
        };
        sum += segment_oscillatory_integral(cell.a, cell.b, k, w) * kernel;
    }
    gamma_tilde * sum
}

/// Far-field samples at equidistant observation angles θ_i = 2πi/n.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldGrid {
    pub k: f64,
    /// Unit incident direction.
    pub d: Vec2,
    pub bc: BoundaryCondition,
    pub values: Vec<Complex64>,
}

impl FarFieldGrid {
    pub fn n_angles(&self) -> usize {
        self.values.len()
    }

    /// Observation angle of sample `i` in radians.
    pub fn angle(&self, i: usize) -> f64 {
        std::f64::consts::TAU * i as f64 / self.n_angles() as f64
    }

    /// Observation angle of sample `i` in degrees.
    pub fn angle_deg(&self, i: usize) -> f64 {
        360.0 * i as f64 / self.n_angles() as f64
    }

    /// Unit observation direction of sample `i`.
    pub fn x_hat(&self, i: usize) -> Vec2 {
        Vec2::from_angle(self.angle(i))
    }

    /// Grid index whose angle is nearest to the direction `v`.
    pub fn nearest_index(&self, v: Vec2) -> usize {
        let n = self.n_angles() as f64;
        let t = v.angle().rem_euclid(std::f64::consts::TAU);
        (t / std::f64::consts::TAU * n).round() as usize % self.n_angles()
    }

    /// Σ|values|² over the grid.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Evaluates the physical-optics far field on `n_angles` equidistant
/// observation directions. Deterministic: each sample equals a pointwise
/// [`po_far_field`] evaluation.
pub fn po_far_field_grid(
    poly: &ConvexPolygon,
    wave: &IncidentWave,
    bc: BoundaryCondition,
    n_angles: usize,
) -> FarFieldGrid {
    assert!(n_angles >= 8, "need at least 8 observation angles");
    let (front, _) = classify_faces(poly, wave.direction());
    let values = (0..n_angles)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / n_angles as f64;
            po_far_field_cells(&front, wave, bc, Vec2::from_angle(theta))
        })
        .collect();
    FarFieldGrid {
        k: wave.k(),
        d: wave.direction(),
        bc,
        values,
    }
}
