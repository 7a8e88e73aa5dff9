//! Convex polygon obstacles: cells (sides), outward normals, front/back
//! classification, admissibility checks, and reconstruction from
//! half-plane data (normals plus distances from a location point).

use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for convexity/degeneracy predicates.
const CROSS_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex coordinates must be finite")]
    NonFiniteVertex,
    #[error("repeated or coincident vertices at index {0}")]
    RepeatedVertex(usize),
    #[error("degenerate polygon: vertices around index {0} are collinear or reflex")]
    Degenerate(usize),
    #[error("reconstruction needs at least 3 half-planes, got {0}")]
    TooFewHalfPlanes(usize),
    #[error("normals must be sorted counterclockwise by angle (violated at index {0})")]
    NormalsNotSorted(usize),
    #[error("consecutive normals {0} and {1} are parallel: singular intersection")]
    ParallelNormals(usize, usize),
    #[error("inconsistent distances: reconstructed polygon is non-convex or inverted at vertex {0}")]
    InconsistentDistances(usize),
    #[error("distances must be strictly positive (index {0})")]
    NonPositiveDistance(usize),
    #[error("location point is not strictly inside the reconstructed polygon")]
    LocationOutside,
}

/// A strictly convex polygon with counterclockwise vertices.
///
/// Clockwise input is accepted and silently reordered (a warning is
/// logged); collinear triples and repeated vertices are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        let m = vertices.len();
        if m < 3 {
            return Err(GeometryError::TooFewVertices(m));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteVertex);
        }
        let scale = vertices
            .iter()
            .map(|v| v.norm())
            .fold(1.0f64, f64::max);
        for i in 0..m {
            if vertices[i].dist(vertices[(i + 1) % m]) <= CROSS_EPS * scale {
                return Err(GeometryError::RepeatedVertex(i));
            }
        }
        // Signed area decides orientation; clockwise input is reversed.
        let area2: f64 = (0..m)
            .map(|i| vertices[i].cross(vertices[(i + 1) % m]))
            .sum();
        if area2 < 0.0 {
            log::warn!("clockwise vertex order: reversing to counterclockwise");
            vertices.reverse();
        }
        for i in 0..m {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            let c = vertices[(i + 2) % m];
            let e1 = b - a;
            let e2 = c - b;
            if e1.cross(e2) <= CROSS_EPS * e1.norm() * e2.norm() {
                return Err(GeometryError::Degenerate((i + 1) % m));
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Number of sides.
    pub fn side_count(&self) -> usize {
        self.vertices.len()
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Vec2 {
        let m = self.vertices.len();
        let mut area2 = 0.0;
        let mut c = Vec2::ZERO;
        for i in 0..m {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % m];
            let w = a.cross(b);
            area2 += w;
            c = c + (a + b) * w;
        }
        c / (3.0 * area2)
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                d = d.max(self.vertices[i].dist(self.vertices[j]));
            }
        }
        d
    }

    /// True if `p` is strictly inside the polygon.
    pub fn contains_strict(&self, p: Vec2) -> bool {
        let m = self.vertices.len();
        (0..m).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % m];
            (b - a).cross(p - a) > 0.0
        })
    }

    /// Signed distance of `x0` to each side's line, in cell order.
    ///
    /// For an interior `x0` every distance is positive; these are the l_j of
    /// the half-plane parameterization ⟨x − x₀, ν_j⟩ = l_j.
    pub fn distances_from(&self, x0: Vec2) -> Vec<f64> {
        cells(self)
            .into_iter()
            .map(|c| (c.a - x0).dot(c.normal))
            .collect()
    }
}

/// One open side of a polygon with its outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Start point (counterclockwise order).
    pub a: Vec2,
    /// End point.
    pub b: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    /// Side length |b − a|.
    pub length: f64,
    /// Index of the side within the polygon.
    pub index: usize,
}

impl Cell {
    pub fn midpoint(&self) -> Vec2 {
        (self.a + self.b) * 0.5
    }

    /// Unit tangent from `a` to `b`.
    pub fn tangent(&self) -> Vec2 {
        (self.b - self.a) / self.length
    }
}

/// The sides of `poly` in counterclockwise order with outward unit normals.
pub fn cells(poly: &ConvexPolygon) -> Vec<Cell> {
    let vs = poly.vertices();
    let m = vs.len();
    (0..m)
        .map(|i| {
            let a = vs[i];
            let b = vs[(i + 1) % m];
            let e = b - a;
            let length = e.norm();
            Cell {
                a,
                b,
                // rot90_cw sends a counterclockwise edge direction outward
                normal: e.rot90_cw() / length,
                length,
                index: i,
            }
        })
        .collect()
}

/// Splits the sides into front (ν·d < 0, illuminated) and back (ν·d ≥ 0)
/// with respect to the incident direction `d`. Grazing sides (ν·d = 0)
/// belong to the back face.
pub fn classify_faces(poly: &ConvexPolygon, d: Vec2) -> (Vec<Cell>, Vec<Cell>) {
    cells(poly).into_iter().partition(|c| c.normal.dot(d) < 0.0)
}

/// Thresholds for the admissibility conditions.
///
/// `k_diam_min` quantifies the high-frequency requirement k·diam ≫ 1; the
/// sources leave the bound unspecified, so 10 is a project default and all
/// four values are configurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityThresholds {
    pub k_diam_min: f64,
    /// Minimum side length h₀.
    pub min_cell_len: f64,
    /// Minimum angle h₁ between distinct normals (radians).
    pub normal_angle_min: f64,
    /// Maximum angle h₂ between distinct normals (radians).
    pub normal_angle_max: f64,
}

impl Default for AdmissibilityThresholds {
    fn default() -> Self {
        AdmissibilityThresholds {
            k_diam_min: 10.0,
            min_cell_len: 0.1,
            normal_angle_min: 10f64.to_radians(),
            normal_angle_max: 175f64.to_radians(),
        }
    }
}

/// Outcome of the admissibility check of a polygon at wavenumber k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub k_diam: f64,
    pub min_cell_len: f64,
    /// Smallest angle between distinct outward normals (radians).
    pub min_angle: f64,
    /// Largest angle between distinct outward normals (radians).
    pub max_angle: f64,
    pub pass: bool,
    pub thresholds: AdmissibilityThresholds,
}

/// Evaluates the admissibility conditions: k·diam large, no short side,
/// and normal angles neither too small nor too close to π.
pub fn check_admissibility(
    poly: &ConvexPolygon,
    k: f64,
    thresholds: &AdmissibilityThresholds,
) -> AdmissibilityReport {
    let cs = cells(poly);
    let k_diam = k * poly.diameter();
    let min_cell_len = cs.iter().map(|c| c.length).fold(f64::INFINITY, f64::min);
    let mut min_angle = f64::INFINITY;
    let mut max_angle = 0.0f64;
    for i in 0..cs.len() {
        for j in (i + 1)..cs.len() {
            let ang = cs[i].normal.angle_between(cs[j].normal);
            min_angle = min_angle.min(ang);
            max_angle = max_angle.max(ang);
        }
    }
    let pass = k_diam >= thresholds.k_diam_min
        && min_cell_len >= thresholds.min_cell_len
        && min_angle >= thresholds.normal_angle_min
        && max_angle <= thresholds.normal_angle_max;
    AdmissibilityReport {
        k_diam,
        min_cell_len,
        min_angle,
        max_angle,
        pass,
        thresholds: *thresholds,
    }
}

/// Intersection points of consecutive half-plane boundary lines
/// ⟨x − x₀, ν_j⟩ = l_j, without polygon validation.
///
/// Vertex j is the crossing of lines j and j+1 (wrapping), so side j runs
/// from vertex j−1 to vertex j. On failure returns the offending index.
pub(crate) fn halfplane_vertices(
    x0: Vec2,
    normals: &[Vec2],
    distances: &[f64],
) -> Result<Vec<Vec2>, GeometryError> {
    let m = normals.len();
    assert_eq!(m, distances.len(), "normals/distances length mismatch");
    if m < 3 {
        return Err(GeometryError::TooFewHalfPlanes(m));
    }
    for (j, &l) in distances.iter().enumerate() {
        if !(l > 0.0) {
            return Err(GeometryError::NonPositiveDistance(j));
        }
    }
    let mut vertices = Vec::with_capacity(m);
    for j in 0..m {
        let jn = (j + 1) % m;
        let (n1, n2) = (normals[j], normals[jn]);
        let det = n1.cross(n2);
        if det.abs() < 1e-12 {
            return Err(GeometryError::ParallelNormals(j, jn));
        }
        // Solve n1·v = l_j, n2·v = l_{j+1} for v = K_j − x₀ by Cramer's rule.
        let (l1, l2) = (distances[j], distances[jn]);
        let v = Vec2::new(l1 * n2.y - l2 * n1.y, n1.x * l2 - n2.x * l1) / det;
        vertices.push(x0 + v);
    }
    Ok(vertices)
}

/// Rebuilds the convex polygon with side j on the line ⟨x − x₀, ν_j⟩ = l_j.
///
/// The normals must be unit vectors sorted counterclockwise by angle and
/// the distances strictly positive. Inconsistent distances that produce a
/// non-convex or inverted vertex chain are rejected with the offending
/// vertex index, as is a result that does not strictly contain `x0`.
pub fn reconstruct_from_halfplanes(
    x0: Vec2,
    normals: &[Vec2],
    distances: &[f64],
) -> Result<ConvexPolygon, GeometryError> {
    let m = normals.len();
    if m < 3 {
        return Err(GeometryError::TooFewHalfPlanes(m));
    }
    // Counterclockwise order: every consecutive pair turns left, except at
    // most one wrap-around pair where the angle restarts past 2π.
    let turns_right: Vec<usize> = (0..m)
        .filter(|&j| normals[j].cross(normals[(j + 1) % m]) <= 0.0)
        .collect();
    if turns_right.len() > 1 {
        return Err(GeometryError::NormalsNotSorted(turns_right[1]));
    }
    let vertices = halfplane_vertices(x0, normals, distances)?;
    for j in 0..m {
        let a = vertices[j];
        let b = vertices[(j + 1) % m];
        let c = vertices[(j + 2) % m];
        if (b - a).cross(c - b) <= 0.0 {
            return Err(GeometryError::InconsistentDistances((j + 1) % m));
        }
    }
    let poly = ConvexPolygon::new(vertices)
        .map_err(|_| GeometryError::InconsistentDistances(0))?;
    if !poly.contains_strict(x0) {
        return Err(GeometryError::LocationOutside);
    }
    Ok(poly)
}

/// A plane wave e^{ikx·d} with wavenumber k and unit direction d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    k: f64,
    d: Vec2,
}

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("wavenumber must be positive and finite, got {0}")]
    BadWavenumber(f64),
    #[error("incident direction must be a nonzero finite vector")]
    BadDirection,
}

impl IncidentWave {
    pub fn new(k: f64, direction: Vec2) -> Result<Self, WaveError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(WaveError::BadWavenumber(k));
        }
        let d = direction
            .normalized()
            .filter(|d| d.is_finite())
            .ok_or(WaveError::BadDirection)?;
        Ok(IncidentWave { k, d })
    }

    /// The standard detecting direction d_j = (cos(jπ/4), sin(jπ/4)).
    pub fn octant_direction(j: u32) -> Vec2 {
        let t = j as f64 * std::f64::consts::FRAC_PI_4;
        Vec2::from_angle(t)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn direction(&self) -> Vec2 {
        self.d
    }

    /// Wavelength 2π/k.
    pub fn wavelength(&self) -> f64 {
        std::f64::consts::TAU / self.k
    }
}

/// The triangle of the first reference experiment.
pub fn example_triangle() -> ConvexPolygon {
    ConvexPolygon::new(vec![
        Vec2::new(1.0, 0.0),
        Vec2::new(2.5, -0.5),
        Vec2::new(2.5, 1.0),
    ])
    .expect("triangle is valid")
}

/// The hexagon of the second reference experiment.
pub fn example_hexagon() -> ConvexPolygon {
    ConvexPolygon::new(vec![
        Vec2::new(4.0, 2.5),
        Vec2::new(3.0, 3.0),
        Vec2::new(1.0, 2.0),
        Vec2::new(0.5, 0.0),
        Vec2::new(2.0, -1.0),
        Vec2::new(4.5, -0.5),
    ])
    .expect("hexagon is valid")
}
