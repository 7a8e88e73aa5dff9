//! Two-stage recovery of a convex polygon from far-field data.
//!
//! Stage 1 turns detected backscatter peaks into exterior unit normals via
//! the reflection algebra
//!
//! ```text
//! x̂ = d − 2(d·ν)ν,   d·ν = −√((1 − x̂·d)/2),   ν = (x̂ − d)/√(2(1 − x̂·d))
//! ```
//!
//! and merges near-parallel candidates from different incident directions
//! into *effective* normals, keeping the candidate with the strongest peak
//! per group.
//!
//! Stage 2 fixes a location point x₀ and recovers the side distances l_j by
//! minimizing
//!
//! ```text
//! F(t) = Σ_β |u∞(ẑ_β; k, d_α) − γ̃·κ_β·∫_{C_jβ(t)} e^{iky·(d_α−ẑ_β)} ds(y)|²
//! ```
//!
//! over t = (l_1, …, l_m), where C_j(t) is rebuilt from the half-plane data
//! at every evaluation, the integral uses composite trapezoid quadrature,
//! and κ is ν_j·d_α (sound-soft) or ν_j·ẑ_β (sound-hard). The cost is
//! periodic-ish in each l_j with period π/(k|d·ν_j|), so the minimizer
//! first scans each coordinate globally at a fraction of that period and
//! then polishes with a derivative-free trust-region search.

use crate::forward::{trapezoid_segment_integral, BoundaryCondition, DimensionalConstant};
use crate::geometry::{halfplane_vertices, reconstruct_from_halfplanes, ConvexPolygon};
use crate::optim::{nelder_mead, trust_region, OptimOptions, OptimOutcome};
use crate::vec2::Vec2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("observation direction coincides with the incident direction")]
    ForwardDegenerate,
    #[error("normal is not a front normal: d·nu = {0} >= 0")]
    NotFrontNormal(f64),
    #[error("inversion needs at least one selected pair")]
    EmptyProblem,
    #[error("initial distances must have length {expected}, got {got}")]
    BadInitialLength { expected: usize, got: usize },
    #[error("final distances do not bound a polygon: {0}")]
    InfeasibleResult(#[from] crate::geometry::GeometryError),
}

/// Critical observation direction of a front side: the specular reflection
/// x̂ = d − 2(d·ν)ν. Requires d·ν < 0.
pub fn critical_direction(d: Vec2, nu: Vec2) -> Result<Vec2, RecoveryError> {
    let dn = d.dot(nu);
    if dn >= 0.0 {
        return Err(RecoveryError::NotFrontNormal(dn));
    }
    Ok(d.reflect(nu))
}

/// Inverts the specular relation: ν = (x̂ − d)/√(2(1 − x̂·d)).
///
/// Defined for every observation direction except x̂ = d; the result always
/// satisfies d·ν < 0 and reproduces x̂ under [`critical_direction`].
pub fn normal_from_critical(d: Vec2, x_hat: Vec2) -> Result<Vec2, RecoveryError> {
    let denom_sq = 2.0 * (1.0 - x_hat.dot(d));
    if denom_sq < 1e-24 {
        return Err(RecoveryError::ForwardDegenerate);
    }
    let nu = (x_hat - d) / denom_sq.sqrt();
    // |x̂ − d| equals √(2(1 − x̂·d)) exactly; renormalize to absorb rounding.
    Ok(nu.normalized().expect("nonzero by construction"))
}

/// One backscatter peak paired with the normal it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPair {
    /// Unit incident direction d_α.
    pub incident: Vec2,
    /// Index α of the incident direction in the measurement set.
    pub incident_index: usize,
    /// Unit critical observation direction (a grid angle).
    pub x_hat: Vec2,
    /// Grid index of the peak.
    pub peak_index: usize,
    /// Squared modulus |u∞|² at the peak.
    pub magnitude2: f64,
    /// Implied exterior unit normal.
    pub normal: Vec2,
}

impl CriticalPair {
    pub fn new(
        incident: Vec2,
        incident_index: usize,
        x_hat: Vec2,
        peak_index: usize,
        magnitude2: f64,
    ) -> Result<Self, RecoveryError> {
        let normal = normal_from_critical(incident, x_hat)?;
        Ok(CriticalPair {
            incident,
            incident_index,
            x_hat,
            peak_index,
            magnitude2,
            normal,
        })
    }
}

/// A group of near-parallel candidate normals; the representative is the
/// member with the strongest peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveNormal {
    pub normal: Vec2,
    pub representative: CriticalPair,
    pub members: Vec<CriticalPair>,
}

/// Effective exterior normals, sorted counterclockwise by angle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectiveNormalSet {
    pub normals: Vec<EffectiveNormal>,
}

impl EffectiveNormalSet {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Unit normals in counterclockwise order.
    pub fn directions(&self) -> Vec<Vec2> {
        self.normals.iter().map(|e| e.normal).collect()
    }

    /// Keeps the `m` groups with the strongest representatives, preserving
    /// the counterclockwise ordering.
    pub fn strongest(&self, m: usize) -> EffectiveNormalSet {
        let mut by_mag: Vec<&EffectiveNormal> = self.normals.iter().collect();
        by_mag.sort_by(|a, b| {
            b.representative
                .magnitude2
                .total_cmp(&a.representative.magnitude2)
        });
        let mut kept: Vec<EffectiveNormal> = by_mag.into_iter().take(m).cloned().collect();
        kept.sort_by(|a, b| a.normal.angle().total_cmp(&b.normal.angle()));
        EffectiveNormalSet { normals: kept }
    }
}

/// Greedy grouping of candidate pairs into effective normals.
///
/// Pairs are visited in decreasing peak magnitude (ties broken by angle,
/// then incident index, so concurrent producers cannot reorder the result).
/// A pair joins the nearest group whose representative normal is within
/// `angle_tol` radians, otherwise it founds a new group. Because of the
/// visiting order every representative is its group's strongest member.
pub fn group_effective_normals(pairs: &[CriticalPair], angle_tol: f64) -> EffectiveNormalSet {
    let mut sorted: Vec<&CriticalPair> = pairs.iter().collect();
    sorted.sort_by(|a, b| {
        b.magnitude2
            .total_cmp(&a.magnitude2)
            .then(a.x_hat.angle().total_cmp(&b.x_hat.angle()))
            .then(a.incident_index.cmp(&b.incident_index))
    });
    let mut groups: Vec<EffectiveNormal> = Vec::new();
    for &pair in &sorted {
        let nearest = groups
            .iter_mut()
            .map(|g| (g.normal.angle_between(pair.normal), g))
            .filter(|(ang, _)| *ang <= angle_tol)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match nearest {
            Some((_, group)) => group.members.push(*pair),
            None => groups.push(EffectiveNormal {
                normal: pair.normal,
                representative: *pair,
                members: vec![*pair],
            }),
        }
    }
    groups.sort_by(|a, b| a.normal.angle().total_cmp(&b.normal.angle()));
    EffectiveNormalSet { normals: groups }
}

/// A measured far-field sample near a peak, used only to arbitrate the
/// placement ambiguity (see [`placement_estimate`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSample {
    pub x_hat: Vec2,
    pub data: Complex64,
}

/// One selected measurement for the least-squares stage: the far-field
/// value (with phase) at a critical observation direction, tied to the side
/// its effective normal identifies.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedMeasurement {
    pub pair: CriticalPair,
    /// Index of the side (position of its normal in the sorted normal set).
    pub cell_index: usize,
    /// Complex far-field value u∞(ẑ_β; k, d_α).
    pub data: Complex64,
    /// Neighboring grid samples of the same lobe. Not part of the cost F;
    /// they only disambiguate translated placements whose residuals align
    /// at the peak angles themselves.
    pub aux: Vec<AuxSample>,
}

/// The finite-dimensional inverse problem of Stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionProblem {
    pub x0: Vec2,
    /// Effective normals, counterclockwise; their order indexes the sides.
    pub normals: EffectiveNormalSet,
    /// Selected measurements sorted by decreasing peak magnitude.
    pub selected: Vec<SelectedMeasurement>,
    pub k: f64,
    pub bc: BoundaryCondition,
    /// Maximum trapezoid step along a side.
    pub quadrature_step: f64,
    /// Box constraints for every distance.
    pub l_min: f64,
    pub l_max: f64,
}

impl InversionProblem {
    /// Assembles the problem from effective normals and their strongest
    /// peaks. `data` must hold, for each effective normal in set order, the
    /// complex far-field value at its representative peak.
    pub fn new(
        x0: Vec2,
        normals: EffectiveNormalSet,
        data: &[Complex64],
        k: f64,
        bc: BoundaryCondition,
        quadrature_step: f64,
        l_min: f64,
        l_max: f64,
    ) -> Result<Self, RecoveryError> {
        if normals.is_empty() || data.len() != normals.len() {
            return Err(RecoveryError::EmptyProblem);
        }
        let mut selected: Vec<SelectedMeasurement> = normals
            .normals
            .iter()
            .enumerate()
            .map(|(j, e)| SelectedMeasurement {
                pair: e.representative,
                cell_index: j,
                data: data[j],
                aux: Vec::new(),
            })
            .collect();
        selected.sort_by(|a, b| b.pair.magnitude2.total_cmp(&a.pair.magnitude2));
        Ok(InversionProblem {
            x0,
            normals,
            selected,
            k,
            bc,
            quadrature_step,
            l_min,
            l_max,
        })
    }

    pub fn side_count(&self) -> usize {
        self.normals.len()
    }

    /// Σ|data|², the scale for the infeasibility penalty.
    pub fn data_energy(&self) -> f64 {
        self.selected.iter().map(|s| s.data.norm_sqr()).sum()
    }

    /// Candidate side segments for the distance vector `t`, indexed like
    /// the normal set.
    ///
    /// With at least three normals the segments come from the half-plane
    /// vertex construction (side j runs between the crossings with its
    /// angular neighbors). One or two normals cannot bound a polygon; each
    /// side then falls back to a segment of fixed half-extent `l_max`
    /// centered on its perpendicular foot point, which keeps single-cell
    /// problems well-defined.
    pub fn candidate_cells(&self, t: &[f64]) -> Result<Vec<(Vec2, Vec2)>, crate::geometry::GeometryError> {
        let normals = self.normals.directions();
        let m = normals.len();
        if m >= 3 {
            let vertices = halfplane_vertices(self.x0, &normals, t)?;
            // Vertex j is the crossing of lines j and j+1, so side j runs
            // from vertex j−1 to vertex j; reject inverted chains.
            for j in 0..m {
                let a = vertices[j];
                let b = vertices[(j + 1) % m];
                let c = vertices[(j + 2) % m];
                if (b - a).cross(c - b) <= 0.0 {
                    return Err(crate::geometry::GeometryError::InconsistentDistances(
                        (j + 1) % m,
                    ));
                }
            }
            Ok((0..m)
                .map(|j| (vertices[(j + m - 1) % m], vertices[j]))
                .collect())
        } else {
            Ok(normals
                .iter()
                .zip(t)
                .map(|(&nu, &l)| {
                    let foot = self.x0 + nu * l;
                    let tangent = nu.rot90_ccw();
                    (foot - tangent * self.l_max, foot + tangent * self.l_max)
                })
                .collect())
        }
    }

    /// The model kernel κ of a measurement: ν_j·d (sound-soft) or ν_j·ẑ
    /// (sound-hard).
    fn kernel(&self, s: &SelectedMeasurement) -> f64 {
        let nu = self.normals.normals[s.cell_index].normal;
        match self.bc {
            BoundaryCondition::SoundSoft => nu.dot(s.pair.incident),
            BoundaryCondition::SoundHard => nu.dot(s.pair.x_hat),
        }
    }

    /// Model far-field value of a side's cell (a, b) at an arbitrary
    /// observation direction.
    fn model_term_at(
        &self,
        cell_index: usize,
        incident: Vec2,
        x_hat: Vec2,
        a: Vec2,
        b: Vec2,
    ) -> Complex64 {
        let nu = self.normals.normals[cell_index].normal;
        let kernel = match self.bc {
            BoundaryCondition::SoundSoft => nu.dot(incident),
            BoundaryCondition::SoundHard => nu.dot(x_hat),
        };
        let w = incident - x_hat;
        let length = (b - a).norm();
        let panels = (length / self.quadrature_step).ceil().max(1.0) as usize;
        let integral = trapezoid_segment_integral(a, b, self.k, w, panels);
        DimensionalConstant::new_2d(self.k).gamma_tilde * kernel * integral
    }

    /// Model far-field value of measurement `s` for candidate cell (a, b).
    fn model_term(&self, s: &SelectedMeasurement, a: Vec2, b: Vec2) -> Complex64 {
        self.model_term_at(s.cell_index, s.pair.incident, s.pair.x_hat, a, b)
    }

    /// Phase period of each side's residual in its distance coordinate:
    /// the model phase advances at 2k|d·ν_j| per unit of l_j.
    pub fn residual_periods(&self) -> Vec<f64> {
        self.normals
            .normals
            .iter()
            .map(|e| {
                let rate = 2.0 * self.k * e.representative.incident.dot(e.normal).abs();
                if rate > 0.0 { std::f64::consts::TAU / rate } else { self.l_max }
            })
            .collect()
    }

    /// Attaches placement-arbitration samples, indexed like the normal set.
    pub fn with_aux_samples(mut self, per_cell: Vec<Vec<AuxSample>>) -> Self {
        assert_eq!(per_cell.len(), self.side_count());
        let mut per_cell: Vec<Option<Vec<AuxSample>>> =
            per_cell.into_iter().map(Some).collect();
        for s in &mut self.selected {
            s.aux = per_cell[s.cell_index].take().unwrap_or_default();
        }
        self
    }
}

/// The placement-arbitration score: the cost F plus the residuals of the
/// auxiliary lobe samples. A translated twin aligns every residual at the
/// peak angles but not across a lobe, so this score separates placements
/// that F alone cannot. It is used only inside [`placement_estimate`]; the
/// reported cost and the polish stage use [`cost`] exactly as defined.
fn placement_score(problem: &InversionProblem, t: &[f64]) -> f64 {
    match problem.candidate_cells(t) {
        Ok(cells) => problem
            .selected
            .iter()
            .map(|s| {
                let (a, b) = cells[s.cell_index];
                let center = (s.data - problem.model_term(s, a, b)).norm_sqr();
                let aux: f64 = s
                    .aux
                    .iter()
                    .map(|x| {
                        (x.data
                            - problem.model_term_at(s.cell_index, s.pair.incident, x.x_hat, a, b))
                        .norm_sqr()
                    })
                    .sum();
                center + aux
            })
            .sum(),
        Err(_) => INFEASIBLE_PENALTY * problem.data_energy(),
    }
}

/// Penalty multiplier for distance vectors that do not bound a polygon.
const INFEASIBLE_PENALTY: f64 = 1e6;

/// The least-squares cost F(t): squared moduli of the residuals between the
/// measured values and the single-side model terms. Infeasible geometry is
/// mapped to `1e6 × Σ|data|²` so derivative-free searches can back out.
pub fn cost(problem: &InversionProblem, t: &[f64]) -> f64 {
    assert_eq!(t.len(), problem.side_count());
    match problem.candidate_cells(t) {
        Ok(cells) => problem
            .selected
            .iter()
            .map(|s| {
                let (a, b) = cells[s.cell_index];
                (s.data - problem.model_term(s, a, b)).norm_sqr()
            })
            .sum(),
        Err(_) => INFEASIBLE_PENALTY * problem.data_energy(),
    }
}

/// Which derivative-free method polishes the distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    TrustRegion,
    NelderMead,
}

/// Options for [`minimize_distances`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub optimizer: OptimizerKind,
    /// Total evaluation budget across all stages.
    pub max_evals: usize,
    /// Passes of the per-coordinate sub-period scan after the placement.
    pub scan_cycles: usize,
    /// Scan resolution as a fraction of the local phase period.
    pub scan_period_fraction: f64,
    /// Scan window half-width in phase periods around the placement
    /// point. Kept below one period so the scan can absorb shape errors
    /// but never hop to a neighboring phase rung.
    pub scan_halfwidth_periods: f64,
    /// Evaluation budget of the placement grid sweep.
    pub placement_budget: usize,
    /// Radius of the placement prior disk as a fraction of the shape
    /// diameter around its centroid.
    pub placement_centrality_fraction: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            optimizer: OptimizerKind::TrustRegion,
            max_evals: 4000,
            scan_cycles: 2,
            scan_period_fraction: 0.05,
            scan_halfwidth_periods: 0.6,
            placement_budget: 80_000,
            placement_centrality_fraction: 0.15,
        }
    }
}

/// Outcome of the distance recovery.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Recovered side distances, in normal-set order.
    pub distances: Vec<f64>,
    /// Polygon rebuilt from (x₀, normals, distances).
    pub polygon: ConvexPolygon,
    /// F at the recovered distances.
    pub final_cost: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub final_step: f64,
    pub converged: bool,
}

/// Shape-and-placement estimate of the distances.
///
/// Each peak magnitude fixes its side's length through |u| ≈ |γ̃·κ|·L, and
/// fixed normals plus side lengths already determine the polygon up to
/// translation (the lengths are corrected by a least-squares projection
/// onto the closure constraint Σ L_j τ_j = 0). The two translation degrees
/// of freedom live only in the data phases, so the placement of x₀ inside
/// the shape is found by sweeping a grid at a fraction of the phase period
/// and refining the shortlisted dips of the placement score.
///
/// The sweep is confined to placements within `centrality_fraction` of the
/// shape diameter around the shape centroid. The phase constraints admit
/// near-coincident solutions on a translation lattice (every residual
/// realigned mod 2π), and with few sides the cost cannot separate them —
/// but the location point is by construction a central estimate of the
/// obstacle, which rules the translated twins out.
///
/// Returns the best (t, score) found, or `None` when a kernel is too
/// grazing, a projected length collapses, or no placement inside the prior
/// disk is feasible.
fn placement_estimate(
    problem: &InversionProblem,
    min_period: f64,
    centrality_fraction: f64,
    budget: usize,
    evals: &mut usize,
) -> Option<(Vec<f64>, f64)> {
    let m = problem.side_count();
    if m < 3 {
        return None;
    }
    let normals = problem.normals.directions();
    let tangents: Vec<Vec2> = normals.iter().map(|n| n.rot90_ccw()).collect();

    // Side lengths from the peak magnitudes.
    let gamma_mag = DimensionalConstant::new_2d(problem.k).gamma_tilde.norm();
    let mut lengths = vec![0.0; m];
    for s in &problem.selected {
        let kernel = problem.kernel(s).abs();
        if kernel < 0.05 {
            return None;
        }
        lengths[s.cell_index] = s.data.norm() / (gamma_mag * kernel);
    }

    // Closure: project onto {L : Σ L_j τ_j = 0} so the edge walk closes.
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let mut rhs = Vec2::ZERO;
    for (l, tau) in lengths.iter().zip(&tangents) {
        sxx += tau.x * tau.x;
        sxy += tau.x * tau.y;
        syy += tau.y * tau.y;
        rhs = rhs + *tau * *l;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() < 1e-12 {
        return None;
    }
    let lambda = Vec2::new((syy * rhs.x - sxy * rhs.y) / det, (sxx * rhs.y - sxy * rhs.x) / det);
    for (l, tau) in lengths.iter_mut().zip(&tangents) {
        *l -= tau.dot(lambda);
        if *l <= 0.0 {
            return None;
        }
    }

    // Walk the closed shape; side j starts at corner j.
    let mut corners = vec![Vec2::ZERO; m];
    for j in 1..m {
        corners[j] = corners[j - 1] + tangents[j - 1] * lengths[j - 1];
    }
    let line_constants: Vec<f64> = corners.iter().zip(&normals).map(|(c, n)| c.dot(*n)).collect();

    // Area centroid and diameter of the shape define the prior disk.
    let mut area2 = 0.0;
    let mut centroid = Vec2::ZERO;
    for j in 0..m {
        let (a, b) = (corners[j], corners[(j + 1) % m]);
        let w = a.cross(b);
        area2 += w;
        centroid = centroid + (a + b) * w;
    }
    if area2.abs() < 1e-12 {
        return None;
    }
    let centroid = centroid / (3.0 * area2);
    let mut diameter = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            diameter = diameter.max(corners[i].dist(corners[j]));
        }
    }
    let prior_radius = centrality_fraction * diameter;

    // Scan the placement over the prior disk.
    let lo = centroid - Vec2::new(prior_radius, prior_radius);
    let mut step = min_period / 6.0;
    let cells_estimate = (2.0 * prior_radius / step + 1.0).powi(2);
    if cells_estimate > budget as f64 {
        // Coarsen rather than truncate the sweep, keeping determinism.
        step = (2.0 * prior_radius / (budget as f64).sqrt()).max(step);
    }

    let distances_at = |p: Vec2| -> Option<Vec<f64>> {
        let t: Vec<f64> = line_constants
            .iter()
            .zip(&normals)
            .map(|(c, n)| c - p.dot(*n))
            .collect();
        if t.iter().any(|&l| l < problem.l_min || l > problem.l_max) {
            None
        } else {
            Some(t)
        }
    };

    // Coarse sweep. The score oscillates with period ≈ min_period along
    // every w_β direction, so a single grid sample is phase-aliased; the
    // sweep only shortlists dips, which are then refined locally before
    // being compared.
    let mut samples: Vec<(Vec2, f64)> = Vec::new();
    let n = (2.0 * prior_radius / step).ceil() as usize;
    'sweep: for iy in 0..=n {
        for ix in 0..=n {
            let p = lo + Vec2::new(ix as f64 * step, iy as f64 * step);
            if p.dist(centroid) > prior_radius {
                continue;
            }
            let Some(t) = distances_at(p) else { continue };
            if *evals >= budget {
                break 'sweep;
            }
            let f = placement_score(problem, &t);
            *evals += 1;
            samples.push((p, f));
        }
    }
    if samples.is_empty() {
        return None;
    }

    // Shortlist the best dips, kept mutually separated so distinct phase
    // coincidences are each represented once.
    samples.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut candidates: Vec<Vec2> = Vec::new();
    for (p, _) in &samples {
        if candidates.iter().all(|c| c.dist(*p) >= 0.7 * min_period) {
            candidates.push(*p);
        }
        if candidates.len() >= 40 {
            break;
        }
    }

    // Two-step refinement of each candidate: a pattern search over the
    // translation plane, then a sub-period relaxation of the full distance
    // vector. The second step matters because the estimated shape carries
    // per-side length errors that shift residual phases along the
    // translation slice; only after relaxing the shape are the dips of
    // different lattice coincidences comparable.
    let periods: Vec<f64> = problem.residual_periods();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in candidates {
        let mut p = start;
        let mut f_here = match distances_at(p) {
            Some(t) => {
                *evals += 1;
                placement_score(problem, &t)
            }
            None => continue,
        };
        let mut h = step * 0.5;
        while h > min_period / 200.0 && *evals + 4 <= budget {
            let mut improved = false;
            for dir in [
                Vec2::new(h, 0.0),
                Vec2::new(-h, 0.0),
                Vec2::new(0.0, h),
                Vec2::new(0.0, -h),
            ] {
                let q = p + dir;
                if let Some(t) = distances_at(q) {
                    let f = placement_score(problem, &t);
                    *evals += 1;
                    if f < f_here {
                        f_here = f;
                        p = q;
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        let Some(t) = distances_at(p) else { continue };
        let (t, f_here) = refine_subperiod(problem, placement_score, &t, &periods, 0.7, budget, evals)
            .unwrap_or((t, f_here));
        if best.as_ref().map_or(true, |(_, fb)| f_here < *fb) {
            best = Some((t, f_here));
        }
    }
    best
}

/// Cyclic per-coordinate pattern search of `score` within a window of
/// ±`halfwidth_periods` phase periods around `t0`, so it can relax the
/// distances without hopping to another phase rung. Returns the improved
/// point and its score.
fn refine_subperiod(
    problem: &InversionProblem,
    score: fn(&InversionProblem, &[f64]) -> f64,
    t0: &[f64],
    periods: &[f64],
    halfwidth_periods: f64,
    budget: usize,
    evals: &mut usize,
) -> Option<(Vec<f64>, f64)> {
    let m = t0.len();
    let mut t = t0.to_vec();
    if *evals >= budget {
        return None;
    }
    let mut f_best = score(problem, &t);
    *evals += 1;
    for j_cycle in 0..(3 * m) {
        let j = j_cycle % m;
        let window = halfwidth_periods * periods[j];
        let center = t0[j];
        let mut h = window * 0.5;
        while h > periods[j] / 200.0 && *evals + 2 <= budget {
            let mut improved = false;
            for cand in [t[j] + h, t[j] - h] {
                if (cand - center).abs() > window
                    || cand < problem.l_min
                    || cand > problem.l_max
                {
                    continue;
                }
                let mut trial = t.clone();
                trial[j] = cand;
                let f = score(problem, &trial);
                *evals += 1;
                if f < f_best {
                    f_best = f;
                    t = trial;
                    improved = true;
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
    }
    Some((t, f_best))
}

/// Minimizes F over the distance box.
///
/// The residual of side j oscillates in l_j with period ≈ π/(k|d·ν_j|):
/// the data phase pins l_j only modulo that period, so a purely local
/// method started a few periods away locks onto the wrong rung, while a
/// naive global scan of the full cost drifts into shrinking every side.
/// The search therefore proceeds in three deterministic stages:
///
/// 1. shape from the peak magnitudes and placement of x₀ from the phases
///    ([`placement_estimate`]), which lands within a fraction of a period
///    of the global basin;
/// 2. a cyclic per-coordinate scan over ±`scan_halfwidth_periods` rungs
///    around that point, absorbing the magnitude-estimate error;
/// 3. a polish with the configured derivative-free method.
pub fn minimize_distances(
    problem: &InversionProblem,
    initial: &[f64],
    options: &MinimizeOptions,
) -> Result<ReconstructionResult, RecoveryError> {
    let m = problem.side_count();
    if m == 0 {
        return Err(RecoveryError::EmptyProblem);
    }
    if initial.len() != m {
        return Err(RecoveryError::BadInitialLength { expected: m, got: initial.len() });
    }
    let (lo, hi) = (vec![problem.l_min; m], vec![problem.l_max; m]);
    let clamp = |v: f64| v.clamp(problem.l_min, problem.l_max);
    let start: Vec<f64> = initial.iter().map(|&l| clamp(l)).collect();
    let mut best_t = start.clone();
    let mut best = cost(problem, &best_t);
    let mut total_evals = 1usize;

    // Per-coordinate phase period of the residual.
    let periods = problem.residual_periods();
    let min_period = periods.iter().cloned().fold(f64::INFINITY, f64::min);

    // Stage 1: shape from magnitudes, placement from phases. The returned
    // placement is chosen by its arbitration score; track the plain cost.
    let mut placement_evals = 0usize;
    let mut t = best_t.clone();
    if let Some((t_est, _score)) = placement_estimate(
        problem,
        min_period,
        options.placement_centrality_fraction,
        options.placement_budget,
        &mut placement_evals,
    ) {
        t = t_est.iter().map(|&l| clamp(l)).collect();
        let f = cost(problem, &t);
        placement_evals += 1;
        if f < best {
            best = f;
            best_t = t.clone();
        }
    }
    total_evals += placement_evals;

    // Stage 2: cyclic sub-period scan around the placement point. The
    // window stays below one period: wider windows let coordinates hop
    // rungs independently and reassemble the translated twins that the
    // placement prior excluded.
    let halfwidth = options.scan_halfwidth_periods;
    let mut scan_evals = 0usize;
    for _ in 0..options.scan_cycles {
        for j in 0..m {
            let step = periods[j] * options.scan_period_fraction;
            if step <= 0.0 {
                continue;
            }
            let center = t[j];
            let steps = (2.0 * halfwidth * periods[j] / step).ceil() as usize;
            let mut best_lj = t[j];
            let mut best_here = f64::INFINITY;
            for i in 0..=steps {
                if scan_evals >= options.max_evals {
                    break;
                }
                let lj = clamp(center - halfwidth * periods[j] + i as f64 * step);
                let mut trial = t.clone();
                trial[j] = lj;
                let f = cost(problem, &trial);
                scan_evals += 1;
                if f < best_here {
                    best_here = f;
                    best_lj = lj;
                }
                if f < best {
                    best = f;
                    best_t = trial;
                }
            }
            if best_here.is_finite() {
                t[j] = best_lj;
            }
        }
    }
    total_evals += scan_evals;

    // Stage 3: derivative-free polish.
    let remaining = options.max_evals.saturating_sub(scan_evals).max(2 * m + 2);
    let opts = OptimOptions {
        max_evals: remaining,
        initial_step: min_period * 0.25,
        min_step: 1e-10,
        // Sub-period radius: the polish must not hop phase rungs.
        max_step: 0.45 * min_period,
    };
    let objective = |x: &[f64]| cost(problem, x);
    let OptimOutcome { x, f, evaluations, iterations, final_step, converged } =
        match options.optimizer {
            OptimizerKind::TrustRegion => trust_region(objective, &best_t, &lo, &hi, &opts),
            OptimizerKind::NelderMead => nelder_mead(objective, &best_t, &lo, &hi, &opts),
        };
    let (t, best) = if f <= best { (x, f) } else { (best_t, best) };

    let polygon = if m >= 3 {
        reconstruct_from_halfplanes(problem.x0, &problem.normals.directions(), &t)?
    } else {
        // Degenerate side counts cannot bound a polygon; report the foot
        // segments as a thin triangle around x₀ is not meaningful, so fail.
        return Err(RecoveryError::InfeasibleResult(
            crate::geometry::GeometryError::TooFewHalfPlanes(m),
        ));
    };
    Ok(ReconstructionResult {
        distances: t,
        polygon,
        final_cost: best,
        evaluations: total_evals + evaluations,
        iterations,
        final_step,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{po_far_field, po_far_field_grid};
    use crate::geometry::{cells, classify_faces, example_triangle, IncidentWave};
    use crate::signal::detect_backscatter_peaks;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    #[test]
    fn critical_direction_head_on() {
        let x = critical_direction(Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)).unwrap();
        assert!((x - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn critical_direction_mirror_45() {
        let nu = Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let x = critical_direction(Vec2::new(0.0, -1.0), nu).unwrap();
        assert!((x - Vec2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn critical_direction_rejects_back_normal() {
        let r = critical_direction(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        assert!(matches!(r, Err(RecoveryError::NotFrontNormal(_))));
        let grazing = critical_direction(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        assert!(grazing.is_err());
    }

    #[test]
    fn normal_from_critical_head_on_and_mirror() {
        let nu = normal_from_critical(Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)).unwrap();
        assert!((nu - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
        let nu = normal_from_critical(Vec2::new(0.0, -1.0), Vec2::new(-1.0, 0.0)).unwrap();
        assert!((nu - Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-12);
    }

    #[test]
    fn normal_from_critical_rejects_forward() {
        let d = Vec2::new(0.6, 0.8);
        assert!(matches!(
            normal_from_critical(d, d),
            Err(RecoveryError::ForwardDegenerate)
        ));
    }

    #[test]
    fn reflection_roundtrip_random() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 1000 {
            let d = Vec2::from_angle(rng.gen_range(0.0..TAU));
            let nu = Vec2::from_angle(rng.gen_range(0.0..TAU));
            if d.dot(nu) >= -1e-6 {
                continue;
            }
            tested += 1;
            let x_hat = critical_direction(d, nu).unwrap();
            let back = normal_from_critical(d, x_hat).unwrap();
            assert!((back - nu).norm() < 1e-12);
            // Projection identity d·ν = −√((1 − x̂·d)/2).
            let lhs = d.dot(back);
            let rhs = -(((1.0 - x_hat.dot(d)) / 2.0).sqrt());
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    fn pair_at(normal_angle: f64, mag2: f64, incident_index: usize) -> CriticalPair {
        // Build a consistent (d, x̂) producing the requested normal.
        let nu = Vec2::from_angle(normal_angle);
        let d = -nu;
        let x_hat = critical_direction(d, nu).unwrap();
        CriticalPair::new(d, incident_index, x_hat, 0, mag2).unwrap()
    }

    #[test]
    fn grouping_keeps_strongest_representative() {
        let a = pair_at(1.0, 5.0, 0);
        let b = pair_at(1.0, 3.0, 1);
        let set = group_effective_normals(&[b, a], 10f64.to_radians());
        assert_eq!(set.len(), 1);
        assert_eq!(set.normals[0].representative.magnitude2, 5.0);
        assert_eq!(set.normals[0].members.len(), 2);
    }

    #[test]
    fn grouping_splits_distant_normals() {
        let pairs = [
            pair_at(0.0, 1.0, 0),
            pair_at(1f64.to_radians(), 0.9, 1),
            pair_at(120f64.to_radians(), 0.8, 2),
        ];
        let set = group_effective_normals(&pairs, 10f64.to_radians());
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn grouping_empty_input() {
        assert!(group_effective_normals(&[], 0.1).is_empty());
    }

    /// Builds the Stage-2 problem for a polygon from exact analytic peaks
    /// (no grid, no noise): one measurement per side, sides indexed
    /// counterclockwise.
    fn exact_problem(
        poly: &ConvexPolygon,
        k: f64,
        bc: BoundaryCondition,
        x0: Vec2,
        incident: &[Vec2],
        quad_step: f64,
        l_max: f64,
    ) -> InversionProblem {
        let mut pairs: Vec<CriticalPair> = Vec::new();
        for (ai, &d) in incident.iter().enumerate() {
            let wave = IncidentWave::new(k, d).unwrap();
            let (front, _) = classify_faces(poly, d);
            for c in front {
                if c.normal.dot(d) > -1e-9 {
                    // Grazing only through rounding of the octant vector.
                    continue;
                }
                let x_hat = critical_direction(d, c.normal).unwrap();
                let mag = po_far_field(poly, &wave, bc, x_hat).norm_sqr();
                pairs.push(CriticalPair::new(d, ai, x_hat, 0, mag).unwrap());
            }
        }
        let set = group_effective_normals(&pairs, 10f64.to_radians());
        let set = set.strongest(poly.side_count());
        let data: Vec<Complex64> = set
            .normals
            .iter()
            .map(|e| {
                let wave = IncidentWave::new(k, e.representative.incident).unwrap();
                po_far_field(poly, &wave, bc, e.representative.x_hat)
            })
            .collect();
        InversionProblem::new(x0, set, &data, k, bc, quad_step, 0.05, l_max).unwrap()
    }

    #[test]
    fn cost_single_cell_inverse_crime_is_zero() {
        // One normal, data manufactured from the model itself at l = 1.
        let d = Vec2::new(1.0, 0.0);
        let nu = Vec2::new(-1.0, 0.0);
        let x_hat = critical_direction(d, nu).unwrap();
        let pair = CriticalPair::new(d, 0, x_hat, 180, 1.0).unwrap();
        let set = group_effective_normals(&[pair], 0.1);
        let k = 6.0 * PI;
        let mut problem = InversionProblem::new(
            Vec2::ZERO,
            set,
            &[Complex64::new(0.0, 0.0)],
            k,
            BoundaryCondition::SoundSoft,
            PI / (10.0 * k),
            0.05,
            3.0,
        )
        .unwrap();
        let cells = problem.candidate_cells(&[1.0]).unwrap();
        let (a, b) = cells[0];
        let data = problem.model_term(&problem.selected[0].clone(), a, b);
        problem.selected[0].data = data;
        let f = cost(&problem, &[1.0]);
        assert!(f <= 1e-20, "F(1) = {f}");
    }

    #[test]
    fn cost_is_tiny_at_truth_and_large_off_truth() {
        let poly = example_triangle();
        let x0 = Vec2::new(2.136, 0.217);
        let k = 10.0 * PI;
        let octants = [2u32, 4, 6, 8].map(IncidentWave::octant_direction);
        let problem = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k),
            3.0,
        );
        assert_eq!(problem.side_count(), 3);
        // True distances in normal-set order.
        let truth: Vec<f64> = problem
            .normals
            .directions()
            .iter()
            .map(|&nu| {
                cells(&poly)
                    .iter()
                    .map(|c| (c.a - x0).dot(c.normal))
                    .zip(cells(&poly).iter().map(|c| c.normal.angle_between(nu)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap()
                    .0
            })
            .collect();
        let f_truth = cost(&problem, &truth);
        let perturbed: Vec<f64> = truth.iter().map(|l| l * 1.1).collect();
        let f_perturbed = cost(&problem, &perturbed);
        assert!(f_truth >= 0.0);
        assert!(
            f_perturbed >= 10.0 * f_truth,
            "F(truth) = {f_truth}, F(truth+10%) = {f_perturbed}"
        );
    }

    #[test]
    fn cost_quadrature_refinement_is_converged() {
        let poly = example_triangle();
        let x0 = poly.centroid();
        let k = 6.0 * PI;
        let octants = [2u32, 4, 6].map(IncidentWave::octant_direction);
        let baseline = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k), // 20 points per wavelength
            3.0,
        );
        let mut refined = baseline.clone();
        refined.quadrature_step = baseline.quadrature_step / 2.0;
        let t = vec![0.5, 0.5, 0.5];
        let f1 = cost(&baseline, &t);
        let f2 = cost(&refined, &t);
        assert!((f1 - f2).abs() <= 1e-6 * f1.max(1e-30), "f1={f1}, f2={f2}");
    }

    #[test]
    fn cost_penalizes_infeasible_geometry() {
        // Needs at least four sides: with three, any positive distances
        // still bound a triangle. One hexagon side pushed far out becomes
        // redundant, the vertex chain inverts, and the cost falls back to
        // the penalty.
        let poly = crate::geometry::example_hexagon();
        let x0 = poly.centroid();
        let k = 6.0 * PI;
        let octants = [1u32, 3, 5, 7].map(IncidentWave::octant_direction);
        let problem = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k),
            20.0,
        );
        assert_eq!(problem.side_count(), 6);
        let mut t = vec![1.8; 6];
        t[0] = 18.0;
        let f = cost(&problem, &t);
        assert_abs_diff_eq!(f, 1e6 * problem.data_energy(), epsilon = 1e-3);
    }

    #[test]
    fn cost_is_nonnegative_and_zero_on_empty_selection() {
        let poly = example_triangle();
        let x0 = poly.centroid();
        let k = 6.0 * PI;
        let octants = [2u32, 4, 6].map(IncidentWave::octant_direction);
        let mut problem = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k),
            3.0,
        );
        for t in [[0.3, 0.4, 0.5], [1.0, 1.0, 1.0], [0.1, 2.9, 0.7]] {
            assert!(cost(&problem, &t) >= 0.0);
        }
        problem.selected.clear();
        assert_eq!(cost(&problem, &[0.5, 0.5, 0.5]), 0.0);
    }

    #[test]
    fn cost_residual_order_is_immaterial() {
        let poly = example_triangle();
        let x0 = poly.centroid();
        let k = 6.0 * PI;
        let octants = [2u32, 4, 6].map(IncidentWave::octant_direction);
        let problem = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k),
            3.0,
        );
        let mut reversed = problem.clone();
        reversed.selected.reverse();
        let t = vec![0.45, 0.5, 0.55];
        let a = cost(&problem, &t);
        let b = cost(&reversed, &t);
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn minimize_recovers_triangle_distances_from_uniform_start() {
        let poly = example_triangle();
        let x0 = Vec2::new(2.136, 0.217);
        let k = 10.0 * PI;
        let octants = [2u32, 4, 6, 8].map(IncidentWave::octant_direction);
        let problem = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k),
            3.0,
        );
        let truth: Vec<f64> = problem
            .normals
            .directions()
            .iter()
            .map(|&nu| {
                cells(&poly)
                    .iter()
                    .min_by(|a, b| {
                        a.normal
                            .angle_between(nu)
                            .total_cmp(&b.normal.angle_between(nu))
                    })
                    .map(|c| (c.a - x0).dot(c.normal))
                    .unwrap()
            })
            .collect();
        let result =
            minimize_distances(&problem, &[1.0, 1.0, 1.0], &MinimizeOptions::default()).unwrap();
        for (got, want) in result.distances.iter().zip(&truth) {
            assert!(
                (got - want).abs() <= 0.02 * want,
                "distance {got} vs truth {want}"
            );
        }
        assert!(result.final_cost <= cost(&problem, &[1.0, 1.0, 1.0]));
    }

    #[test]
    fn minimize_reports_budget_exhaustion_gracefully() {
        let poly = example_triangle();
        let x0 = poly.centroid();
        let k = 6.0 * PI;
        let octants = [2u32, 4, 6].map(IncidentWave::octant_direction);
        let problem = exact_problem(
            &poly,
            k,
            BoundaryCondition::SoundSoft,
            x0,
            &octants,
            PI / (10.0 * k),
            3.0,
        );
        let options = MinimizeOptions { max_evals: 40, scan_cycles: 0, ..Default::default() };
        let result = minimize_distances(&problem, &[0.5, 0.5, 0.5], &options).unwrap();
        assert!(!result.converged);
    }

    #[test]
    fn stage1_grid_peaks_recover_triangle_normals() {
        // End-to-end Stage 1 on exact grids: the four standard detecting
        // waves yield exactly the three true normals as strongest groups.
        let poly = example_triangle();
        let k = 6.0 * PI;
        let mut pairs = Vec::new();
        for (ai, j) in [2u32, 4, 6, 8].iter().enumerate() {
            let d = IncidentWave::octant_direction(*j);
            let wave = IncidentWave::new(k, d).unwrap();
            let grid = po_far_field_grid(&poly, &wave, BoundaryCondition::SoundSoft, 360);
            let peaks = detect_backscatter_peaks(&grid, 5, 2.0).unwrap();
            for p in &peaks.peaks {
                pairs.push(
                    CriticalPair::new(d, ai, grid.x_hat(p.index), p.index, p.mag2).unwrap(),
                );
            }
        }
        let set = group_effective_normals(&pairs, 10f64.to_radians()).strongest(3);
        assert_eq!(set.len(), 3);
        let true_normals: Vec<Vec2> = cells(&poly).iter().map(|c| c.normal).collect();
        for e in &set.normals {
            let err = true_normals
                .iter()
                .map(|t| t.angle_between(e.normal))
                .fold(f64::INFINITY, f64::min);
            assert!(err.to_degrees() <= 2.0, "normal error {}°", err.to_degrees());
        }
    }
}
