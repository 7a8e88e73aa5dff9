//! Reconstruction quality against ground truth: dense-sampled symmetric
//! Hausdorff distance plus per-side normal and distance errors matched by
//! nearest normal angle.

use crate::geometry::{cells, ConvexPolygon};
use crate::oracle::dense_hausdorff;
use crate::recovery::ReconstructionResult;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Boundary samples per edge for the Hausdorff computation.
pub const HAUSDORFF_SAMPLES_PER_EDGE: usize = 1000;

/// One estimated side matched to its nearest true side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideMatch {
    pub estimated_index: usize,
    pub true_index: usize,
    pub normal_error_deg: f64,
    /// |l_est − l_true| / l_true with both distances taken from x₀.
    pub distance_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub hausdorff: f64,
    /// Hausdorff distance over the true diameter.
    pub hausdorff_rel_diameter: f64,
    pub side_matches: Vec<SideMatch>,
    /// Set when the side counts differ; per-side matches are then only
    /// nearest-angle associations, not a bijection.
    pub side_count_mismatch: bool,
}

impl Metrics {
    pub fn max_normal_error_deg(&self) -> f64 {
        self.side_matches
            .iter()
            .map(|m| m.normal_error_deg)
            .fold(0.0, f64::max)
    }

    pub fn max_distance_rel_error(&self) -> f64 {
        self.side_matches
            .iter()
            .map(|m| m.distance_rel_error)
            .fold(0.0, f64::max)
    }
}

/// Compares a reconstruction against the true polygon.
///
/// Each estimated side is matched to the true side with the nearest normal
/// angle (ties resolved toward the lower true index); distances are
/// measured from the shared location point `x0`.
pub fn compute_metrics(
    truth: &ConvexPolygon,
    x0: Vec2,
    result: &ReconstructionResult,
) -> Metrics {
    let hausdorff = dense_hausdorff(truth, &result.polygon, HAUSDORFF_SAMPLES_PER_EDGE);
    let diameter = truth.diameter();
    let true_cells = cells(truth);
    let est_cells = cells(&result.polygon);
    let side_matches = est_cells
        .iter()
        .map(|est| {
            let mut best = (0usize, f64::INFINITY);
            for t in &true_cells {
                let ang = est.normal.angle_between(t.normal);
                if ang < best.1 {
                    best = (t.index, ang);
                }
            }
            let t = &true_cells[best.0];
            let l_true = (t.a - x0).dot(t.normal);
            let l_est = (est.a - x0).dot(est.normal);
            SideMatch {
                estimated_index: est.index,
                true_index: best.0,
                normal_error_deg: best.1.to_degrees(),
                distance_rel_error: ((l_est - l_true) / l_true).abs(),
            }
        })
        .collect();
    Metrics {
        hausdorff,
        hausdorff_rel_diameter: hausdorff / diameter,
        side_matches,
        side_count_mismatch: true_cells.len() != est_cells.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::example_triangle;

    fn result_with(polygon: ConvexPolygon, x0: Vec2) -> ReconstructionResult {
        let distances = polygon.distances_from(x0);
        ReconstructionResult {
            distances,
            polygon,
            final_cost: 0.0,
            evaluations: 0,
            iterations: 0,
            final_step: 0.0,
            converged: true,
        }
    }

    #[test]
    fn truth_against_itself_is_zero() {
        let truth = example_triangle();
        let x0 = truth.centroid();
        let m = compute_metrics(&truth, x0, &result_with(truth.clone(), x0));
        assert!(m.hausdorff < 1e-12);
        assert_eq!(m.max_normal_error_deg(), 0.0);
        assert_eq!(m.max_distance_rel_error(), 0.0);
        assert!(!m.side_count_mismatch);
    }

    #[test]
    fn relabeled_truth_is_still_zero() {
        let truth = example_triangle();
        let x0 = truth.centroid();
        let mut vs = truth.vertices().to_vec();
        vs.rotate_left(2);
        let relabeled = ConvexPolygon::new(vs).unwrap();
        let m = compute_metrics(&truth, x0, &result_with(relabeled, x0));
        assert!(m.hausdorff < 1e-12);
        assert!(m.max_normal_error_deg() < 1e-12);
    }

    #[test]
    fn dilated_square_hausdorff_is_corner_distance() {
        let sq = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        let c = Vec2::new(0.5, 0.5);
        let big = ConvexPolygon::new(
            sq.vertices().iter().map(|&v| c + (v - c) * 1.1).collect(),
        )
        .unwrap();
        let m = compute_metrics(&sq, c, &result_with(big, c));
        let expected = 0.05 * 2f64.sqrt();
        assert!((m.hausdorff - expected).abs() < 1e-4);
        // Every distance grew by exactly 10%.
        for s in &m.side_matches {
            assert!((s.distance_rel_error - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn side_count_mismatch_is_flagged_but_measured() {
        let truth = example_triangle();
        let x0 = truth.centroid();
        let square = ConvexPolygon::new(vec![
            Vec2::new(1.2, -0.3),
            Vec2::new(2.4, -0.3),
            Vec2::new(2.4, 0.8),
            Vec2::new(1.2, 0.8),
        ])
        .unwrap();
        let m = compute_metrics(&truth, x0, &result_with(square, x0));
        assert!(m.side_count_mismatch);
        assert!(m.hausdorff > 0.0);
        assert_eq!(m.side_matches.len(), 4);
    }
}
