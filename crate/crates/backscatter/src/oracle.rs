//! Brute-force reference computations.
//!
//! These routines trade speed for independence: they avoid the closed forms
//! used on the production paths so they can serve as oracles for them. They
//! also back the `oracle` CLI subcommand that prints reference values at
//! full precision, and the dense Hausdorff distance is the production
//! reconstruction metric.

use crate::geometry::{cells, ConvexPolygon};
use crate::vec2::Vec2;
use num_complex::Complex64;

/// Dense composite-trapezoid evaluation of ∫_[a,b] e^{iky·w} ds(y).
pub fn dense_segment_integral(a: Vec2, b: Vec2, k: f64, w: Vec2, panels: usize) -> Complex64 {
    crate::forward::trapezoid_segment_integral(a, b, k, w, panels)
}

/// Reflection of `v` across the line with unit normal `unit_normal`, built
/// from the explicit 2×2 Householder matrix I − 2ννᵀ.
pub fn householder_reflect(v: Vec2, unit_normal: Vec2) -> Vec2 {
    let (nx, ny) = (unit_normal.x, unit_normal.y);
    // Row-major I − 2ννᵀ.
    let m = [
        [1.0 - 2.0 * nx * nx, -2.0 * nx * ny],
        [-2.0 * nx * ny, 1.0 - 2.0 * ny * ny],
    ];
    Vec2::new(
        m[0][0] * v.x + m[0][1] * v.y,
        m[1][0] * v.x + m[1][1] * v.y,
    )
}

/// Distance from point `p` to the segment [a, b].
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let len_sq = e.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(e) / len_sq).clamp(0.0, 1.0);
    p.dist(a + e * t)
}

/// Distance from `p` to the boundary of `poly`.
pub fn point_boundary_distance(p: Vec2, poly: &ConvexPolygon) -> f64 {
    cells(poly)
        .iter()
        .map(|c| point_segment_distance(p, c.a, c.b))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between two polygon boundaries by dense
/// boundary sampling with `samples_per_edge` points on every edge.
pub fn dense_hausdorff(
    a: &ConvexPolygon,
    b: &ConvexPolygon,
    samples_per_edge: usize,
) -> f64 {
    let n = samples_per_edge.max(2);
    let directed = |from: &ConvexPolygon, to: &ConvexPolygon| -> f64 {
        let mut worst = 0.0f64;
        for c in cells(from) {
            for i in 0..n {
                let t = i as f64 / n as f64;
                let p = c.a + (c.b - c.a) * t;
                worst = worst.max(point_boundary_distance(p, to));
            }
        }
        worst
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::example_triangle;

    #[test]
    fn householder_matches_direct_reflection_formula() {
        let v = Vec2::new(0.3, -1.2);
        for t in [0.0, 0.7, 2.1, 4.4] {
            let nu = Vec2::from_angle(t);
            let a = householder_reflect(v, nu);
            let b = v.reflect(nu);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn hausdorff_of_identical_polygons_is_zero() {
        let t = example_triangle();
        assert!(dense_hausdorff(&t, &t, 100) < 1e-12);
    }

    #[test]
    fn hausdorff_of_dilated_square() {
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
        // The outer corner is 0.05√2 from the inner boundary; the sampling
        // resolution bounds the accuracy.
        let h = dense_hausdorff(&sq, &big, 2000);
        let expected = 0.05 * 2f64.sqrt();
        assert!((h - expected).abs() < 1e-4, "h = {h}");
    }
}
