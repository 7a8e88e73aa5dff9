//! The independent reference routes: dense trapezoid quadrature versus the
//! closed-form oscillatory segment integral, and the explicit Householder
//! reflection versus the algebraic one.
//!
//! ```bash
//! cargo run --release --example oracle_check
//! ```

use backscatter::forward::segment_oscillatory_integral;
use backscatter::oracle::{dense_hausdorff, dense_segment_integral, householder_reflect};
use backscatter::geometry::example_triangle;
use backscatter::vec2::Vec2;
use std::f64::consts::PI;

fn main() {
    let a = Vec2::new(1.0, 0.0);
    let b = Vec2::new(2.5, -0.5);
    let k = 6.0 * PI;
    let w = Vec2::new(0.3, 0.7);
    let closed = segment_oscillatory_integral(a, b, k, w);
    println!("∫ e^{{iky·w}} ds over [({}, {}) → ({}, {})], k = {k:.6}:", a.x, a.y, b.x, b.y);
    println!("  closed form:          {:+.15e} {:+.15e}i", closed.re, closed.im);
    for panels in [100usize, 10_000, 100_000] {
        let q = dense_segment_integral(a, b, k, w, panels);
        println!(
            "  trapezoid n = {panels:>6}: {:+.15e} {:+.15e}i   (rel err {:.2e})",
            q.re,
            q.im,
            (q - closed).norm() / closed.norm()
        );
    }

    let d = Vec2::new(1.0, 0.0);
    let nu = Vec2::new(-1.0, 0.0);
    let r = householder_reflect(d, nu);
    println!("\nHouseholder reflection of (1,0) across the x = const line: ({}, {})", r.x, r.y);

    let t = example_triangle();
    println!(
        "dense Hausdorff(triangle, triangle) with 1000 samples/edge: {:.3e}",
        dense_hausdorff(&t, &t, 1000)
    );
}
