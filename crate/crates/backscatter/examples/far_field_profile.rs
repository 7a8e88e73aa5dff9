//! Forward model: evaluate the physical-optics far field of a convex
//! polygon and look at its angular profile.
//!
//! ```bash
//! cargo run --release --example far_field_profile
//! ```

use backscatter::forward::{po_far_field_grid, BoundaryCondition};
use backscatter::geometry::{
    check_admissibility, classify_faces, example_triangle, AdmissibilityThresholds, IncidentWave,
};
use backscatter::vec2::Vec2;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn main() {
    let poly = example_triangle();
    let k = 6.0 * PI;
    let d = Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    let wave = IncidentWave::new(k, d).unwrap();

    let report = check_admissibility(&poly, k, &AdmissibilityThresholds::default());
    println!("admissibility: k·diam = {:.2}, shortest side = {:.3},", report.k_diam, report.min_cell_len);
    println!(
        "               normal angles in [{:.1}°, {:.1}°], pass = {}",
        report.min_angle.to_degrees(),
        report.max_angle.to_degrees(),
        report.pass
    );

    let (front, back) = classify_faces(&poly, d);
    println!("incident from {:.1}°: {} illuminated side(s), {} shadowed", d.angle().to_degrees(), front.len(), back.len());

    let grid = po_far_field_grid(&poly, &wave, BoundaryCondition::SoundSoft, 360);
    println!("\n  θ(deg)    |u∞|²");
    let mag2: Vec<f64> = grid.values.iter().map(|v| v.norm_sqr()).collect();
    for i in (0..360).step_by(15) {
        let bar = "#".repeat((40.0 * mag2[i] / 22.0).round() as usize);
        println!("  {:6.1}  {:8.4}  {bar}", grid.angle_deg(i), mag2[i]);
    }

    let argmax = (0..360).max_by(|&i, &j| mag2[i].total_cmp(&mag2[j])).unwrap();
    println!("\nstrongest sample at θ = {}° (the forward direction is {:.0}°)", argmax, d.angle().to_degrees());
}
