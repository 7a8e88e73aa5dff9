//! Measurement processing: uniform noise injection, Fourier low-pass
//! filtering, and backscatter peak detection.
//!
//! ```bash
//! cargo run --release --example noise_and_filter
//! ```

use backscatter::forward::{po_far_field_grid, BoundaryCondition};
use backscatter::geometry::{example_triangle, IncidentWave};
use backscatter::signal::{add_noise, detect_backscatter_peaks, fourier_filter, NoiseSpec};
use backscatter::vec2::Vec2;
use std::f64::consts::PI;

fn main() {
    let poly = example_triangle();
    let k = 6.0 * PI;
    let wave = IncidentWave::new(k, Vec2::new(0.0, 1.0)).unwrap();
    let clean = po_far_field_grid(&poly, &wave, BoundaryCondition::SoundSoft, 360);

    let spec = NoiseSpec::new(0.05, 42).unwrap();
    let noisy = add_noise(&clean, &spec);
    // Cutoff ~ 1.5·k·R for a scene of radius 3.
    let cutoff = (1.5 * k * 3.0).ceil() as usize;
    let filtered = fourier_filter(&noisy, cutoff.min(180)).unwrap();

    let rms = |a: &[num_complex::Complex64], b: &[num_complex::Complex64]| -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64).sqrt()
    };
    println!("noise level δ = {}, seed = {}", spec.delta(), spec.seed);
    println!("rms(noisy − clean)    = {:.5}", rms(&noisy.values, &clean.values));
    println!(
        "rms(filtered − clean) = {:.5}  (cutoff {} of 180 modes)",
        rms(&filtered.values, &clean.values),
        cutoff.min(180)
    );

    for (name, grid) in [("clean", &clean), ("noisy", &noisy), ("filtered", &filtered)] {
        let peaks = detect_backscatter_peaks(grid, 5, 2.0).unwrap();
        let angles: Vec<String> = peaks
            .peaks
            .iter()
            .take(4)
            .map(|p| format!("{:.0}°({:.2})", grid.angle_deg(p.index), p.mag2))
            .collect();
        println!("{name:>8}: {} backscatter peak(s): {}", peaks.peaks.len(), angles.join(", "));
    }
    println!("\nthe head-on retroreflection of the bottom side shows at 233°;");
    println!("filtering removes noise-induced spurious maxima.");
}
